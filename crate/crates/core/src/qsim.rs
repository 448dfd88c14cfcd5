//! Exact single-qubit simulation.
//!
//! Registers are separable, so every object here is a 2-vector or a 2×2
//! matrix and a λ-qubit register is a list of them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{check_range, Error, Result};
use crate::mathcore::BitString;

/// Tolerance for algebraic identities (normalization, unitarity, trace).
pub const ALGEBRA_TOL: f64 = 1e-12;

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn dagger(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn max_entry_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((a[i][j] - b[i][j]).norm());
        }
    }
    worst
}

const IDENTITY: Mat2 = [[ONE, ZERO], [ZERO, ONE]];

/// A normalized single-qubit pure state `amp0 |0⟩ + amp1 |1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureQubit {
    amp0: Complex64,
    amp1: Complex64,
}

impl PureQubit {
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let norm = amp0.norm_sqr() + amp1.norm_sqr();
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::InvalidParameter(format!(
                "qubit amplitudes have squared norm {norm}"
            )));
        }
        Ok(Self { amp0, amp1 })
    }

    pub fn zero() -> Self {
        Self {
            amp0: ONE,
            amp1: ZERO,
        }
    }

    pub fn one() -> Self {
        Self {
            amp0: ZERO,
            amp1: ONE,
        }
    }

    /// `cos a |0⟩ + sin a |1⟩` for any real `a`.
    ///
    /// Identical to `make_qubit(a, 0)` on `[0, π]`; negative angles give the
    /// state `make_qubit(|a|, π)`.
    pub fn from_real_angle(angle: f64) -> Self {
        Self {
            amp0: Complex64::new(angle.cos(), 0.0),
            amp1: Complex64::new(angle.sin(), 0.0),
        }
    }

    pub fn amp0(&self) -> Complex64 {
        self.amp0
    }

    pub fn amp1(&self) -> Complex64 {
        self.amp1
    }

    pub fn inner(&self, other: &PureQubit) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureQubit) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Removes the global phase so that `amp0` is real and non-negative.
    pub fn canonical(&self) -> PureQubit {
        let r = self.amp0.norm();
        if r <= f64::EPSILON {
            // amp0 == 0: rotate amp1 onto the positive real axis instead
            return PureQubit {
                amp0: ZERO,
                amp1: Complex64::new(self.amp1.norm(), 0.0),
            };
        }
        let phase = self.amp0.conj() / r;
        PureQubit {
            amp0: Complex64::new(r, 0.0),
            amp1: self.amp1 * phase,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        // uniform on the Bloch sphere
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..TAU);
        let theta = z.acos() / 2.0;
        let global: f64 = rng.gen_range(0.0..TAU);
        let g = Complex64::from_polar(1.0, global);
        PureQubit {
            amp0: g * theta.cos(),
            amp1: g * Complex64::from_polar(theta.sin(), phi),
        }
    }

    fn renormalized(amp0: Complex64, amp1: Complex64) -> Self {
        let n = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        Self {
            amp0: amp0 / n,
            amp1: amp1 / n,
        }
    }
}

/// `cos θ |0⟩ + e^{iφ} sin θ |1⟩` with `θ ∈ [0, π]`, `φ ∈ [0, 2π]`.
pub fn make_qubit(theta: f64, phi: f64) -> Result<PureQubit> {
    check_range("theta", theta, 0.0, PI, "[0, π]")?;
    check_range("phi", phi, 0.0, TAU, "[0, 2π]")?;
    Ok(PureQubit {
        amp0: Complex64::new(theta.cos(), 0.0),
        amp1: Complex64::from_polar(theta.sin(), phi),
    })
}

/// A 2×2 unitary matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleQubitUnitary {
    m: Mat2,
}

impl SingleQubitUnitary {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = Self { m: entries };
        let err = u.unitarity_error();
        if err > ALGEBRA_TOL {
            return Err(Error::InvalidParameter(format!(
                "matrix is not unitary (max |UU† - I| = {err:e})"
            )));
        }
        Ok(u)
    }

    pub fn identity() -> Self {
        Self { m: IDENTITY }
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    pub fn dagger(&self) -> Self {
        Self { m: dagger(&self.m) }
    }

    pub fn compose(&self, then: &SingleQubitUnitary) -> Self {
        Self {
            m: matmul(&then.m, &self.m),
        }
    }

    /// Largest entrywise deviation of `UU†` and `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let d = dagger(&self.m);
        max_entry_diff(&matmul(&self.m, &d), &IDENTITY)
            .max(max_entry_diff(&matmul(&d, &self.m), &IDENTITY))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_entry_diff(&self.m, &dagger(&self.m)) <= tol
    }

    /// Entrywise distance after removing the best global phase.
    pub fn distance_up_to_phase(&self, other: &SingleQubitUnitary) -> f64 {
        // tr(A† B) carries the relative phase
        let d = dagger(&self.m);
        let tr = matmul(&d, &other.m);
        let t = tr[0][0] + tr[1][1];
        let phase = if t.norm() > f64::EPSILON {
            t / t.norm()
        } else {
            ONE
        };
        let mut scaled = self.m;
        for row in scaled.iter_mut() {
            for c in row.iter_mut() {
                *c *= phase;
            }
        }
        max_entry_diff(&scaled, &other.m)
    }
}

/// The three-angle single-qubit unitary
/// `[[e^{iψ} cos ω, e^{iχ} sin ω], [−e^{−iχ} sin ω, e^{−iψ} cos ω]]`.
pub fn make_unitary(omega: f64, psi: f64, chi: f64) -> Result<SingleQubitUnitary> {
    check_range("omega", omega, 0.0, FRAC_PI_2, "[0, π/2]")?;
    check_range("psi", psi, 0.0, TAU, "[0, 2π]")?;
    check_range("chi", chi, 0.0, TAU, "[0, 2π]")?;
    let (s, c) = omega.sin_cos();
    Ok(SingleQubitUnitary {
        m: [
            [
                Complex64::from_polar(c, psi),
                Complex64::from_polar(s, chi),
            ],
            [
                -Complex64::from_polar(s, -chi),
                Complex64::from_polar(c, -psi),
            ],
        ],
    })
}

pub fn apply_unitary(u: &SingleQubitUnitary, s: &PureQubit) -> PureQubit {
    let m = &u.m;
    PureQubit::renormalized(
        m[0][0] * s.amp0 + m[0][1] * s.amp1,
        m[1][0] * s.amp0 + m[1][1] * s.amp1,
    )
}

/// Angles `(α, β)` of a canonical state `cos α |0⟩ + e^{iβ} sin α |1⟩`,
/// with `α ∈ [0, π/2]` and `β ∈ [0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShifterAngles {
    pub alpha: f64,
    pub beta: f64,
}

impl ShifterAngles {
    pub fn of(target: &PureQubit) -> Self {
        let c = target.canonical();
        let alpha = c.amp0.re.clamp(0.0, 1.0).acos();
        let beta = if c.amp1.norm() <= f64::EPSILON {
            0.0
        } else {
            c.amp1.arg().rem_euclid(TAU)
        };
        // rem_euclid can round up to exactly 2π
        let beta = if beta >= TAU { 0.0 } else { beta };
        Self { alpha, beta }
    }

    /// `[[cos α, e^{−iβ} sin α], [e^{iβ} sin α, −cos α]]`.
    pub fn unitary(&self) -> SingleQubitUnitary {
        let (s, c) = self.alpha.sin_cos();
        SingleQubitUnitary {
            m: [
                [Complex64::new(c, 0.0), Complex64::from_polar(s, -self.beta)],
                [Complex64::from_polar(s, self.beta), Complex64::new(-c, 0.0)],
            ],
        }
    }
}

/// The Hermitian unitary mapping `target` onto `|0⟩`.
///
/// The result is exact for canonical targets (real non-negative `amp0`);
/// otherwise `U·target` is `|0⟩` times the global phase of `target.amp0`.
pub fn synthesize_shifter(target: &PureQubit) -> SingleQubitUnitary {
    ShifterAngles::of(target).unitary()
}

/// A 2×2 density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    m: Mat2,
}

impl DensityMatrix {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let rho = Self { m: entries };
        if max_entry_diff(&rho.m, &dagger(&rho.m)) > ALGEBRA_TOL {
            return Err(Error::InvalidParameter("matrix is not Hermitian".into()));
        }
        if (rho.trace() - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::InvalidParameter(format!(
                "trace is {}",
                rho.trace()
            )));
        }
        if rho.eigenvalues().0 < -ALGEBRA_TOL {
            return Err(Error::InvalidParameter("matrix is not positive".into()));
        }
        Ok(rho)
    }

    pub fn pure(s: &PureQubit) -> Self {
        let a = [s.amp0, s.amp1];
        let mut m = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i] * a[j].conj();
            }
        }
        Self { m }
    }

    pub fn maximally_mixed() -> Self {
        let h = Complex64::new(0.5, 0.0);
        Self {
            m: [[h, ZERO], [ZERO, h]],
        }
    }

    pub fn diagonal(p0: f64, p1: f64) -> Result<Self> {
        Self::new([
            [Complex64::new(p0, 0.0), ZERO],
            [ZERO, Complex64::new(p1, 0.0)],
        ])
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (self.m[0][0] + self.m[1][1]).re
    }

    /// `(λ_min, λ_max)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = self.m[0][1].norm();
        let mid = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mid - r, mid + r)
    }

    /// `⟨1|ρ|1⟩`, clamped to `[0, 1]`.
    pub fn prob_one(&self) -> f64 {
        self.m[1][1].re.clamp(0.0, 1.0)
    }

    /// `⟨s|ρ|s⟩`.
    pub fn fidelity_with(&self, s: &PureQubit) -> f64 {
        let a = [s.amp0, s.amp1];
        let mut acc = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                acc += a[i].conj() * self.m[i][j] * a[j];
            }
        }
        acc.re
    }

    /// `(1 − p) ρ + p 𝕀/2`.
    pub fn depolarized(&self, p: f64) -> Result<Self> {
        check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        let mut m = self.m;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c *= 1.0 - p;
                if i == j {
                    *c += 0.5 * p;
                }
            }
        }
        Ok(Self { m })
    }

    pub fn max_entry_diff(&self, other: &DensityMatrix) -> f64 {
        max_entry_diff(&self.m, &other.m)
    }
}

/// `(1 − p)|s⟩⟨s| + p 𝕀/2`.
pub fn depolarize(s: &PureQubit, p: f64) -> Result<DensityMatrix> {
    DensityMatrix::pure(s).depolarized(p)
}

/// `U ρ U†`.
pub fn conjugate_channel(u: &SingleQubitUnitary, rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix {
        m: matmul(&matmul(&u.m, &rho.m), &dagger(&u.m)),
    }
}

/// Samples one computational-basis measurement; `true` means `|1⟩`.
///
/// Consumes exactly one `f64` draw.
pub fn measure_computational<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> bool {
    let u: f64 = rng.gen();
    u < rho.prob_one()
}

/// Measures every qubit in index order, one draw per qubit.
pub fn measure_all<R: Rng + ?Sized>(states: &[DensityMatrix], rng: &mut R) -> BitString {
    states
        .iter()
        .map(|rho| measure_computational(rho, rng))
        .collect()
}

/// A separable register of λ ≥ 1 pure qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitRegister {
    qubits: Vec<PureQubit>,
}

impl QubitRegister {
    pub fn new(qubits: Vec<PureQubit>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::InvalidParameter(
                "a register needs at least one qubit".into(),
            ));
        }
        Ok(Self { qubits })
    }

    pub fn all_zero(lambda: usize) -> Result<Self> {
        Self::new(vec![PureQubit::zero(); lambda])
    }

    /// Computational basis state `|b_0 b_1 …⟩`.
    pub fn basis(bits: &BitString) -> Result<Self> {
        Self::new(
            bits.iter()
                .map(|b| if b { PureQubit::one() } else { PureQubit::zero() })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn qubits(&self) -> &[PureQubit] {
        &self.qubits
    }

    pub fn to_density(&self) -> Vec<DensityMatrix> {
        self.qubits.iter().map(DensityMatrix::pure).collect()
    }

    /// Product fidelity `Π_k |⟨a_k|b_k⟩|²`.
    pub fn fidelity(&self, other: &QubitRegister) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .qubits
            .iter()
            .zip(&other.qubits)
            .map(|(a, b)| a.fidelity(b))
            .product())
    }
}
