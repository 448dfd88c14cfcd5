//! Quantum-readout PUF model.
//!
//! The device is a tensor product of λ single-qubit unitaries. Challenges
//! use the four-state qubit family `cos(φ⁽ℓ⁾/2)|0⟩ + sin(φ⁽ℓ⁾/2)|1⟩` with
//! `φ⁽¹⁾ = φ`, `φ⁽²⁾ = −φ`, `φ⁽³⁾ = φ − π`, `φ⁽⁴⁾ = π − φ`, two challenge
//! bits per qubit.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::mathcore::BitString;
use crate::qsim::{
    apply_unitary, conjugate_channel, make_unitary, measure_all, DensityMatrix, PureQubit,
    QubitRegister, ShifterAngles, SingleQubitUnitary,
};

/// Bits of `w` per qubit: 16 for `α`, 16 for `β`.
pub const W_BITS_PER_QUBIT: usize = 32;
const W_FIELD_MAX: f64 = 65535.0;

/// A physical device that turns λ input qubits into λ outcome qubits.
pub trait QuantumDevice: Send + Sync {
    fn lambda(&self) -> usize;

    /// Physical response to a (possibly mixed) product input.
    fn respond(&self, input: &[DensityMatrix], rng: &mut dyn RngCore)
        -> Result<Vec<DensityMatrix>>;

    /// Noiseless outcome state, as characterized by the Certifier.
    fn characterize(&self, input: &QubitRegister, rng: &mut dyn RngCore)
        -> Result<QubitRegister>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub omega: f64,
    pub psi: f64,
    pub chi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QrPuf {
    params: Vec<GateParams>,
    gates: Vec<SingleQubitUnitary>,
}

impl QrPuf {
    pub fn new(params: Vec<GateParams>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidParameter("lambda must be at least 1".into()));
        }
        let gates = params
            .iter()
            .map(|g| make_unitary(g.omega, g.psi, g.chi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, gates })
    }

    /// A device with `ψ = χ = 0` on every qubit (real rotations).
    pub fn real_rotations(omegas: &[f64]) -> Result<Self> {
        Self::new(
            omegas
                .iter()
                .map(|&omega| GateParams {
                    omega,
                    psi: 0.0,
                    chi: 0.0,
                })
                .collect(),
        )
    }

    pub fn params(&self) -> &[GateParams] {
        &self.params
    }

    pub fn gates(&self) -> &[SingleQubitUnitary] {
        &self.gates
    }
}

impl QuantumDevice for QrPuf {
    fn lambda(&self) -> usize {
        self.gates.len()
    }

    fn respond(
        &self,
        input: &[DensityMatrix],
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<DensityMatrix>> {
        check_register_len(self.lambda(), input.len())?;
        Ok(self
            .gates
            .iter()
            .zip(input)
            .map(|(u, rho)| conjugate_channel(u, rho))
            .collect())
    }

    fn characterize(
        &self,
        input: &QubitRegister,
        _rng: &mut dyn RngCore,
    ) -> Result<QubitRegister> {
        evaluate(self, input)
    }
}

pub(crate) fn check_register_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

/// Draws `ω ∈ [0, π/2]`, `ψ, χ ∈ [0, 2π)` independently and uniformly per qubit.
pub fn sample_qrpuf<R: Rng + ?Sized>(lambda: usize, rng: &mut R) -> Result<QrPuf> {
    if lambda == 0 {
        return Err(Error::InvalidParameter("lambda must be at least 1".into()));
    }
    let params = (0..lambda)
        .map(|_| GateParams {
            omega: rng.gen_range(0.0..=FRAC_PI_2),
            psi: rng.gen_range(0.0..TAU),
            chi: rng.gen_range(0.0..TAU),
        })
        .collect();
    QrPuf::new(params)
}

pub fn evaluate(puf: &QrPuf, reg: &QubitRegister) -> Result<QubitRegister> {
    check_register_len(puf.gates.len(), reg.len())?;
    QubitRegister::new(
        puf.gates
            .iter()
            .zip(reg.qubits())
            .map(|(u, q)| apply_unitary(u, q))
            .collect(),
    )
}

/// One of the four per-qubit challenge states, numbered 1 to 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateIndex(u8);

impl StateIndex {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=4).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::InvalidParameter(format!(
                "state index {index} is not in 1..=4"
            )))
        }
    }

    /// 00→1, 01→2, 10→3, 11→4.
    pub fn from_bits(hi: bool, lo: bool) -> Self {
        Self(1 + 2 * u8::from(hi) + u8::from(lo))
    }

    pub fn bits(self) -> (bool, bool) {
        let v = self.0 - 1;
        (v & 2 != 0, v & 1 != 0)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> [StateIndex; 4] {
        [Self(1), Self(2), Self(3), Self(4)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChallengeEncoding {
    phi: f64,
    lambda: usize,
}

impl ChallengeEncoding {
    pub const BITS_PER_QUBIT: usize = 2;

    pub fn new(phi: f64, lambda: usize) -> Result<Self> {
        check_range("phi", phi, 0.0, PI, "[0, π]")?;
        if lambda == 0 {
            return Err(Error::InvalidParameter("lambda must be at least 1".into()));
        }
        Ok(Self { phi, lambda })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    /// Challenge length `n = 2λ`.
    pub fn challenge_len(&self) -> usize {
        Self::BITS_PER_QUBIT * self.lambda
    }

    /// `φ⁽ℓ⁾`.
    pub fn state_angle(&self, state: StateIndex) -> f64 {
        state_angle(state, self.phi)
    }

    pub fn state(&self, state: StateIndex) -> PureQubit {
        PureQubit::from_real_angle(self.state_angle(state) / 2.0)
    }

    pub fn state_indices(&self, x: &BitString) -> Result<Vec<StateIndex>> {
        if x.len() != self.challenge_len() {
            return Err(Error::LengthMismatch {
                expected: self.challenge_len(),
                actual: x.len(),
            });
        }
        Ok(x.bits()
            .chunks(2)
            .map(|pair| StateIndex::from_bits(pair[0], pair[1]))
            .collect())
    }

    pub fn challenge_from_states(states: &[StateIndex]) -> BitString {
        states
            .iter()
            .flat_map(|s| {
                let (hi, lo) = s.bits();
                [hi, lo]
            })
            .collect()
    }
}

fn state_angle(state: StateIndex, phi: f64) -> f64 {
    match state.0 {
        1 => phi,
        2 => -phi,
        3 => phi - PI,
        _ => PI - phi,
    }
}

pub fn encode_challenge(x: &BitString, enc: &ChallengeEncoding) -> Result<QubitRegister> {
    QubitRegister::new(
        enc.state_indices(x)?
            .into_iter()
            .map(|s| enc.state(s))
            .collect(),
    )
}

/// Probability of reading `1` when shifter `l` meets state `l_prime`:
/// `sin²((φ⁽ℓ⁾ − φ⁽ℓ′⁾)/2)`.
pub fn wrong_state_error(l: u8, l_prime: u8, phi: f64) -> Result<f64> {
    let (a, b) = (StateIndex::new(l)?, StateIndex::new(l_prime)?);
    Ok(state_pair_error(a, b, phi))
}

fn state_pair_error(a: StateIndex, b: StateIndex, phi: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let half = (state_angle(a, phi) - state_angle(b, phi)) / 2.0;
    half.sin().powi(2)
}

/// Expected error weight when challenge `x_j` is implemented against the
/// shifters of `x_i`.
pub fn pairwise_error(x_i: &BitString, x_j: &BitString, enc: &ChallengeEncoding) -> Result<f64> {
    let a = enc.state_indices(x_i)?;
    let b = enc.state_indices(x_j)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(&s, &t)| state_pair_error(s, t, enc.phi))
        .sum())
}

/// `pairwise_error` for every ordered pair of `challenges`.
pub fn error_matrix(challenges: &[BitString], enc: &ChallengeEncoding) -> Result<Vec<Vec<f64>>> {
    let table: Vec<[f64; 4]> = StateIndex::all()
        .iter()
        .map(|&a| StateIndex::all().map(|b| state_pair_error(a, b, enc.phi)))
        .collect();
    let indices = challenges
        .iter()
        .map(|x| enc.state_indices(x))
        .collect::<Result<Vec<_>>>()?;
    let n = challenges.len();
    let mut err = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let e: f64 = indices[i]
                .iter()
                .zip(&indices[j])
                .map(|(s, t)| table[s.0 as usize - 1][t.0 as usize - 1])
                .sum();
            err[i][j] = e;
            err[j][i] = e;
        }
    }
    Ok(err)
}

/// Shifter for one enrolled challenge.
#[derive(Clone, Debug, PartialEq)]
pub struct ShifterEntry {
    pub w: BitString,
    pub angles: Vec<ShifterAngles>,
    pub gates: Vec<SingleQubitUnitary>,
}

impl ShifterEntry {
    pub fn from_angles(angles: Vec<ShifterAngles>) -> Self {
        let gates = angles.iter().map(ShifterAngles::unitary).collect();
        Self {
            w: encode_shifter_code(&angles),
            angles,
            gates,
        }
    }

    /// Rebuilds the shifter from its serialized code.
    pub fn from_code(w: &BitString) -> Result<Self> {
        let angles = decode_shifter_code(w)?;
        let gates = angles.iter().map(ShifterAngles::unitary).collect();
        Ok(Self {
            w: w.clone(),
            angles,
            gates,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShifterBank {
    entries: BTreeMap<BitString, ShifterEntry>,
}

impl ShifterBank {
    pub fn get(&self, x: &BitString) -> Option<&ShifterEntry> {
        self.entries.get(x)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, &ShifterEntry)> {
        self.entries.iter()
    }
}

pub fn build_shifters(
    puf: &QrPuf,
    challenges: &[BitString],
    enc: &ChallengeEncoding,
) -> Result<ShifterBank> {
    let mut entries = BTreeMap::new();
    for x in challenges {
        let outcome = evaluate(puf, &encode_challenge(x, enc)?)?;
        entries.insert(x.clone(), shifter_for(&outcome));
    }
    Ok(ShifterBank { entries })
}

pub fn shifter_for(outcome: &QubitRegister) -> ShifterEntry {
    ShifterEntry::from_angles(outcome.qubits().iter().map(ShifterAngles::of).collect())
}

/// Serializes shifter angles: per qubit, 16 bits of `α/(π/2)` then 16 bits
/// of `β/(2π)`, each big-endian and scaled to `2¹⁶ − 1`.
pub fn encode_shifter_code(angles: &[ShifterAngles]) -> BitString {
    let mut w = BitString::default();
    for a in angles {
        let alpha = quantize(a.alpha / FRAC_PI_2);
        let beta = quantize(a.beta / TAU);
        w = w.concat(&BitString::from_u64(alpha, 16));
        w = w.concat(&BitString::from_u64(beta, 16));
    }
    w
}

fn quantize(fraction: f64) -> u64 {
    (fraction.clamp(0.0, 1.0) * W_FIELD_MAX).round() as u64
}

pub fn decode_shifter_code(w: &BitString) -> Result<Vec<ShifterAngles>> {
    if w.is_empty() || w.len() % W_BITS_PER_QUBIT != 0 {
        return Err(Error::InvalidParameter(format!(
            "shifter code length {} is not a positive multiple of {W_BITS_PER_QUBIT}",
            w.len()
        )));
    }
    Ok((0..w.len() / W_BITS_PER_QUBIT)
        .map(|k| {
            let base = k * W_BITS_PER_QUBIT;
            let alpha = w.slice(base, base + 16).to_u64() as f64 / W_FIELD_MAX;
            let beta = w.slice(base + 16, base + 32).to_u64() as f64 / W_FIELD_MAX;
            ShifterAngles {
                alpha: alpha * FRAC_PI_2,
                beta: beta * TAU,
            }
        })
        .collect())
}

/// Where the depolarizing channel acts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseInsertion {
    #[default]
    Challenge,
    Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumNoise {
    pub p: f64,
    pub insertion: NoiseInsertion,
}

impl QuantumNoise {
    pub fn new(p: f64, insertion: NoiseInsertion) -> Result<Self> {
        check_range("noise p", p, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { p, insertion })
    }

    pub fn noiseless() -> Self {
        Self {
            p: 0.0,
            insertion: NoiseInsertion::Challenge,
        }
    }

    fn apply(&self, states: Vec<DensityMatrix>) -> Result<Vec<DensityMatrix>> {
        if self.p == 0.0 {
            return Ok(states);
        }
        states.iter().map(|rho| rho.depolarized(self.p)).collect()
    }
}

/// Prepares `challenge`, passes it through `device`, applies `shifters` and
/// measures every qubit. Noise acts at the configured insertion point.
pub fn noisy_readout(
    device: &dyn QuantumDevice,
    challenge: &QubitRegister,
    shifters: &[SingleQubitUnitary],
    noise: &QuantumNoise,
    rng: &mut dyn RngCore,
) -> Result<BitString> {
    check_register_len(device.lambda(), challenge.len())?;
    check_register_len(challenge.len(), shifters.len())?;
    let mut states = challenge.to_density();
    if noise.insertion == NoiseInsertion::Challenge {
        states = noise.apply(states)?;
    }
    states = device.respond(&states, rng)?;
    check_register_len(shifters.len(), states.len())?;
    if noise.insertion == NoiseInsertion::Outcome {
        states = noise.apply(states)?;
    }
    let shifted: Vec<DensityMatrix> = shifters
        .iter()
        .zip(&states)
        .map(|(u, rho)| conjugate_channel(u, rho))
        .collect();
    Ok(measure_all(&shifted, rng))
}

/// Error string `o` for an enrolled challenge read through `puf`.
pub fn readout(
    puf: &QrPuf,
    bank: &ShifterBank,
    x: &BitString,
    enc: &ChallengeEncoding,
    noise: &QuantumNoise,
    rng: &mut dyn RngCore,
) -> Result<BitString> {
    let entry = bank
        .get(x)
        .ok_or_else(|| Error::UnknownChallenge(x.to_string()))?;
    noisy_readout(puf, &encode_challenge(x, enc)?, &entry.gates, noise, rng)
}
