//! Attack models. Eve interferes only by wrapping the device that a
//! [`Session`] verifies; she sees public helper data and verdicts, never the
//! table itself.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::classical_puf::{signed_features, ClassicalDevice};
use crate::error::{check_range, Error, Result};
use crate::fuzzy::HelperData;
use crate::mathcore::BitString;
use crate::protocol::{CrtDims, DeviceRef, PufKind, Session};
use crate::qrpuf::{check_register_len, QuantumDevice};
use crate::qsim::{
    apply_unitary, conjugate_channel, depolarize, measure_computational, DensityMatrix, PureQubit,
    QubitRegister, SingleQubitUnitary,
};

/// `F(φ, λ) = ((1 + √(sin⁴φ + cos⁴φ)) / 2)^λ`.
pub fn clone_fidelity(phi: f64, lambda: usize) -> Result<f64> {
    if lambda == 0 {
        return Err(Error::InvalidParameter("lambda must be at least 1".into()));
    }
    let (s, c) = (phi.sin().powi(2), phi.cos().powi(2));
    Ok(((1.0 + (s * s + c * c).sqrt()) / 2.0).powi(lambda as i32))
}

/// Grid point in `[0, π/2]` where `F(φ, 1)` is smallest, with its value.
pub fn fidelity_grid_minimum(points: usize) -> Result<(f64, f64)> {
    if points < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let step = FRAC_PI_2 / (points - 1) as f64;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..points {
        let phi = i as f64 * step;
        let f = clone_fidelity(phi, 1)?;
        if f < best.1 {
            best = (phi, f);
        }
    }
    Ok(best)
}

/// Depolarizing rate whose output fidelity with a pure input is `F(φ, 1)`.
pub fn cloner_depolarizing_rate(phi: f64) -> f64 {
    2.0 * (1.0 - clone_fidelity(phi, 1).expect("lambda = 1"))
}

/// State returned to Alice after Eve's optimal cloner acts on `qubit`.
pub fn cloner_channel(qubit: &PureQubit, phi: f64) -> DensityMatrix {
    depolarize(qubit, cloner_depolarizing_rate(phi).clamp(0.0, 1.0)).expect("rate in [0, 1]")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Computational,
    Diagonal,
}

/// Which transit legs Eve touches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Legs {
    ChallengeOnly,
    #[default]
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackModel {
    /// No interference and nothing captured.
    Passive,
    /// Classical challenge and outcome states read exactly, undisturbed.
    ClassicalRead,
    InterceptResend { basis: Basis, legs: Legs },
    OptimalCloner { phi: f64, basis: Basis, legs: Legs },
}

impl AttackModel {
    pub fn name(&self) -> &'static str {
        match self {
            AttackModel::Passive => "passive",
            AttackModel::ClassicalRead => "classical-read",
            AttackModel::InterceptResend { .. } => "intercept-resend",
            AttackModel::OptimalCloner { .. } => "optimal-cloner",
        }
    }

    fn fits(&self, kind: PufKind) -> bool {
        match self {
            AttackModel::Passive => true,
            AttackModel::ClassicalRead => kind == PufKind::Classical,
            _ => kind == PufKind::Qr,
        }
    }
}

/// What Eve captured in one round.
#[derive(Clone, Debug, PartialEq)]
pub enum Capture {
    Classical {
        challenge: BitString,
        outcome: BitString,
    },
    /// Eve's measurement results, one bit per qubit.
    Quantum {
        challenge: BitString,
        outcome: Option<BitString>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub helper: HelperData,
    pub accepted: bool,
    pub capture: Option<Capture>,
}

/// Eve's record of the passive phase. Holds no responses.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub dims: CrtDims,
    pub attack: AttackModel,
    pub rounds: Vec<Round>,
}

impl Transcript {
    pub fn q(&self) -> usize {
        self.rounds.len()
    }

    pub fn kind(&self) -> PufKind {
        self.dims.kind()
    }

    /// Fraction of observed genuine rounds that failed.
    pub fn disturbance(&self) -> f64 {
        if self.rounds.is_empty() {
            0.0
        } else {
            self.rounds.iter().filter(|r| !r.accepted).count() as f64 / self.rounds.len() as f64
        }
    }
}

fn hadamard() -> SingleQubitUnitary {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    SingleQubitUnitary::new([[h, h], [h, -h]]).expect("Hadamard is unitary")
}

fn measure_in(rho: &DensityMatrix, basis: Basis, rng: &mut dyn RngCore) -> bool {
    match basis {
        Basis::Computational => measure_computational(rho, rng),
        Basis::Diagonal => measure_computational(&conjugate_channel(&hadamard(), rho), rng),
    }
}

fn prepare(bit: bool, basis: Basis) -> PureQubit {
    let s = if bit { PureQubit::one() } else { PureQubit::zero() };
    match basis {
        Basis::Computational => s,
        Basis::Diagonal => apply_unitary(&hadamard(), &s),
    }
}

/// Acts on one leg; returns the forwarded states and Eve's bits.
fn tap(
    states: &[DensityMatrix],
    attack: &AttackModel,
    rng: &mut dyn RngCore,
) -> Result<(Vec<DensityMatrix>, BitString)> {
    let mut forwarded = Vec::with_capacity(states.len());
    let mut bits = Vec::with_capacity(states.len());
    for rho in states {
        match *attack {
            AttackModel::InterceptResend { basis, .. } => {
                let b = measure_in(rho, basis, rng);
                forwarded.push(DensityMatrix::pure(&prepare(b, basis)));
                bits.push(b);
            }
            AttackModel::OptimalCloner { phi, basis, .. } => {
                let p = cloner_depolarizing_rate(phi);
                forwarded.push(rho.depolarized(p)?);
                bits.push(measure_in(&rho.depolarized(p)?, basis, rng));
            }
            _ => unreachable!("only quantum attacks tap qubits"),
        }
    }
    Ok((forwarded, BitString::new(bits)))
}

struct QuantumTap<'a> {
    inner: &'a dyn QuantumDevice,
    attack: AttackModel,
    log: Mutex<Option<Capture>>,
}

impl QuantumDevice for QuantumTap<'_> {
    fn lambda(&self) -> usize {
        self.inner.lambda()
    }

    fn respond(
        &self,
        input: &[DensityMatrix],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<DensityMatrix>> {
        let legs = match self.attack {
            AttackModel::InterceptResend { legs, .. } | AttackModel::OptimalCloner { legs, .. } => legs,
            _ => return self.inner.respond(input, rng),
        };
        let (forwarded, challenge) = tap(input, &self.attack, rng)?;
        let out = self.inner.respond(&forwarded, rng)?;
        let (out, outcome) = if legs == Legs::Both {
            let (o, bits) = tap(&out, &self.attack, rng)?;
            (o, Some(bits))
        } else {
            (out, None)
        };
        *self.log.lock().expect("tap log") = Some(Capture::Quantum { challenge, outcome });
        Ok(out)
    }

    fn characterize(
        &self,
        input: &QubitRegister,
        rng: &mut dyn RngCore,
    ) -> Result<QubitRegister> {
        self.inner.characterize(input, rng)
    }
}

struct ClassicalTap<'a> {
    inner: &'a dyn ClassicalDevice,
    read: bool,
    log: Mutex<Option<Capture>>,
}

impl ClassicalDevice for ClassicalTap<'_> {
    fn challenge_len(&self) -> usize {
        self.inner.challenge_len()
    }

    fn outcome_len(&self) -> usize {
        self.inner.outcome_len()
    }

    fn respond(&self, x: &BitString, rng: &mut dyn RngCore) -> Result<BitString> {
        let outcome = self.inner.respond(x, rng)?;
        if self.read {
            *self.log.lock().expect("tap log") = Some(Capture::Classical {
                challenge: x.clone(),
                outcome: outcome.clone(),
            });
        }
        Ok(outcome)
    }
}

/// Passive phase: `q` genuine rounds with `attack` on the channel.
pub fn observe(
    session: &mut Session,
    device: DeviceRef,
    attack: &AttackModel,
    q: usize,
    rng: &mut dyn RngCore,
) -> Result<Transcript> {
    if !attack.fits(device.kind()) {
        return Err(Error::ModelMismatch {
            model: attack.name(),
            transcript: kind_name(device.kind()),
        });
    }
    if !session.allows_reuse() && q > session.available() {
        return Err(Error::NotEnoughEntries {
            requested: q,
            available: session.available(),
        });
    }
    let mut rounds = Vec::with_capacity(q);
    for _ in 0..q {
        let (v, capture) = match device {
            DeviceRef::Qr(inner) => {
                let tap = QuantumTap {
                    inner,
                    attack: *attack,
                    log: Mutex::new(None),
                };
                let v = session.round(DeviceRef::Qr(&tap), rng)?;
                (v, tap.log.into_inner().expect("tap log"))
            }
            DeviceRef::Classical(inner) => {
                let tap = ClassicalTap {
                    inner,
                    read: *attack == AttackModel::ClassicalRead,
                    log: Mutex::new(None),
                };
                let v = session.round(DeviceRef::Classical(&tap), rng)?;
                (v, tap.log.into_inner().expect("tap log"))
            }
        };
        rounds.push(Round {
            helper: v.helper,
            accepted: v.verdict.accepted(),
            capture,
        });
    }
    Ok(Transcript {
        dims: session.dims().clone(),
        attack: *attack,
        rounds,
    })
}

fn kind_name(kind: PufKind) -> &'static str {
    match kind {
        PufKind::Qr => "qr",
        PufKind::Classical => "classical",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloneModel {
    RandomGuess,
    Lookup,
    LinearLearner,
    InterceptResendArtifact,
    OptimalClonerArtifact,
}

impl CloneModel {
    pub const ALL: [CloneModel; 5] = [
        CloneModel::RandomGuess,
        CloneModel::Lookup,
        CloneModel::LinearLearner,
        CloneModel::InterceptResendArtifact,
        CloneModel::OptimalClonerArtifact,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CloneModel::RandomGuess => "random-guess",
            CloneModel::Lookup => "lookup",
            CloneModel::LinearLearner => "linear-learner",
            CloneModel::InterceptResendArtifact => "intercept-resend",
            CloneModel::OptimalClonerArtifact => "optimal-cloner",
        }
    }

    /// The passive-phase attack that feeds this clone model.
    pub fn default_attack(&self, kind: PufKind, phi: f64) -> AttackModel {
        match (kind, self) {
            (_, CloneModel::RandomGuess) => AttackModel::Passive,
            (PufKind::Classical, _) => AttackModel::ClassicalRead,
            (PufKind::Qr, CloneModel::OptimalClonerArtifact) => AttackModel::OptimalCloner {
                phi,
                basis: Basis::Computational,
                legs: Legs::Both,
            },
            (PufKind::Qr, _) => AttackModel::InterceptResend {
                basis: Basis::Computational,
                legs: Legs::Both,
            },
        }
    }
}

impl fmt::Display for CloneModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CloneModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CloneModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse {
                context: "model".into(),
                message: format!("unknown clone model {s:?}"),
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum CloneState {
    RandomQr {
        lambda: usize,
    },
    RandomClassical {
        challenge_len: usize,
        out_len: usize,
    },
    LookupQr {
        lambda: usize,
        basis: Basis,
        table: HashMap<BitString, BitString>,
        observed: Vec<BitString>,
    },
    LookupClassical {
        challenge_len: usize,
        out_len: usize,
        table: HashMap<BitString, BitString>,
        observed: Vec<BitString>,
    },
    Linear {
        challenge_len: usize,
        /// Per output bit: `n` weights then a bias.
        weights: Vec<Vec<f64>>,
    },
    /// Per qubit: outcome bit last seen for each measured challenge bit.
    PerQubit {
        basis: Basis,
        table: Vec<[Option<bool>; 2]>,
    },
}

/// Eve's device, `Ê_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct CloneDevice {
    model: CloneModel,
    state: CloneState,
}

impl CloneDevice {
    pub fn model(&self) -> CloneModel {
        self.model
    }

    pub fn as_device(&self) -> DeviceRef<'_> {
        match self.state {
            CloneState::RandomQr { .. } | CloneState::LookupQr { .. } | CloneState::PerQubit { .. } => {
                DeviceRef::Qr(self)
            }
            _ => DeviceRef::Classical(self),
        }
    }

    /// Learned weights of a linear-learner clone.
    pub fn linear_weights(&self) -> Option<&[Vec<f64>]> {
        match &self.state {
            CloneState::Linear { weights, .. } => Some(weights),
            _ => None,
        }
    }

    fn emit_qr(&self, input: &[DensityMatrix], rng: &mut dyn RngCore) -> Result<Vec<PureQubit>> {
        match &self.state {
            CloneState::RandomQr { lambda } => {
                check_register_len(*lambda, input.len())?;
                Ok((0..*lambda).map(|_| PureQubit::random(rng)).collect())
            }
            CloneState::LookupQr {
                lambda,
                basis,
                table,
                observed,
            } => {
                check_register_len(*lambda, input.len())?;
                let key: BitString = input.iter().map(|rho| measure_in(rho, *basis, rng)).collect();
                let bits = match table.get(&key) {
                    Some(out) => out.clone(),
                    None => observed[rng.gen_range(0..observed.len())].clone(),
                };
                Ok(bits.iter().map(|b| prepare(b, *basis)).collect())
            }
            CloneState::PerQubit { basis, table } => {
                check_register_len(table.len(), input.len())?;
                Ok(input
                    .iter()
                    .zip(table)
                    .map(|(rho, row)| {
                        let c = measure_in(rho, *basis, rng);
                        let b = row[usize::from(c)].unwrap_or_else(|| rng.gen());
                        prepare(b, *basis)
                    })
                    .collect())
            }
            _ => Err(Error::DeviceMismatch),
        }
    }
}

impl QuantumDevice for CloneDevice {
    fn lambda(&self) -> usize {
        match &self.state {
            CloneState::RandomQr { lambda } | CloneState::LookupQr { lambda, .. } => *lambda,
            CloneState::PerQubit { table, .. } => table.len(),
            _ => 0,
        }
    }

    fn respond(
        &self,
        input: &[DensityMatrix],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<DensityMatrix>> {
        Ok(self.emit_qr(input, rng)?.iter().map(DensityMatrix::pure).collect())
    }

    fn characterize(
        &self,
        input: &QubitRegister,
        rng: &mut dyn RngCore,
    ) -> Result<QubitRegister> {
        QubitRegister::new(self.emit_qr(&input.to_density(), rng)?)
    }
}

impl ClassicalDevice for CloneDevice {
    fn challenge_len(&self) -> usize {
        match &self.state {
            CloneState::RandomClassical { challenge_len, .. }
            | CloneState::LookupClassical { challenge_len, .. }
            | CloneState::Linear { challenge_len, .. } => *challenge_len,
            _ => 0,
        }
    }

    fn outcome_len(&self) -> usize {
        match &self.state {
            CloneState::RandomClassical { out_len, .. }
            | CloneState::LookupClassical { out_len, .. } => *out_len,
            CloneState::Linear { weights, .. } => weights.len(),
            _ => 0,
        }
    }

    fn respond(&self, x: &BitString, rng: &mut dyn RngCore) -> Result<BitString> {
        check_register_len(ClassicalDevice::challenge_len(self), x.len())?;
        match &self.state {
            CloneState::RandomClassical { out_len, .. } => Ok(BitString::random(*out_len, rng)),
            CloneState::LookupClassical {
                table, observed, ..
            } => Ok(match table.get(x) {
                Some(out) => out.clone(),
                None => observed[rng.gen_range(0..observed.len())].clone(),
            }),
            CloneState::Linear { weights, .. } => Ok(weights
                .iter()
                .map(|row| linear_score(row, x) > 0.0)
                .collect()),
            _ => Err(Error::DeviceMismatch),
        }
    }
}

fn linear_score(row: &[f64], x: &BitString) -> f64 {
    let n = row.len() - 1;
    row[..n]
        .iter()
        .zip(signed_features(x))
        .map(|(w, f)| w * f)
        .sum::<f64>()
        + row[n]
}

const LEARNER_EPOCHS: usize = 200;

/// Averaged perceptron per output bit over ±1 features plus a bias.
fn fit_linear(pairs: &[(&BitString, &BitString)], n: usize, out_len: usize) -> Vec<Vec<f64>> {
    (0..out_len)
        .map(|k| {
            let mut w = vec![0.0; n + 1];
            let mut sum = vec![0.0; n + 1];
            let mut count = 0.0;
            for _ in 0..LEARNER_EPOCHS {
                let mut mistakes = 0;
                for (x, y) in pairs {
                    let target = if y.get(k) { 1.0 } else { -1.0 };
                    if target * linear_score(&w, x) <= 0.0 {
                        mistakes += 1;
                        for (wi, f) in w.iter_mut().zip(signed_features(x).chain([1.0])) {
                            *wi += target * f;
                        }
                    }
                    for (s, wi) in sum.iter_mut().zip(&w) {
                        *s += wi;
                    }
                    count += 1.0;
                }
                if mistakes == 0 {
                    return w;
                }
            }
            sum.iter().map(|s| s / count).collect()
        })
        .collect()
}

/// Builds `Ê_q` from a transcript. Lookup-style models fall back to random
/// guessing when the transcript holds nothing to replay.
pub fn build_clone(transcript: &Transcript, model: CloneModel) -> Result<CloneDevice> {
    let mismatch = || Error::ModelMismatch {
        model: model.name(),
        transcript: transcript.attack.name(),
    };
    let random = match &transcript.dims {
        CrtDims::Qr(enc) => CloneState::RandomQr {
            lambda: enc.lambda(),
        },
        CrtDims::Classical {
            challenge_len,
            out_len,
        } => CloneState::RandomClassical {
            challenge_len: *challenge_len,
            out_len: *out_len,
        },
    };
    let captures: Vec<&Capture> = transcript
        .rounds
        .iter()
        .filter_map(|r| r.capture.as_ref())
        .collect();
    let classical_pairs = || -> Vec<(&BitString, &BitString)> {
        captures
            .iter()
            .filter_map(|c| match c {
                Capture::Classical { challenge, outcome } => Some((challenge, outcome)),
                _ => None,
            })
            .collect()
    };
    let quantum_pairs = || -> Vec<(&BitString, &BitString)> {
        captures
            .iter()
            .filter_map(|c| match c {
                Capture::Quantum {
                    challenge,
                    outcome: Some(outcome),
                } => Some((challenge, outcome)),
                _ => None,
            })
            .collect()
    };
    let basis = match transcript.attack {
        AttackModel::InterceptResend { basis, .. } | AttackModel::OptimalCloner { basis, .. } => basis,
        _ => Basis::Computational,
    };

    let state = match (model, &transcript.dims) {
        (CloneModel::RandomGuess, _) => random,
        (CloneModel::Lookup, CrtDims::Classical { challenge_len, out_len }) => {
            if transcript.attack != AttackModel::ClassicalRead && transcript.q() > 0 {
                return Err(mismatch());
            }
            let pairs = classical_pairs();
            if pairs.is_empty() {
                random
            } else {
                CloneState::LookupClassical {
                    challenge_len: *challenge_len,
                    out_len: *out_len,
                    table: pairs.iter().map(|(x, o)| ((*x).clone(), (*o).clone())).collect(),
                    observed: pairs.iter().map(|(_, o)| (*o).clone()).collect(),
                }
            }
        }
        (CloneModel::Lookup, CrtDims::Qr(enc)) => {
            if !matches!(
                transcript.attack,
                AttackModel::InterceptResend { legs: Legs::Both, .. }
                    | AttackModel::OptimalCloner { legs: Legs::Both, .. }
            ) && transcript.q() > 0
            {
                return Err(mismatch());
            }
            let pairs = quantum_pairs();
            if pairs.is_empty() {
                random
            } else {
                CloneState::LookupQr {
                    lambda: enc.lambda(),
                    basis,
                    table: pairs.iter().map(|(x, o)| ((*x).clone(), (*o).clone())).collect(),
                    observed: pairs.iter().map(|(_, o)| (*o).clone()).collect(),
                }
            }
        }
        (CloneModel::LinearLearner, CrtDims::Classical { challenge_len, out_len }) => {
            if transcript.attack != AttackModel::ClassicalRead {
                return Err(mismatch());
            }
            let pairs = classical_pairs();
            if pairs.is_empty() {
                random
            } else {
                CloneState::Linear {
                    challenge_len: *challenge_len,
                    weights: fit_linear(&pairs, *challenge_len, *out_len),
                }
            }
        }
        (CloneModel::InterceptResendArtifact, CrtDims::Qr(enc))
        | (CloneModel::OptimalClonerArtifact, CrtDims::Qr(enc)) => {
            let expected = if model == CloneModel::InterceptResendArtifact {
                "intercept-resend"
            } else {
                "optimal-cloner"
            };
            if transcript.attack.name() != expected {
                return Err(mismatch());
            }
            let mut table = vec![[None; 2]; enc.lambda()];
            for (c, o) in quantum_pairs() {
                for (k, row) in table.iter_mut().enumerate() {
                    row[usize::from(c.get(k))] = Some(o.get(k));
                }
            }
            CloneState::PerQubit { basis, table }
        }
        _ => return Err(mismatch()),
    };
    Ok(CloneDevice { model, state })
}

/// Result line of an attack experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub model: String,
    pub q: usize,
    pub trials: usize,
    pub gamma_hat: f64,
    pub delta_hat: f64,
    pub ci95: [f64; 2],
    pub disturbance_rate: f64,
}

/// Validates an angle argument shared by the quantum attack constructors.
pub fn optimal_cloner(phi: f64, basis: Basis, legs: Legs) -> Result<AttackModel> {
    check_range("phi", phi, 0.0, std::f64::consts::PI, "[0, π]")?;
    Ok(AttackModel::OptimalCloner { phi, basis, legs })
}
