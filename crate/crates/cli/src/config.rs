//! Run configuration: one JSON file, every field optional.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pufkit::adversary::{Basis, CloneModel, Legs};
use pufkit::classical_puf::ClassicalKind;
use pufkit::fuzzy::Code;
use pufkit::protocol::{EnrollConfig, FeConfig, NoiseModel, PufKind};
use pufkit::qrpuf::NoiseInsertion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalModel {
    KeyedRandom,
    LinearThreshold,
}

impl From<ClassicalModel> for ClassicalKind {
    fn from(m: ClassicalModel) -> Self {
        match m {
            ClassicalModel::KeyedRandom => ClassicalKind::KeyedRandom,
            ClassicalModel::LinearThreshold => ClassicalKind::LinearThreshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub p: f64,
    /// Where depolarizing noise acts; ignored for classical devices.
    pub insertion: NoiseInsertion,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            p: 0.1,
            insertion: NoiseInsertion::Challenge,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeSection {
    pub code: Option<String>,
    pub m: usize,
    pub epsilon: f64,
    pub t: Option<usize>,
    pub xi1: u32,
    pub xi2: f64,
}

impl Default for FeSection {
    fn default() -> Self {
        let fe = FeConfig::default();
        Self {
            code: None,
            m: fe.m,
            epsilon: fe.epsilon,
            t: None,
            xi1: 1,
            xi2: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    pub model: CloneModel,
    pub q: usize,
    pub q_star: usize,
    pub basis: Basis,
    pub legs: Legs,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            model: CloneModel::Lookup,
            q: 4,
            q_star: 4,
            basis: Basis::Computational,
            legs: Legs::Both,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub puf_kind: PufKind,
    pub lambda: usize,
    pub challenge_len: usize,
    pub out_len: usize,
    pub classical_model: ClassicalModel,
    pub phi: f64,
    pub n_target: usize,
    pub noise: NoiseConfig,
    pub fe: FeSection,
    pub attack: AttackSection,
    pub trials: usize,
    pub seed: Option<u64>,
    pub allow_crp_reuse: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            puf_kind: PufKind::Qr,
            lambda: 16,
            challenge_len: 32,
            out_len: 32,
            classical_model: ClassicalModel::KeyedRandom,
            phi: FRAC_PI_4,
            n_target: 24,
            noise: NoiseConfig::default(),
            fe: FeSection::default(),
            attack: AttackSection::default(),
            trials: 1000,
            seed: None,
            allow_crp_reuse: false,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Checks every range before anything runs.
    pub fn validate(&self) -> Result<(), String> {
        let fail = |msg: String| Err(msg);
        if !(0.0..=PI).contains(&self.phi) {
            return fail(format!("phi must lie in [0, π], got {}", self.phi));
        }
        match self.puf_kind {
            PufKind::Qr if !(1..=64).contains(&self.lambda) => {
                return fail(format!("lambda must lie in 1..=64, got {}", self.lambda))
            }
            PufKind::Classical if self.challenge_len == 0 || self.out_len == 0 => {
                return fail("challenge_len and out_len must be at least 1".into())
            }
            _ => {}
        }
        if self.n_target == 0 {
            return fail("n_target must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.noise.p) {
            return fail(format!("noise.p must lie in [0, 1], got {}", self.noise.p));
        }
        if self.fe.m == 0 {
            return fail("fe.m must be at least 1".into());
        }
        if !(self.fe.epsilon > 0.0 && self.fe.epsilon < 1.0) {
            return fail(format!("fe.epsilon must lie in (0, 1), got {}", self.fe.epsilon));
        }
        if self.fe.xi1 == 0 {
            return fail("fe.xi1 must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.fe.xi2) {
            return fail(format!("fe.xi2 must lie in [0, 1], got {}", self.fe.xi2));
        }
        if let Some(code) = &self.fe.code {
            code.parse::<Code>().map_err(|e| format!("fe.code: {e}"))?;
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        Ok(())
    }

    pub fn noise_model(&self) -> Result<NoiseModel, String> {
        match self.puf_kind {
            PufKind::Qr => NoiseModel::depolarizing(self.noise.p, self.noise.insertion),
            PufKind::Classical => NoiseModel::bitflip(self.noise.p),
        }
        .map_err(|e| e.to_string())
    }

    pub fn enroll_config(&self) -> Result<EnrollConfig, String> {
        Ok(EnrollConfig {
            n_target: self.n_target,
            phi: self.phi,
            noise: self.noise_model()?,
            fe: FeConfig {
                code: self
                    .fe
                    .code
                    .as_deref()
                    .map(str::parse)
                    .transpose()
                    .map_err(|e: pufkit::Error| format!("fe.code: {e}"))?,
                m: self.fe.m,
                epsilon: self.fe.epsilon,
                t: self.fe.t,
            },
        })
    }
}
