//! Enrollment and verification over classical and quantum-readout devices.
//!
//! Enrollment: select → prune → shifters → `y = w ∥ o` → `gen` → CRT.
//! Verification: noisy readout → `rep` → compare with the stored response.
//! Every CRP is single-use: a verification consumes its entry whatever the
//! verdict.

mod crt;

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::FRAC_PI_4;

use log::debug;
use rand::{seq::index, Rng, RngCore};
use serde::{Deserialize, Serialize};

pub use crt::{crt_load, crt_save, CRT_VERSION};

use crate::classical_puf::{classical_shifter, noisy_readout_classical, ClassicalDevice, ClassicalNoise};
use crate::error::{Error, Result};
use crate::fuzzy::{gen, rep, Code, FeParams, HelperData, RepOutcome};
use crate::mathcore::{
    hamming_distance, meets_uniformity, shannon_entropy, BitString, Distribution,
    UniformityReading,
};
use crate::qrpuf::{
    encode_challenge, noisy_readout, error_matrix, shifter_for, ChallengeEncoding,
    NoiseInsertion, QuantumDevice, QuantumNoise, ShifterEntry,
};
use crate::qsim::{conjugate_channel, measure_all, DensityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PufKind {
    Qr,
    Classical,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    Depolarizing(QuantumNoise),
    BitFlip(ClassicalNoise),
}

impl NoiseModel {
    pub fn depolarizing(p: f64, insertion: NoiseInsertion) -> Result<Self> {
        Ok(NoiseModel::Depolarizing(QuantumNoise::new(p, insertion)?))
    }

    pub fn bitflip(p: f64) -> Result<Self> {
        Ok(NoiseModel::BitFlip(ClassicalNoise::new(p)?))
    }

    pub fn noiseless(kind: PufKind) -> Self {
        match kind {
            PufKind::Qr => NoiseModel::Depolarizing(QuantumNoise::noiseless()),
            PufKind::Classical => NoiseModel::BitFlip(ClassicalNoise::noiseless()),
        }
    }

    pub fn kind(&self) -> PufKind {
        match self {
            NoiseModel::Depolarizing(_) => PufKind::Qr,
            NoiseModel::BitFlip(_) => PufKind::Classical,
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            NoiseModel::Depolarizing(q) => q.p,
            NoiseModel::BitFlip(c) => c.flip_p(),
        }
    }

    /// Expected weight of `o` over `l_o` positions: `l_o·p/2` after a
    /// depolarizing channel, `l_o·p` for independent flips.
    pub fn mean_errors(&self, l_o: usize) -> f64 {
        match self {
            NoiseModel::Depolarizing(q) => l_o as f64 * q.p / 2.0,
            NoiseModel::BitFlip(c) => l_o as f64 * c.flip_p(),
        }
    }
}

#[derive(Clone, Copy)]
pub enum DeviceRef<'a> {
    Qr(&'a dyn QuantumDevice),
    Classical(&'a dyn ClassicalDevice),
}

impl DeviceRef<'_> {
    pub fn kind(&self) -> PufKind {
        match self {
            DeviceRef::Qr(_) => PufKind::Qr,
            DeviceRef::Classical(_) => PufKind::Classical,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeConfig {
    /// Chosen from `t` when absent.
    pub code: Option<Code>,
    pub m: usize,
    pub epsilon: f64,
    /// Overrides the automatic choice of `t`.
    pub t: Option<usize>,
}

impl Default for FeConfig {
    fn default() -> Self {
        Self {
            code: None,
            m: 32,
            epsilon: 1.0 / 1024.0,
            t: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnrollConfig {
    pub n_target: usize,
    /// Four-state angle; ignored for classical devices.
    pub phi: f64,
    pub noise: NoiseModel,
    pub fe: FeConfig,
}

impl EnrollConfig {
    /// `N = 24`, `φ = π/4`, depolarizing `p̃ = 0.1` at the challenge.
    pub fn qr_desk() -> Self {
        Self {
            n_target: 24,
            phi: FRAC_PI_4,
            noise: NoiseModel::Depolarizing(QuantumNoise {
                p: 0.1,
                insertion: NoiseInsertion::Challenge,
            }),
            fe: FeConfig::default(),
        }
    }
}

/// Distinct challenges drawn uniformly without replacement.
pub fn select_challenges(
    n: usize,
    n_target: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<BitString>> {
    if n == 0 || n_target == 0 {
        return Err(Error::InvalidParameter(
            "challenge length and count must be at least 1".into(),
        ));
    }
    if n < 64 {
        let space = 1u64 << n;
        if n_target as u64 > space {
            return Err(Error::InvalidParameter(format!(
                "cannot select {n_target} distinct challenges from 2^{n}"
            )));
        }
        if space <= usize::MAX as u64 {
            return Ok(index::sample(rng, space as usize, n_target)
                .into_iter()
                .map(|v| BitString::from_u64(v as u64, n))
                .collect());
        }
    }
    let mut seen = HashSet::with_capacity(n_target);
    let mut out = Vec::with_capacity(n_target);
    while out.len() < n_target {
        let x = BitString::random(n, rng);
        if seen.insert(x.clone()) {
            out.push(x);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceAudit {
    /// Shannon entropy of the selection distribution.
    pub entropy: f64,
    pub max_entropy_reached: bool,
    /// Largest per-position `|ones − N/2| / √(N/4)`.
    pub max_z: f64,
    pub balanced: bool,
}

pub fn balance_audit(challenges: &[BitString]) -> Result<BalanceAudit> {
    let n_ch = challenges.len();
    let dist = Distribution::uniform(challenges.iter().cloned())?;
    let entropy = shannon_entropy(&dist);
    let distinct = challenges.iter().collect::<HashSet<_>>().len() == n_ch;
    let len = challenges.first().map(BitString::len).unwrap_or(0);
    let sigma = (n_ch as f64 / 4.0).sqrt();
    let max_z = (0..len)
        .map(|i| {
            let ones = challenges.iter().filter(|x| x.get(i)).count() as f64;
            (ones - n_ch as f64 / 2.0).abs() / sigma
        })
        .fold(0.0, f64::max);
    Ok(BalanceAudit {
        entropy,
        max_entropy_reached: distinct && meets_uniformity(&dist, UniformityReading::LogCardinality),
        max_z,
        balanced: max_z <= 3.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TChoice {
    pub t: usize,
    pub min_error: f64,
    pub collision_warning: bool,
}

/// `t = min(⌈noise_mean⌉, ⌈min err⌉ − 1, l_o − 1)`, never negative, so that
/// `t` stays strictly below the smallest pairwise error.
pub fn select_t(err: &[Vec<f64>], noise_mean: f64, l_o: usize) -> TChoice {
    let mut min_error = f64::INFINITY;
    for (i, row) in err.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if i != j {
                min_error = min_error.min(e);
            }
        }
    }
    let from_noise = noise_mean.max(0.0).ceil() as usize;
    let from_separation = if min_error.is_finite() {
        (min_error.ceil() as usize).saturating_sub(1)
    } else {
        usize::MAX
    };
    let t = from_noise
        .min(from_separation)
        .min(l_o.saturating_sub(1));
    let collision_warning = min_error <= 1.0 && noise_mean >= 1.0;
    if collision_warning {
        debug!("minimum pairwise error {min_error} cannot absorb noise mean {noise_mean}; prune further");
    }
    TChoice {
        t,
        min_error,
        collision_warning,
    }
}

/// Greedy scan in index order: a candidate survives when it is not a
/// duplicate of, and has error ≥ `⌈noise_mean⌉` to, every earlier survivor.
pub fn prune_indices(
    count: usize,
    noise_mean: f64,
    mut err: impl FnMut(usize, usize) -> Result<f64>,
    mut duplicate: impl FnMut(usize, usize) -> bool,
) -> Result<Vec<usize>> {
    let threshold = noise_mean.max(0.0).ceil();
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..count {
        let mut ok = true;
        for &k in &kept {
            if duplicate(k, i) || err(k, i)? < threshold {
                ok = false;
                break;
            }
        }
        if ok {
            kept.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptySurvivorSet(
            "widen the φ-separation or lower the noise".into(),
        ));
    }
    Ok(kept)
}

pub fn prune_challenges(
    challenges: &[BitString],
    enc: &ChallengeEncoding,
    noise_mean: f64,
) -> Result<Vec<BitString>> {
    let err = error_matrix(challenges, enc)?;
    let kept = prune_indices(
        challenges.len(),
        noise_mean,
        |i, j| Ok(err[i][j]),
        |i, j| challenges[i] == challenges[j],
    )?;
    Ok(kept.into_iter().map(|i| challenges[i].clone()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum CrtDims {
    Qr(ChallengeEncoding),
    Classical { challenge_len: usize, out_len: usize },
}

impl CrtDims {
    pub fn kind(&self) -> PufKind {
        match self {
            CrtDims::Qr(_) => PufKind::Qr,
            CrtDims::Classical { .. } => PufKind::Classical,
        }
    }

    pub fn challenge_len(&self) -> usize {
        match self {
            CrtDims::Qr(enc) => enc.challenge_len(),
            CrtDims::Classical { challenge_len, .. } => *challenge_len,
        }
    }

    /// Length `l_o` of the error string.
    pub fn outcome_len(&self) -> usize {
        match self {
            CrtDims::Qr(enc) => enc.lambda(),
            CrtDims::Classical { out_len, .. } => *out_len,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrtEntry {
    id: u64,
    x: BitString,
    w: BitString,
    h: HelperData,
    r: BitString,
    used: bool,
}

impl CrtEntry {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn x(&self) -> &BitString {
        &self.x
    }

    pub fn w(&self) -> &BitString {
        &self.w
    }

    pub fn helper(&self) -> &HelperData {
        &self.h
    }

    pub fn response(&self) -> &BitString {
        &self.r
    }

    pub fn is_used(&self) -> bool {
        self.used
    }
}

/// Alice's challenge-response table.
#[derive(Clone, Debug, PartialEq)]
pub struct Crt {
    dims: CrtDims,
    fe: FeParams,
    noise: NoiseModel,
    entries: Vec<CrtEntry>,
}

impl Crt {
    pub fn kind(&self) -> PufKind {
        self.dims.kind()
    }

    pub fn dims(&self) -> &CrtDims {
        &self.dims
    }

    pub fn fe(&self) -> &FeParams {
        &self.fe
    }

    pub fn t(&self) -> usize {
        self.fe.t()
    }

    /// Noise model assumed at enrollment.
    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn entries(&self) -> &[CrtEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `N`: entries still available.
    pub fn live_count(&self) -> usize {
        self.entries.iter().filter(|e| !e.used).count()
    }

    pub fn live_ids(&self) -> Vec<u64> {
        self.entries.iter().filter(|e| !e.used).map(|e| e.id).collect()
    }

    pub fn entry(&self, id: u64) -> Result<&CrtEntry> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .ok_or(Error::UnknownEntry(id))
    }

    pub fn random_live_id(&self, rng: &mut dyn RngCore) -> Option<u64> {
        let live = self.live_ids();
        if live.is_empty() {
            None
        } else {
            Some(live[rng.gen_range(0..live.len())])
        }
    }

    fn index_of(&self, id: u64) -> Result<usize> {
        self.entries
            .iter()
            .position(|e| e.id == id)
            .ok_or(Error::UnknownEntry(id))
    }

    fn validate(&self) -> Result<()> {
        let mut xs = HashSet::new();
        let mut ids = HashSet::new();
        let l_w = self.fe.l_w();
        for e in &self.entries {
            if !ids.insert(e.id) {
                return Err(Error::InvalidParameter(format!("duplicate entry id {}", e.id)));
            }
            if !xs.insert(&e.x) {
                return Err(Error::InvalidParameter(format!("duplicate challenge {}", e.x)));
            }
            for (name, expected, actual) in [
                ("x", self.dims.challenge_len(), e.x.len()),
                ("w", l_w, e.w.len()),
                ("r", self.fe.m(), e.r.len()),
                ("sketch", self.fe.l_o(), e.h.sketch.len()),
            ] {
                if expected != actual {
                    return Err(Error::InvalidParameter(format!(
                        "entry {}: {name} has {actual} bits, expected {expected}",
                        e.id
                    )));
                }
            }
            if e.h.seed != self.fe.hash_seed() {
                return Err(Error::InvalidParameter(format!(
                    "entry {}: helper seed differs from the table hash seed",
                    e.id
                )));
            }
        }
        if self.fe.l_o() != self.dims.outcome_len() {
            return Err(Error::InvalidParameter(format!(
                "code length {} differs from outcome length {}",
                self.fe.l_o(),
                self.dims.outcome_len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnrollSummary {
    pub selected: usize,
    pub pruned: usize,
    pub entries: usize,
    pub t: TChoice,
    pub noise_mean: f64,
    pub balance: BalanceAudit,
    /// Empirical Shannon entropy of the stored shifter codes.
    pub w_entropy: f64,
}

pub fn enroll(device: DeviceRef, cfg: &EnrollConfig, rng: &mut dyn RngCore) -> Result<Crt> {
    enroll_detailed(device, cfg, rng).map(|(crt, _)| crt)
}

pub fn enroll_detailed(
    device: DeviceRef,
    cfg: &EnrollConfig,
    rng: &mut dyn RngCore,
) -> Result<(Crt, EnrollSummary)> {
    if cfg.noise.kind() != device.kind() {
        return Err(Error::InvalidParameter(
            "noise model does not match the device kind".into(),
        ));
    }
    match device {
        DeviceRef::Qr(dev) => enroll_qr(dev, cfg, rng),
        DeviceRef::Classical(dev) => enroll_classical(dev, cfg, rng),
    }
}

struct Enrolled {
    x: BitString,
    w: BitString,
    o: BitString,
}

fn enroll_qr(
    dev: &dyn QuantumDevice,
    cfg: &EnrollConfig,
    rng: &mut dyn RngCore,
) -> Result<(Crt, EnrollSummary)> {
    let enc = ChallengeEncoding::new(cfg.phi, dev.lambda())?;
    let selected = select_challenges(enc.challenge_len(), cfg.n_target, rng)?;
    let balance = balance_audit(&selected)?;
    let noise_mean = cfg.noise.mean_errors(enc.lambda());
    let full = error_matrix(&selected, &enc)?;
    let kept = prune_indices(
        selected.len(),
        noise_mean,
        |i, j| Ok(full[i][j]),
        |i, j| selected[i] == selected[j],
    )?;
    let err: Vec<Vec<f64>> = kept
        .iter()
        .map(|&i| kept.iter().map(|&j| full[i][j]).collect())
        .collect();
    let mut rows = Vec::with_capacity(kept.len());
    for x in kept.iter().map(|&i| selected[i].clone()) {
        let outcome = dev.characterize(&encode_challenge(&x, &enc)?, rng)?;
        let shifter = shifter_for(&outcome);
        let shifted: Vec<DensityMatrix> = shifter
            .gates
            .iter()
            .zip(outcome.to_density())
            .map(|(u, rho)| conjugate_channel(u, &rho))
            .collect();
        let o = measure_all(&shifted, rng);
        rows.push(Enrolled { x, w: shifter.w, o });
    }
    finish(CrtDims::Qr(enc), selected.len(), balance, noise_mean, &err, rows, cfg, rng)
}

fn enroll_classical(
    dev: &dyn ClassicalDevice,
    cfg: &EnrollConfig,
    rng: &mut dyn RngCore,
) -> Result<(Crt, EnrollSummary)> {
    let (n, out_len) = (dev.challenge_len(), dev.outcome_len());
    let selected = select_challenges(n, cfg.n_target, rng)?;
    let balance = balance_audit(&selected)?;
    let noise_mean = cfg.noise.mean_errors(out_len);
    let outcomes: Vec<BitString> = selected
        .iter()
        .map(|x| dev.respond(x, rng))
        .collect::<Result<_>>()?;
    let kept = prune_indices(
        selected.len(),
        noise_mean,
        |i, j| Ok(hamming_distance(&outcomes[i], &outcomes[j])? as f64),
        |i, j| selected[i] == selected[j],
    )?;
    let mut err = vec![vec![0.0; kept.len()]; kept.len()];
    for (a, &i) in kept.iter().enumerate() {
        for (b, &j) in kept.iter().enumerate() {
            err[a][b] = hamming_distance(&outcomes[i], &outcomes[j])? as f64;
        }
    }
    let rows = kept
        .into_iter()
        .map(|i| {
            let w = outcomes[i].clone();
            let o = classical_shifter(&w).apply(&outcomes[i])?;
            Ok(Enrolled {
                x: selected[i].clone(),
                w,
                o,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(
        CrtDims::Classical {
            challenge_len: n,
            out_len,
        },
        selected.len(),
        balance,
        noise_mean,
        &err,
        rows,
        cfg,
        rng,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    dims: CrtDims,
    selected: usize,
    balance: BalanceAudit,
    noise_mean: f64,
    err: &[Vec<f64>],
    rows: Vec<Enrolled>,
    cfg: &EnrollConfig,
    rng: &mut dyn RngCore,
) -> Result<(Crt, EnrollSummary)> {
    let l_o = dims.outcome_len();
    let mut t_choice = select_t(err, noise_mean, l_o);
    if let Some(t) = cfg.fe.t {
        t_choice.t = t;
    }
    let code = match &cfg.fe.code {
        Some(code) => code.clone(),
        None => Code::for_radius(l_o, t_choice.t)?,
    };
    if code.len() != l_o {
        return Err(Error::InvalidParameter(format!(
            "code {code} has length {}, outcome length is {l_o}",
            code.len()
        )));
    }
    let l = rows[0].w.len() + l_o;
    let s = (rows.len() as f64).log2();
    let fe = FeParams::random(l, cfg.fe.m, t_choice.t, cfg.fe.epsilon, s, code, rng)?;

    let mut w_counts: BTreeMap<BitString, f64> = BTreeMap::new();
    let mut entries = Vec::with_capacity(rows.len());
    for (id, row) in rows.into_iter().enumerate() {
        *w_counts.entry(row.w.clone()).or_default() += 1.0;
        let (r, h) = gen(&row.w.concat(&row.o), &fe, rng)?;
        entries.push(CrtEntry {
            id: id as u64,
            x: row.x,
            w: row.w,
            h,
            r,
            used: false,
        });
    }
    let crt = Crt {
        dims,
        fe,
        noise: cfg.noise,
        entries,
    };
    crt.validate()?;
    let summary = EnrollSummary {
        selected,
        pruned: selected - crt.len(),
        entries: crt.len(),
        t: t_choice,
        noise_mean,
        balance,
        w_entropy: shannon_entropy(&Distribution::from_weights(w_counts)?),
    };
    Ok((crt, summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
    Uncorrectable,
}

impl Verdict {
    pub fn accepted(self) -> bool {
        self == Verdict::Accept
    }
}

/// What a verification round reveals publicly.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub id: u64,
    pub verdict: Verdict,
    pub helper: HelperData,
}

/// Runs one round on entry `id` and consumes it.
pub fn verify(
    crt: &mut Crt,
    device: DeviceRef,
    id: u64,
    noise: &NoiseModel,
    rng: &mut dyn RngCore,
) -> Result<Verification> {
    let idx = crt.index_of(id)?;
    if crt.entries[idx].used {
        return Err(Error::EntryConsumed(id));
    }
    crt.entries[idx].used = true;
    let o = readout(crt, &crt.entries[idx], device, noise, rng)?;
    decide(crt, idx, &o)
}

/// Runs a round without the single-use check or consumption. Exists only to
/// demonstrate what CRP reuse gives an attacker.
pub fn verify_reusing(
    crt: &Crt,
    device: DeviceRef,
    id: u64,
    noise: &NoiseModel,
    rng: &mut dyn RngCore,
) -> Result<Verification> {
    let idx = crt.index_of(id)?;
    let o = readout(crt, &crt.entries[idx], device, noise, rng)?;
    decide(crt, idx, &o)
}

/// Verifies entry `id` against a supplied error string `o′` and consumes it.
pub fn verify_error_string(crt: &mut Crt, id: u64, o: &BitString) -> Result<Verification> {
    let idx = crt.index_of(id)?;
    if crt.entries[idx].used {
        return Err(Error::EntryConsumed(id));
    }
    crt.entries[idx].used = true;
    decide(crt, idx, o)
}

fn readout(
    crt: &Crt,
    entry: &CrtEntry,
    device: DeviceRef,
    noise: &NoiseModel,
    rng: &mut dyn RngCore,
) -> Result<BitString> {
    match (&crt.dims, device, noise) {
        (CrtDims::Qr(enc), DeviceRef::Qr(dev), NoiseModel::Depolarizing(q)) => {
            let shifter = ShifterEntry::from_code(&entry.w)?;
            noisy_readout(dev, &encode_challenge(&entry.x, enc)?, &shifter.gates, q, rng)
        }
        (CrtDims::Classical { .. }, DeviceRef::Classical(dev), NoiseModel::BitFlip(c)) => {
            noisy_readout_classical(dev, &classical_shifter(&entry.w), &entry.x, c, rng)
        }
        (dims, device, _) if dims.kind() != device.kind() => Err(Error::DeviceMismatch),
        _ => Err(Error::InvalidParameter(
            "noise model does not match the table kind".into(),
        )),
    }
}

fn decide(crt: &Crt, idx: usize, o: &BitString) -> Result<Verification> {
    let entry = &crt.entries[idx];
    let verdict = match rep(&entry.w.concat(o), &entry.h, &crt.fe)? {
        RepOutcome::Recovered(z) if z == entry.r => Verdict::Accept,
        RepOutcome::Recovered(_) => Verdict::Reject,
        RepOutcome::Uncorrectable => Verdict::Uncorrectable,
    };
    Ok(Verification {
        id: entry.id,
        verdict,
        helper: entry.h.clone(),
    })
}

/// Verifier-side driver that picks entries and runs rounds without exposing
/// the table to the party supplying the device.
pub struct Session<'a> {
    crt: &'a mut Crt,
    noise: NoiseModel,
    allow_reuse: bool,
}

impl<'a> Session<'a> {
    pub fn new(crt: &'a mut Crt, noise: NoiseModel, allow_reuse: bool) -> Self {
        Self {
            crt,
            noise,
            allow_reuse,
        }
    }

    pub fn dims(&self) -> &CrtDims {
        &self.crt.dims
    }

    pub fn allows_reuse(&self) -> bool {
        self.allow_reuse
    }

    /// Rounds that can still be run.
    pub fn available(&self) -> usize {
        if self.allow_reuse {
            self.crt.len()
        } else {
            self.crt.live_count()
        }
    }

    /// One round on a random entry: any entry under reuse, else a live one.
    pub fn round(&mut self, device: DeviceRef, rng: &mut dyn RngCore) -> Result<Verification> {
        if self.allow_reuse {
            if self.crt.is_empty() {
                return Err(Error::NotEnoughEntries {
                    requested: 1,
                    available: 0,
                });
            }
            let id = self.crt.entries[rng.gen_range(0..self.crt.len())].id;
            verify_reusing(self.crt, device, id, &self.noise, rng)
        } else {
            let id = self.crt.random_live_id(rng).ok_or(Error::NotEnoughEntries {
                requested: 1,
                available: 0,
            })?;
            verify(self.crt, device, id, &self.noise, rng)
        }
    }
}
