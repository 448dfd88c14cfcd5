//! Monte Carlo and analytic estimators for robustness `ρ`, clone success
//! `γ`, unclonability `δ` and the `(ρ, δ*, q*)` security tuple.
//!
//! Trials run in parallel; trial `i` draws all randomness from
//! `derive_rng(seed, label, i)`, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::adversary::{build_clone, observe, AttackModel, AttackReport, CloneModel};
use crate::error::{check_range, Error, Result};
use crate::protocol::{enroll, verify, Crt, DeviceRef, EnrollConfig, NoiseModel, Session};
use crate::qrpuf::{shifter_for, ChallengeEncoding, StateIndex};
use crate::qsim::{conjugate_channel, measure_computational, DensityMatrix, QubitRegister};
use crate::rng::{derive_rng, SimRng};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

pub fn wilson_interval(successes: usize, trials: usize) -> [f64; 2] {
    if trials == 0 {
        return [0.0, 1.0];
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    [(center - half).clamp(0.0, 1.0), (center + half).clamp(0.0, 1.0)]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: usize,
    pub trials: usize,
    pub value: f64,
    pub ci95: [f64; 2],
}

impl Estimate {
    pub fn from_counts(successes: usize, trials: usize) -> Self {
        Self {
            successes,
            trials,
            value: if trials == 0 {
                0.0
            } else {
                successes as f64 / trials as f64
            },
            ci95: wilson_interval(successes, trials),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci95[0] <= x && x <= self.ci95[1]
    }

    pub fn half_width(&self) -> f64 {
        (self.ci95[1] - self.ci95[0]) / 2.0
    }
}

/// `Σ_{k≤t} C(λ,k) (p/2)^k (1 − p/2)^{λ−k}`.
pub fn analytic_robustness(lambda: usize, p: f64, t: usize) -> Result<f64> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    if lambda == 0 {
        return Err(Error::InvalidParameter("lambda must be at least 1".into()));
    }
    Ok(binomial_cdf(lambda, p / 2.0, t))
}

pub fn binomial_cdf(n: usize, q: f64, t: usize) -> f64 {
    if t >= n {
        return 1.0;
    }
    Binomial::new(q, n as u64).expect("q in [0, 1]").cdf(t as u64)
}

/// Runs `per_batch(b)` for `b = 0, 1, …` in parallel chunks and returns the
/// first `trials` outcomes in batch order.
fn collect_batches(
    trials: usize,
    per_batch_hint: usize,
    per_batch: impl Fn(u64) -> Result<Vec<bool>> + Sync,
) -> Result<Vec<bool>> {
    let mut outcomes = Vec::with_capacity(trials);
    let mut next = 0u64;
    while outcomes.len() < trials {
        let chunk = ((trials - outcomes.len()).div_ceil(per_batch_hint.max(1)) + 1) as u64;
        let results: Vec<Vec<bool>> = (next..next + chunk)
            .into_par_iter()
            .map(&per_batch)
            .collect::<Result<_>>()?;
        next += chunk;
        for r in results {
            if r.is_empty() {
                return Err(Error::InvalidParameter("a batch produced no trials".into()));
            }
            outcomes.extend(r);
        }
    }
    outcomes.truncate(trials);
    Ok(outcomes)
}

/// Genuine acceptance rate. Each batch enrolls a fresh table and verifies
/// every entry once, so challenges are weighted uniformly.
pub fn estimate_robustness(
    device: DeviceRef,
    cfg: &EnrollConfig,
    noise: &NoiseModel,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let outcomes = collect_batches(trials, cfg.n_target, |b| {
        let mut crt = enroll(device, cfg, &mut derive_rng(seed, "robustness/enroll", b))?;
        let mut rng = derive_rng(seed, "robustness/verify", b);
        crt.live_ids()
            .into_iter()
            .map(|id| Ok(verify(&mut crt, device, id, noise, &mut rng)?.verdict.accepted()))
            .collect()
    })?;
    Ok(Estimate::from_counts(
        outcomes.iter().filter(|&&a| a).count(),
        trials,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackSetup {
    pub attack: AttackModel,
    pub model: CloneModel,
    pub q: usize,
    pub allow_reuse: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClonabilityEstimate {
    pub q: usize,
    pub gamma: Estimate,
    pub delta_hat: f64,
    /// Rejection rate of the genuine rounds Eve observed.
    pub disturbance: Estimate,
}

impl ClonabilityEstimate {
    pub fn report(&self, model: CloneModel) -> AttackReport {
        AttackReport {
            model: model.name().to_string(),
            q: self.q,
            trials: self.gamma.trials,
            gamma_hat: self.gamma.value,
            delta_hat: self.delta_hat,
            ci95: self.gamma.ci95,
            disturbance_rate: self.disturbance.value,
        }
    }
}

/// Per trial: fresh table, `q` observed rounds, then one verification of
/// the clone on a fresh entry (any entry when reuse is allowed).
pub fn estimate_clonability(
    device: DeviceRef,
    cfg: &EnrollConfig,
    noise: &NoiseModel,
    setup: &AttackSetup,
    trials: usize,
    seed: u64,
) -> Result<ClonabilityEstimate> {
    clonability_with(device, noise, setup, trials, seed, |rng| enroll(device, cfg, rng))
}

/// Like [`estimate_clonability`], but every trial starts from a copy of
/// `crt` instead of a fresh enrollment.
pub fn estimate_clonability_on_table(
    crt: &Crt,
    device: DeviceRef,
    noise: &NoiseModel,
    setup: &AttackSetup,
    trials: usize,
    seed: u64,
) -> Result<ClonabilityEstimate> {
    clonability_with(device, noise, setup, trials, seed, |_| Ok(crt.clone()))
}

fn clonability_with(
    device: DeviceRef,
    noise: &NoiseModel,
    setup: &AttackSetup,
    trials: usize,
    seed: u64,
    table: impl Fn(&mut SimRng) -> Result<Crt> + Sync,
) -> Result<ClonabilityEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let results: Vec<(bool, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(seed, "clonability", i);
            let mut crt = table(&mut rng)?;
            let mut session = Session::new(&mut crt, *noise, setup.allow_reuse);
            let transcript = observe(&mut session, device, &setup.attack, setup.q, &mut rng)?;
            let clone = build_clone(&transcript, setup.model)?;
            let accepted = session.round(clone.as_device(), &mut rng)?.verdict.accepted();
            let rejected = transcript.rounds.iter().filter(|r| !r.accepted).count();
            Ok((accepted, rejected))
        })
        .collect::<Result<_>>()?;
    let gamma = Estimate::from_counts(results.iter().filter(|r| r.0).count(), trials);
    Ok(ClonabilityEstimate {
        q: setup.q,
        delta_hat: 1.0 - gamma.value,
        gamma,
        disturbance: Estimate::from_counts(
            results.iter().map(|r| r.1).sum(),
            trials * setup.q,
        ),
    })
}

/// Rejection rate of genuine rounds while `attack` sits on the channel.
pub fn estimate_disturbance(
    device: DeviceRef,
    cfg: &EnrollConfig,
    noise: &NoiseModel,
    attack: &AttackModel,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let outcomes = collect_batches(trials, cfg.n_target, |b| {
        let mut crt = enroll(device, cfg, &mut derive_rng(seed, "disturbance/enroll", b))?;
        let q = crt.live_count();
        let mut session = Session::new(&mut crt, *noise, false);
        let mut rng = derive_rng(seed, "disturbance/observe", b);
        let t = observe(&mut session, device, attack, q, &mut rng)?;
        Ok(t.rounds.iter().map(|r| !r.accepted).collect())
    })?;
    Ok(Estimate::from_counts(
        outcomes.iter().filter(|&&r| r).count(),
        trials,
    ))
}

/// Sampled error rates for the shifter of state `l` (row) meeting state
/// `l′` (column), `shots` measurements per cell.
pub fn table1_monte_carlo(phi: f64, shots: usize, seed: u64) -> Result<[[Estimate; 4]; 4]> {
    let enc = ChallengeEncoding::new(phi, 1)?;
    let cells: Vec<Estimate> = (0..16u64)
        .into_par_iter()
        .map(|cell| {
            let l = StateIndex::new(cell as u8 / 4 + 1)?;
            let l_prime = StateIndex::new(cell as u8 % 4 + 1)?;
            let shifter = shifter_for(&QubitRegister::new(vec![enc.state(l)])?);
            let rho = conjugate_channel(&shifter.gates[0], &DensityMatrix::pure(&enc.state(l_prime)));
            let mut rng = derive_rng(seed, "table1", cell);
            let ones = (0..shots)
                .filter(|_| measure_computational(&rho, &mut rng))
                .count();
            Ok(Estimate::from_counts(ones, shots))
        })
        .collect::<Result<_>>()?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| cells[4 * i + j])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub q: usize,
    pub gamma_hat: f64,
    pub delta_hat: f64,
    pub ci95: [f64; 2],
    pub disturbance_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub model: String,
    pub rho_hat: f64,
    pub rho_ci95: [f64; 2],
    pub rho_analytic: Option<f64>,
    /// `1 − ρ̃` from the Canetti predictor, when requested.
    pub canetti_robustness: Option<f64>,
    pub gamma: Vec<GammaPoint>,
    pub delta_star: f64,
    pub q_star: usize,
    /// `(ρ, δ*, q*)`.
    pub tuple: (f64, f64, usize),
    pub trials: usize,
    pub seed: u64,
}

/// `δ* = 1 − max_{q ≤ q*} γ̂(q)`; needs a point for every `q` in `0..=q*`.
pub fn security_tuple(
    model: CloneModel,
    rho: &Estimate,
    rho_analytic: Option<f64>,
    curve: &[ClonabilityEstimate],
    q_star: usize,
    seed: u64,
) -> Result<SecurityReport> {
    for q in 0..=q_star {
        if !curve.iter().any(|c| c.q == q) {
            return Err(Error::InvalidParameter(format!("no clonability estimate for q = {q}")));
        }
    }
    let max_gamma = curve
        .iter()
        .filter(|c| c.q <= q_star)
        .map(|c| c.gamma.value)
        .fold(0.0, f64::max);
    let delta_star = 1.0 - max_gamma;
    let mut gamma: Vec<GammaPoint> = curve
        .iter()
        .map(|c| GammaPoint {
            q: c.q,
            gamma_hat: c.gamma.value,
            delta_hat: c.delta_hat,
            ci95: c.gamma.ci95,
            disturbance_rate: c.disturbance.value,
        })
        .collect();
    gamma.sort_by_key(|g| g.q);
    Ok(SecurityReport {
        model: model.name().to_string(),
        rho_hat: rho.value,
        rho_ci95: rho.ci95,
        rho_analytic,
        canetti_robustness: None,
        gamma,
        delta_star,
        q_star,
        tuple: (rho.value, delta_star, q_star),
        trials: rho.trials,
        seed,
    })
}

impl SecurityReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub const TSV_HEADER: &'static str =
        "phi\tlambda\tp\tt\tmodel\tq\trho_hat\tgamma_hat\tdelta_hat\tdisturbance";

    /// One row per `q` of the clonability curve.
    pub fn tsv_rows(&self, phi: f64, lambda: usize, p: f64, t: usize) -> Vec<String> {
        self.gamma
            .iter()
            .map(|g| {
                format!(
                    "{phi:.6}\t{lambda}\t{p:.6}\t{t}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                    self.model, g.q, self.rho_hat, g.gamma_hat, g.delta_hat, g.disturbance_rate
                )
            })
            .collect()
    }
}
