//! `(𝒴, s, m, t, ε)` fuzzy extractor: a code-offset sketch on the `o`
//! segment of `y = w ∥ o` and Toeplitz hashing of the whole of `y`.

mod code;
mod hash;

use std::collections::HashMap;

use log::debug;
use rand::Rng;

pub use code::{BchCode, Code};
pub use hash::ToeplitzHash;

use crate::error::{check_range, Error, Result};
use crate::mathcore::{min_entropy, BitString, Distribution};

/// Largest `𝒴` the audit will enumerate.
pub const AUDIT_DOMAIN_LIMIT: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct FeParams {
    l: usize,
    m: usize,
    t: usize,
    epsilon: f64,
    s: f64,
    code: Code,
    hash: ToeplitzHash,
}

impl FeParams {
    pub fn new(
        l: usize,
        m: usize,
        t: usize,
        epsilon: f64,
        s: f64,
        code: Code,
        hash_seed: &BitString,
    ) -> Result<Self> {
        let l_o = code.len();
        if l_o > l {
            return Err(Error::InvalidParameter(format!(
                "code length {l_o} exceeds outcome length {l}"
            )));
        }
        if t >= l_o || t > code.max_radius() {
            return Err(Error::InvalidParameter(format!(
                "t = {t} must be below l_o = {l_o} and within the radius {} of {code}",
                code.max_radius()
            )));
        }
        if m == 0 || m > l {
            return Err(Error::InvalidParameter(format!("m = {m} must lie in 1..={l}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::OutOfRange {
                name: "epsilon",
                value: epsilon,
                range: "(0, 1)",
            });
        }
        let params = Self {
            l,
            m,
            t,
            epsilon,
            s,
            code,
            hash: ToeplitzHash::from_seed(hash_seed, l, m)?,
        };
        if !params.within_extractor_budget() {
            debug!(
                "m = {m} exceeds s − 2·log2(1/ε) + 2 = {:.2}",
                params.extractor_budget()
            );
        }
        Ok(params)
    }

    /// Same as [`FeParams::new`] with a freshly drawn hash seed.
    pub fn random<R: Rng + ?Sized>(
        l: usize,
        m: usize,
        t: usize,
        epsilon: f64,
        s: f64,
        code: Code,
        rng: &mut R,
    ) -> Result<Self> {
        let seed = BitString::random(ToeplitzHash::seed_len(l, m), rng);
        Self::new(l, m, t, epsilon, s, code, &seed)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn l_o(&self) -> usize {
        self.code.len()
    }

    pub fn l_w(&self) -> usize {
        self.l - self.code.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn code(&self) -> &Code {
        &self.code
    }

    pub fn hash(&self) -> &ToeplitzHash {
        &self.hash
    }

    pub fn hash_seed(&self) -> BitString {
        self.hash.seed()
    }

    pub fn extractor_budget(&self) -> f64 {
        self.s - 2.0 * (1.0 / self.epsilon).log2() + 2.0
    }

    pub fn within_extractor_budget(&self) -> bool {
        self.m as f64 <= self.extractor_budget()
    }
}

/// Public output of `gen`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperData {
    pub sketch: BitString,
    pub seed: BitString,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RepOutcome {
    Recovered(BitString),
    /// The noisy `o` lies outside the decoding radius of every codeword.
    Uncorrectable,
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

pub fn gen<R: Rng + ?Sized>(
    y: &BitString,
    params: &FeParams,
    rng: &mut R,
) -> Result<(BitString, HelperData)> {
    check_len(params.l, y.len())?;
    let o = y.slice(params.l_w(), params.l);
    let sketch = o.xor(&params.code.random_codeword(rng))?;
    let r = params.hash.apply(y)?;
    Ok((
        r,
        HelperData {
            sketch,
            seed: params.hash_seed(),
        },
    ))
}

pub fn rep(y_prime: &BitString, h: &HelperData, params: &FeParams) -> Result<RepOutcome> {
    check_len(params.l, y_prime.len())?;
    check_len(params.l_o(), h.sketch.len())?;
    if h.seed != params.hash_seed() {
        return Err(Error::InvalidParameter(
            "helper data belongs to a different hash instance".into(),
        ));
    }
    let l_w = params.l_w();
    let o_prime = y_prime.slice(l_w, params.l);
    let Some(c) = params.code.decode(&h.sketch.xor(&o_prime)?, params.t)? else {
        return Ok(RepOutcome::Uncorrectable);
    };
    let y = y_prime.slice(0, l_w).concat(&h.sketch.xor(&c)?);
    Ok(RepOutcome::Recovered(params.hash.apply(&y)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanettiCorrectness {
    /// Clamped to `[0, 1]`.
    pub rho_tilde: f64,
    pub raw: f64,
    pub robustness: f64,
}

/// `ρ̃ = (1 − (1 − t/l)^m)^ξ₁ + ξ₁ξ₂`.
pub fn canetti_correctness(
    t: usize,
    l: usize,
    m: usize,
    xi1: u32,
    xi2: f64,
) -> Result<CanettiCorrectness> {
    if l == 0 || t > l {
        return Err(Error::InvalidParameter(format!("need 0 ≤ t ≤ l, l ≥ 1 (t={t}, l={l})")));
    }
    if xi1 == 0 {
        return Err(Error::InvalidParameter("xi1 must be at least 1".into()));
    }
    check_range("xi2", xi2, 0.0, 1.0, "[0, 1]")?;
    let base = 1.0 - (1.0 - t as f64 / l as f64).powi(m as i32);
    let raw = base.powi(xi1 as i32) + xi1 as f64 * xi2;
    let rho_tilde = raw.clamp(0.0, 1.0);
    Ok(CanettiCorrectness {
        rho_tilde,
        raw,
        robustness: 1.0 - rho_tilde,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformityAudit {
    /// `D_S(p_RH, p_UH)`.
    pub distance: f64,
    /// `I(R; H)` in bits.
    pub mutual_information: f64,
    pub min_entropy: f64,
    /// Set when `dist` has less min-entropy than the assumed `s`.
    pub s_violation: bool,
}

impl UniformityAudit {
    pub fn within(&self, epsilon: f64) -> bool {
        self.distance <= epsilon
    }
}

/// Exact statistical distance between `(r, h)` and `(uniform, h)` by
/// enumerating `dist` and every sketch codeword.
pub fn uniformity_audit(
    params: &FeParams,
    domain: &[BitString],
    dist: &Distribution<BitString>,
) -> Result<UniformityAudit> {
    if domain.len() > AUDIT_DOMAIN_LIMIT {
        return Err(Error::DomainTooLarge(domain.len()));
    }
    let codewords = params.code.codewords()?;
    if domain.len().saturating_mul(codewords.len()) > 1 << 24 || params.m > 24 {
        return Err(Error::DomainTooLarge(domain.len() * codewords.len()));
    }
    let in_domain: std::collections::HashSet<&BitString> = domain.iter().collect();
    let l_w = params.l_w();
    let mut joint: HashMap<(u64, BitString), f64> = HashMap::new();
    for (y, p) in dist.iter() {
        check_len(params.l, y.len())?;
        if !in_domain.contains(y) {
            return Err(Error::InvalidDistribution(format!("{y} is outside the domain")));
        }
        if p == 0.0 {
            continue;
        }
        let r = params.hash.apply(y)?.to_u64();
        let o = y.slice(l_w, params.l);
        let share = p / codewords.len() as f64;
        for c in &codewords {
            *joint.entry((r, o.xor(c)?)).or_default() += share;
        }
    }
    let mut p_h: HashMap<&BitString, f64> = HashMap::new();
    let mut p_r: HashMap<u64, f64> = HashMap::new();
    for ((r, s), p) in &joint {
        *p_h.entry(s).or_default() += p;
        *p_r.entry(*r).or_default() += p;
    }
    let r_space = (1u64 << params.m) as f64;
    let mut distance = 0.0;
    let mut seen_per_sketch: HashMap<&BitString, usize> = HashMap::new();
    for ((_, s), p) in &joint {
        let uniform = p_h[s] / r_space;
        distance += (p - uniform).abs();
        *seen_per_sketch.entry(s).or_default() += 1;
    }
    for (s, ph) in &p_h {
        let unseen = r_space - seen_per_sketch[s] as f64;
        distance += unseen * ph / r_space;
    }
    let mutual_information = joint
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|((r, s), p)| p * (p / (p_r[r] * p_h[s])).log2())
        .sum::<f64>()
        .max(0.0);
    let h_min = min_entropy(dist);
    Ok(UniformityAudit {
        distance: 0.5 * distance,
        mutual_information,
        min_entropy: h_min,
        s_violation: h_min + 1e-12 < params.s,
    })
}
