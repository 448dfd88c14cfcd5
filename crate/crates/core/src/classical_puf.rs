//! Classical device models sharing the challenge → outcome → shifter →
//! error-string pipeline with the quantum-readout model.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{check_range, Error, Result};
use crate::mathcore::BitString;

/// A device mapping `n`-bit challenges to `out_len`-bit outcome states.
pub trait ClassicalDevice: Send + Sync {
    fn challenge_len(&self) -> usize;
    fn outcome_len(&self) -> usize;
    fn respond(&self, x: &BitString, rng: &mut dyn RngCore) -> Result<BitString>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalKind {
    /// Keyed pseudorandom function: a high-entropy, unlearnable device.
    KeyedRandom,
    /// Sign-threshold units over ±1 challenge bits: learnable, arbiter-like.
    LinearThreshold,
}

#[derive(Clone, Debug, PartialEq)]
enum Secret {
    Key([u8; 32]),
    /// One row per output bit: `n` weights then a bias.
    Weights(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalPuf {
    kind: ClassicalKind,
    n: usize,
    out_len: usize,
    secret: Secret,
}

impl ClassicalPuf {
    pub fn kind(&self) -> ClassicalKind {
        self.kind
    }

    /// Noiseless outcome state.
    pub fn evaluate(&self, x: &BitString) -> Result<BitString> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(match &self.secret {
            Secret::Key(key) => keyed_stream(key, x, self.out_len),
            Secret::Weights(rows) => rows
                .iter()
                .map(|row| threshold_unit(row, x) > 0.0)
                .collect(),
        })
    }

    /// Weight rows of a linear-threshold device.
    pub fn weights(&self) -> Option<&[Vec<f64>]> {
        match &self.secret {
            Secret::Weights(rows) => Some(rows),
            Secret::Key(_) => None,
        }
    }
}

impl ClassicalDevice for ClassicalPuf {
    fn challenge_len(&self) -> usize {
        self.n
    }

    fn outcome_len(&self) -> usize {
        self.out_len
    }

    fn respond(&self, x: &BitString, _rng: &mut dyn RngCore) -> Result<BitString> {
        self.evaluate(x)
    }
}

/// Maps challenge bit `b` to `+1` (0) or `−1` (1).
pub fn signed_features(x: &BitString) -> impl Iterator<Item = f64> + '_ {
    x.iter().map(|b| if b { -1.0 } else { 1.0 })
}

fn threshold_unit(row: &[f64], x: &BitString) -> f64 {
    let n = row.len() - 1;
    row[..n]
        .iter()
        .zip(signed_features(x))
        .map(|(w, f)| w * f)
        .sum::<f64>()
        + row[n]
}

fn keyed_stream(key: &[u8; 32], x: &BitString, out_len: usize) -> BitString {
    let mut bits = Vec::with_capacity(out_len);
    let mut counter = 0u32;
    while bits.len() < out_len {
        let mut h = Sha256::new();
        h.update(key);
        h.update((x.len() as u64).to_be_bytes());
        h.update(x.to_bytes());
        h.update(counter.to_be_bytes());
        for byte in h.finalize() {
            for i in 0..8 {
                if bits.len() < out_len {
                    bits.push(byte & (0x80 >> i) != 0);
                }
            }
        }
        counter += 1;
    }
    BitString::new(bits)
}

pub fn sample_classical_puf<R: Rng + ?Sized>(
    kind: ClassicalKind,
    n: usize,
    out_len: usize,
    rng: &mut R,
) -> Result<ClassicalPuf> {
    if n == 0 || out_len == 0 {
        return Err(Error::InvalidParameter(
            "challenge and outcome lengths must be at least 1".into(),
        ));
    }
    let secret = match kind {
        ClassicalKind::KeyedRandom => {
            let mut key = [0u8; 32];
            rng.fill_bytes(&mut key);
            Secret::Key(key)
        }
        ClassicalKind::LinearThreshold => Secret::Weights(
            (0..out_len)
                .map(|_| (0..=n).map(|_| rng.sample(StandardNormal)).collect())
                .collect(),
        ),
    };
    Ok(ClassicalPuf {
        kind,
        n,
        out_len,
        secret,
    })
}

pub fn evaluate_classical(puf: &ClassicalPuf, x: &BitString) -> Result<BitString> {
    puf.evaluate(x)
}

/// XOR shifter: `w` is the expected outcome state itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalShifter {
    w: BitString,
}

impl ClassicalShifter {
    pub fn w(&self) -> &BitString {
        &self.w
    }

    pub fn apply(&self, outcome_state: &BitString) -> Result<BitString> {
        outcome_state.xor(&self.w)
    }
}

pub fn classical_shifter(expected: &BitString) -> ClassicalShifter {
    ClassicalShifter {
        w: expected.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalNoise {
    flip_p: f64,
}

impl ClassicalNoise {
    pub fn new(flip_p: f64) -> Result<Self> {
        check_range("flip_p", flip_p, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { flip_p })
    }

    pub fn noiseless() -> Self {
        Self { flip_p: 0.0 }
    }

    pub fn flip_p(&self) -> f64 {
        self.flip_p
    }

    /// Flips each bit independently; one draw per bit.
    pub fn apply<R: Rng + ?Sized>(&self, s: &BitString, rng: &mut R) -> BitString {
        s.iter()
            .map(|b| {
                let u: f64 = rng.gen();
                b ^ (u < self.flip_p)
            })
            .collect()
    }
}

/// Error string `o` read from any classical device through the XOR shifter.
pub fn noisy_readout_classical(
    device: &dyn ClassicalDevice,
    shifter: &ClassicalShifter,
    x: &BitString,
    noise: &ClassicalNoise,
    rng: &mut dyn RngCore,
) -> Result<BitString> {
    let outcome = device.respond(x, rng)?;
    let noisy = noise.apply(&outcome, rng);
    shifter.apply(&noisy)
}

pub fn readout_classical(
    puf: &ClassicalPuf,
    expected: &BitString,
    x: &BitString,
    noise: &ClassicalNoise,
    rng: &mut dyn RngCore,
) -> Result<BitString> {
    noisy_readout_classical(puf, &classical_shifter(expected), x, noise, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        for kind in [ClassicalKind::KeyedRandom, ClassicalKind::LinearThreshold] {
            let a = sample_classical_puf(kind, 16, 32, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let b = sample_classical_puf(kind, 16, 32, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            assert_eq!(a, b);
        }
        assert!(sample_classical_puf(
            ClassicalKind::KeyedRandom,
            0,
            8,
            &mut ChaCha8Rng::seed_from_u64(1)
        )
        .is_err());
    }

    #[test]
    fn evaluation_is_deterministic_and_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in [ClassicalKind::KeyedRandom, ClassicalKind::LinearThreshold] {
            let puf = sample_classical_puf(kind, 12, 40, &mut rng).unwrap();
            let x = BitString::random(12, &mut rng);
            let first = evaluate_classical(&puf, &x).unwrap();
            assert_eq!(first.len(), 40);
            for _ in 0..1000 {
                assert_eq!(evaluate_classical(&puf, &x).unwrap(), first);
            }
            // any challenge of the right length evaluates
            for v in 0..64 {
                assert!(evaluate_classical(&puf, &BitString::from_u64(v, 12)).is_ok());
            }
            assert!(evaluate_classical(&puf, &BitString::zeros(11)).is_err());
        }
    }

    #[test]
    fn keyed_random_golden_vector() {
        let puf = sample_classical_puf(
            ClassicalKind::KeyedRandom,
            8,
            24,
            &mut ChaCha8Rng::seed_from_u64(2024),
        )
        .unwrap();
        let x = bs("10110010");
        let golden = evaluate_classical(&puf, &x).unwrap();
        // the key is 32 raw bytes from the seeded stream
        let mut key = [0u8; 32];
        ChaCha8Rng::seed_from_u64(2024).fill_bytes(&mut key);
        let mut h = Sha256::new();
        h.update(key);
        h.update(8u64.to_be_bytes());
        h.update([0b1011_0010]);
        h.update(0u32.to_be_bytes());
        let digest = h.finalize();
        let expected = BitString::from_bytes(&digest[..3], 24).unwrap();
        assert_eq!(golden, expected);
    }

    #[test]
    fn keyed_random_avalanche() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out_len = 64;
        let puf = sample_classical_puf(ClassicalKind::KeyedRandom, 32, out_len, &mut rng).unwrap();
        let pairs = 1000;
        let mut total = 0usize;
        for _ in 0..pairs {
            let a = BitString::random(32, &mut rng);
            let mut b = BitString::random(32, &mut rng);
            while b == a {
                b = BitString::random(32, &mut rng);
            }
            total += evaluate_classical(&puf, &a)
                .unwrap()
                .xor(&evaluate_classical(&puf, &b).unwrap())
                .unwrap()
                .weight();
        }
        let mean = total as f64 / pairs as f64 / out_len as f64;
        assert!((0.45..=0.55).contains(&mean), "mean distance fraction {mean}");
    }

    #[test]
    fn linear_threshold_single_bit_flips_are_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 32;
        let out_len = 64;
        let puf = sample_classical_puf(ClassicalKind::LinearThreshold, n, out_len, &mut rng).unwrap();
        let trials = 500;
        let mut flipped = 0usize;
        for _ in 0..trials {
            let x = BitString::random(n, &mut rng);
            let mut x2 = x.clone();
            x2.flip(rng.gen_range(0..n));
            flipped += evaluate_classical(&puf, &x)
                .unwrap()
                .xor(&evaluate_classical(&puf, &x2).unwrap())
                .unwrap()
                .weight();
        }
        let rate = flipped as f64 / (trials * out_len) as f64;
        assert!(rate > 0.0 && rate < 0.25, "single-bit flip rate {rate}");
    }

    #[test]
    fn shifter_examples() {
        let y = bs("1010");
        let s = classical_shifter(&y);
        assert_eq!(s.apply(&y).unwrap(), BitString::zeros(4));
        assert_eq!(s.apply(&bs("1011")).unwrap().weight(), 1);
        assert_eq!(s.apply(&bs("1001")).unwrap(), bs("0011"));
        assert_eq!(s.w(), &y);
    }

    #[test]
    fn readout_noise_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out_len = 100;
        let puf = sample_classical_puf(ClassicalKind::KeyedRandom, 16, out_len, &mut rng).unwrap();
        let x = BitString::random(16, &mut rng);
        let expected = evaluate_classical(&puf, &x).unwrap();

        let o = readout_classical(&puf, &expected, &x, &ClassicalNoise::noiseless(), &mut rng).unwrap();
        assert_eq!(o, BitString::zeros(out_len));

        let o = readout_classical(&puf, &expected, &x, &ClassicalNoise::new(1.0).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(o, BitString::ones(out_len));

        let runs = 10_000;
        let noise = ClassicalNoise::new(0.05).unwrap();
        let total: usize = (0..runs)
            .map(|_| readout_classical(&puf, &expected, &x, &noise, &mut rng).unwrap().weight())
            .sum();
        let mean = total as f64 / runs as f64;
        let sigma = (out_len as f64 * 0.05 * 0.95 / runs as f64).sqrt();
        assert!((mean - 5.0).abs() <= 3.0 * sigma, "mean weight {mean}");
        assert!(ClassicalNoise::new(1.2).is_err());
    }

    #[test]
    fn manual_flips_show_up_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let puf = sample_classical_puf(ClassicalKind::LinearThreshold, 10, 30, &mut rng).unwrap();
        let x = BitString::random(10, &mut rng);
        let expected = evaluate_classical(&puf, &x).unwrap();
        let shifter = classical_shifter(&expected);
        for k in 0..=30 {
            let mut noisy = expected.clone();
            for i in 0..k {
                noisy.flip(i);
            }
            assert_eq!(shifter.apply(&noisy).unwrap().weight(), k);
        }
    }
}
