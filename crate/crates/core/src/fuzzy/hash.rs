//! Toeplitz-matrix hashing with an offset vector: `r = T·y ⊕ b`.
//! Over uniformly random `(T, b)` the family is pairwise independent.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mathcore::BitString;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzHash {
    l: usize,
    m: usize,
    /// `T[i][j] = diag[i − j + l − 1]`, length `m + l − 1`.
    diag: BitString,
    offset: BitString,
    /// Row `i` of `T` packed little-endian into 64-bit words.
    rows: Vec<Vec<u64>>,
}

fn pack(bits: impl Iterator<Item = bool>, len: usize) -> Vec<u64> {
    let mut words = vec![0u64; len.div_ceil(64)];
    for (j, b) in bits.enumerate() {
        if b {
            words[j / 64] |= 1 << (j % 64);
        }
    }
    words
}

impl ToeplitzHash {
    pub fn seed_len(l: usize, m: usize) -> usize {
        2 * m + l - 1
    }

    /// Seed layout: the `m + l − 1` diagonal bits, then the `m` offset bits.
    pub fn from_seed(seed: &BitString, l: usize, m: usize) -> Result<Self> {
        if l == 0 || m == 0 {
            return Err(Error::InvalidParameter(
                "hash input and output lengths must be at least 1".into(),
            ));
        }
        let expected = Self::seed_len(l, m);
        if seed.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: seed.len(),
            });
        }
        let diag = seed.slice(0, m + l - 1);
        let rows = (0..m)
            .map(|i| pack((0..l).map(|j| diag.get(i + l - 1 - j)), l))
            .collect();
        Ok(Self {
            l,
            m,
            diag,
            offset: seed.slice(m + l - 1, expected),
            rows,
        })
    }

    pub fn random<R: Rng + ?Sized>(l: usize, m: usize, rng: &mut R) -> Result<Self> {
        Self::from_seed(&BitString::random(Self::seed_len(l, m), rng), l, m)
    }

    pub fn seed(&self) -> BitString {
        self.diag.concat(&self.offset)
    }

    pub fn input_len(&self) -> usize {
        self.l
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    pub fn apply(&self, y: &BitString) -> Result<BitString> {
        if y.len() != self.l {
            return Err(Error::LengthMismatch {
                expected: self.l,
                actual: y.len(),
            });
        }
        let y = pack(y.iter(), self.l);
        Ok(self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let ones: u32 = row.iter().zip(&y).map(|(r, v)| (r & v).count_ones()).sum();
                self.offset.get(i) ^ (ones % 2 == 1)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_explicit_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (l, m) = (6, 3);
        let h = ToeplitzHash::random(l, m, &mut rng).unwrap();
        let seed = h.seed();
        for v in 0..1u64 << l {
            let y = BitString::from_u64(v, l);
            let mut expect = Vec::new();
            for i in 0..m {
                let mut bit = seed.get(m + l - 1 + i);
                for j in 0..l {
                    bit ^= seed.get(i + l - 1 - j) & y.get(j);
                }
                expect.push(bit);
            }
            assert_eq!(h.apply(&y).unwrap(), BitString::new(expect));
        }
        assert_eq!(ToeplitzHash::from_seed(&seed, l, m).unwrap(), h);
        assert!(h.apply(&BitString::zeros(5)).is_err());
    }

    #[test]
    fn pairwise_independence_by_enumeration() {
        // over all seeds, (h(a), h(b)) is uniform on pairs for any a ≠ b
        let (l, m) = (3, 2);
        let n_seeds = 1u64 << ToeplitzHash::seed_len(l, m);
        let a = BitString::from_u64(0b011, l);
        let b = BitString::from_u64(0b110, l);
        let mut counts = [[0u64; 4]; 4];
        for s in 0..n_seeds {
            let h = ToeplitzHash::from_seed(&BitString::from_u64(s, 6), l, m).unwrap();
            let ha = h.apply(&a).unwrap().to_u64() as usize;
            let hb = h.apply(&b).unwrap().to_u64() as usize;
            counts[ha][hb] += 1;
        }
        for row in counts {
            for c in row {
                assert_eq!(c, n_seeds / 16);
            }
        }
    }
}
