//! Binary linear codes for the code-offset sketch, each with a
//! bounded-distance decoder.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mathcore::BitString;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Code {
    /// Every word is a codeword; corrects nothing.
    Trivial(usize),
    /// Odd-length repetition code.
    Repetition(usize),
    Hamming74,
    Bch(BchCode),
}

impl Code {
    pub fn repetition(n: usize) -> Result<Self> {
        if n == 0 || n % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "repetition block length must be odd, got {n}"
            )));
        }
        Ok(Code::Repetition(n))
    }

    pub fn trivial(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("code length must be at least 1".into()));
        }
        Ok(Code::Trivial(n))
    }

    /// Smallest code of length `len` whose decoding radius covers `t`:
    /// trivial for `t = 0`, then shortened BCH, then repetition.
    pub fn for_radius(len: usize, t: usize) -> Result<Self> {
        if t == 0 {
            return Code::trivial(len);
        }
        let mut m = 3;
        while (1usize << m) - 1 < len {
            m += 1;
        }
        if m <= MAX_FIELD_DEGREE {
            if let Ok(code) = BchCode::new(m, t, len) {
                return Ok(Code::Bch(code));
            }
        }
        if len % 2 == 1 && 2 * t < len {
            return Ok(Code::Repetition(len));
        }
        Err(Error::InvalidParameter(format!(
            "no code of length {len} corrects {t} errors"
        )))
    }

    /// Block length `l_o`.
    pub fn len(&self) -> usize {
        match self {
            Code::Trivial(n) | Code::Repetition(n) => *n,
            Code::Hamming74 => 7,
            Code::Bch(b) => b.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self) -> usize {
        match self {
            Code::Trivial(n) => *n,
            Code::Repetition(_) => 1,
            Code::Hamming74 => 4,
            Code::Bch(b) => b.dimension(),
        }
    }

    /// Minimum distance (designed distance for BCH).
    pub fn min_distance(&self) -> usize {
        match self {
            Code::Trivial(_) => 1,
            Code::Repetition(n) => *n,
            Code::Hamming74 => 3,
            Code::Bch(b) => 2 * b.t + 1,
        }
    }

    pub fn max_radius(&self) -> usize {
        (self.min_distance() - 1) / 2
    }

    pub fn encode(&self, msg: &BitString) -> Result<BitString> {
        if msg.len() != self.dimension() {
            return Err(Error::LengthMismatch {
                expected: self.dimension(),
                actual: msg.len(),
            });
        }
        Ok(match self {
            Code::Trivial(_) => msg.clone(),
            Code::Repetition(n) => {
                if msg.get(0) {
                    BitString::ones(*n)
                } else {
                    BitString::zeros(*n)
                }
            }
            Code::Hamming74 => hamming_encode(msg),
            Code::Bch(b) => b.encode(msg),
        })
    }

    pub fn random_codeword<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        let msg = BitString::random(self.dimension(), rng);
        self.encode(&msg).expect("message has code dimension")
    }

    /// Nearest codeword within Hamming distance `radius`, or `None`.
    pub fn decode(&self, word: &BitString, radius: usize) -> Result<Option<BitString>> {
        if word.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: word.len(),
            });
        }
        let candidate = match self {
            Code::Trivial(_) => Some(word.clone()),
            Code::Repetition(n) => {
                let w = word.weight();
                Some(if 2 * w < *n {
                    BitString::zeros(*n)
                } else {
                    BitString::ones(*n)
                })
            }
            Code::Hamming74 => Some(hamming_decode(word)),
            Code::Bch(b) => b.decode(word),
        };
        Ok(candidate.filter(|c| distance(c, word) <= radius))
    }

    /// All codewords; only for small dimensions.
    pub fn codewords(&self) -> Result<Vec<BitString>> {
        let k = self.dimension();
        if k > 20 {
            return Err(Error::DomainTooLarge(1 << 20));
        }
        (0..1u64 << k)
            .map(|v| self.encode(&BitString::from_u64(v, k)))
            .collect()
    }
}

fn distance(a: &BitString, b: &BitString) -> usize {
    a.iter().zip(b.iter()).filter(|(x, y)| x != y).count()
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Code::Trivial(n) => write!(f, "none:{n}"),
            Code::Repetition(n) => write!(f, "rep:{n}"),
            Code::Hamming74 => write!(f, "hamming:7:4"),
            Code::Bch(b) => write!(f, "bch:{}:{}:{}", b.m, b.t, b.len),
        }
    }
}

impl FromStr for Code {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            context: "code".into(),
            message: format!("unrecognized code descriptor {s:?}"),
        };
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["none", n] => Code::trivial(num(n)?),
            ["rep", n] => Code::repetition(num(n)?),
            ["hamming", "7", "4"] => Ok(Code::Hamming74),
            ["bch", m, t, len] => Ok(Code::Bch(BchCode::new(num(m)?, num(t)?, num(len)?)?)),
            _ => Err(bad()),
        }
    }
}

// Hamming(7,4): position i (1-based) has parity-check column i; parity bits
// sit at positions 1, 2, 4 and data at 3, 5, 6, 7.
const HAMMING_DATA: [usize; 4] = [2, 4, 5, 6];

fn hamming_syndrome(word: &BitString) -> usize {
    (0..7)
        .filter(|&i| word.get(i))
        .fold(0, |s, i| s ^ (i + 1))
}

fn hamming_encode(msg: &BitString) -> BitString {
    let mut c = BitString::zeros(7);
    for (k, &pos) in HAMMING_DATA.iter().enumerate() {
        c.set(pos, msg.get(k));
    }
    let s = hamming_syndrome(&c);
    for (bit, pos) in [(1, 0), (2, 1), (4, 3)] {
        if s & bit != 0 {
            c.set(pos, true);
        }
    }
    c
}

fn hamming_decode(word: &BitString) -> BitString {
    let mut c = word.clone();
    let s = hamming_syndrome(word);
    if s != 0 {
        c.flip(s - 1);
    }
    c
}

const MAX_FIELD_DEGREE: usize = 12;

fn primitive_poly(m: usize) -> Option<u32> {
    Some(match m {
        3 => 0b1011,
        4 => 0b1_0011,
        5 => 0b10_0101,
        6 => 0b100_0011,
        7 => 0b1000_1001,
        8 => 0b1_0001_1101,
        9 => 0b10_0001_0001,
        10 => 0b100_0000_1001,
        11 => 0b1000_0000_0101,
        12 => 0b1_0000_0101_0011,
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Gf {
    n: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Gf {
    fn new(m: usize) -> Option<Self> {
        let poly = primitive_poly(m)?;
        let n = (1usize << m) - 1;
        let mut exp = vec![0u16; 2 * n];
        let mut log = vec![0u16; n + 1];
        let mut x: u32 = 1;
        for i in 0..n {
            exp[i] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        for i in n..2 * n {
            exp[i] = exp[i - n];
        }
        Some(Self { n, exp, log })
    }

    fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    fn div(&self, a: u16, b: u16) -> u16 {
        if a == 0 {
            0
        } else {
            let e = self.log[a as usize] as usize + self.n - self.log[b as usize] as usize;
            self.exp[e % self.n]
        }
    }

    fn pow_alpha(&self, e: usize) -> u16 {
        self.exp[e % self.n]
    }
}

/// Narrow-sense primitive binary BCH code over GF(2^m), designed radius `t`,
/// shortened to length `len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BchCode {
    m: usize,
    t: usize,
    len: usize,
    /// Generator coefficients, lowest degree first.
    generator: Vec<bool>,
    field: Gf,
}

impl BchCode {
    pub fn new(m: usize, t: usize, len: usize) -> Result<Self> {
        let field = Gf::new(m).ok_or_else(|| {
            Error::InvalidParameter(format!("BCH field degree must be 3..={MAX_FIELD_DEGREE}"))
        })?;
        if t == 0 || len == 0 || len > field.n {
            return Err(Error::InvalidParameter(format!(
                "BCH needs t ≥ 1 and 1 ≤ len ≤ {}",
                field.n
            )));
        }
        // roots: union of cyclotomic cosets of 1..=2t
        let mut roots = vec![false; field.n];
        for i in 1..=2 * t {
            let mut j = i % field.n;
            while !roots[j] {
                roots[j] = true;
                j = (2 * j) % field.n;
            }
        }
        let mut g: Vec<u16> = vec![1];
        for (j, _) in roots.iter().enumerate().filter(|(_, &r)| r) {
            let a = field.pow_alpha(j);
            let mut next = vec![0u16; g.len() + 1];
            for (k, &c) in g.iter().enumerate() {
                next[k + 1] ^= c;
                next[k] ^= field.mul(c, a);
            }
            g = next;
        }
        let generator: Vec<bool> = g.iter().map(|&c| c == 1).collect();
        debug_assert!(g.iter().all(|&c| c <= 1));
        if generator.len() > len {
            return Err(Error::InvalidParameter(format!(
                "BCH(m={m}, t={t}) shortened to {len} has no message bits"
            )));
        }
        Ok(Self {
            m,
            t,
            len,
            generator,
            field,
        })
    }

    pub fn designed_radius(&self) -> usize {
        self.t
    }

    pub fn dimension(&self) -> usize {
        self.len - self.parity_len()
    }

    fn parity_len(&self) -> usize {
        self.generator.len() - 1
    }

    /// Systematic: message occupies the high-degree positions.
    fn encode(&self, msg: &BitString) -> BitString {
        let r = self.parity_len();
        let mut rem = vec![false; self.len];
        for (i, b) in msg.iter().enumerate() {
            rem[r + i] = b;
        }
        let mut work = rem.clone();
        for deg in (r..self.len).rev() {
            if work[deg] {
                for (k, &gk) in self.generator.iter().enumerate() {
                    work[deg - r + k] ^= gk;
                }
            }
        }
        rem[..r].copy_from_slice(&work[..r]);
        BitString::new(rem)
    }

    fn syndromes(&self, word: &BitString) -> Vec<u16> {
        (1..=2 * self.t)
            .map(|j| {
                word.iter()
                    .enumerate()
                    .filter(|(_, b)| *b)
                    .fold(0u16, |s, (i, _)| s ^ self.field.pow_alpha(i * j))
            })
            .collect()
    }

    fn decode(&self, word: &BitString) -> Option<BitString> {
        let s = self.syndromes(word);
        if s.iter().all(|&x| x == 0) {
            return Some(word.clone());
        }
        let locator = self.berlekamp_massey(&s);
        let degree = locator.len() - 1;
        if degree > self.t {
            return None;
        }
        let mut fixed = word.clone();
        let mut found = 0;
        for i in 0..self.len {
            // root at α^{-i} marks an error at position i
            let inv = self.field.pow_alpha(self.field.n - i % self.field.n);
            let mut v = 0u16;
            let mut xp = 1u16;
            for &c in &locator {
                v ^= self.field.mul(c, xp);
                xp = self.field.mul(xp, inv);
            }
            if v == 0 {
                fixed.flip(i);
                found += 1;
            }
        }
        if found != degree || self.syndromes(&fixed).iter().any(|&x| x != 0) {
            return None;
        }
        Some(fixed)
    }

    fn berlekamp_massey(&self, s: &[u16]) -> Vec<u16> {
        let f = &self.field;
        let mut c = vec![1u16];
        let mut b = vec![1u16];
        let mut l = 0usize;
        let mut shift = 1usize;
        let mut last = 1u16;
        for n in 0..s.len() {
            let mut d = s[n];
            for i in 1..=l.min(c.len() - 1) {
                d ^= f.mul(c[i], s[n - i]);
            }
            if d == 0 {
                shift += 1;
                continue;
            }
            let coef = f.div(d, last);
            let mut next = c.clone();
            if next.len() < b.len() + shift {
                next.resize(b.len() + shift, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                next[i + shift] ^= f.mul(coef, bi);
            }
            if 2 * l <= n {
                l = n + 1 - l;
                b = c;
                last = d;
                shift = 1;
            } else {
                shift += 1;
            }
            c = next;
        }
        c.truncate(l + 1);
        while c.len() > 1 && *c.last().unwrap() == 0 {
            c.pop();
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_weight_le(n: usize, w: usize) -> Vec<BitString> {
        (0..1u64 << n)
            .map(|v| BitString::from_u64(v, n))
            .filter(|e| e.weight() <= w)
            .collect()
    }

    #[test]
    fn descriptors_round_trip() {
        for d in ["none:5", "rep:7", "hamming:7:4", "bch:5:2:16", "bch:4:1:15"] {
            let code: Code = d.parse().unwrap();
            assert_eq!(code.to_string(), d);
        }
        for bad in ["rep:4", "bch:2:1:3", "bch:5:3:10", "golay", "rep:x"] {
            assert!(bad.parse::<Code>().is_err(), "{bad}");
        }
    }

    #[test]
    fn hamming_is_perfect() {
        let code = Code::Hamming74;
        let words = code.codewords().unwrap();
        assert_eq!(words.len(), 16);
        for a in &words {
            assert_eq!(hamming_syndrome(a), 0);
            for b in &words {
                if a != b {
                    assert!(distance(a, b) >= 3);
                }
            }
            for e in all_weight_le(7, 1) {
                let r = a.xor(&e).unwrap();
                assert_eq!(code.decode(&r, 1).unwrap().as_ref(), Some(a));
            }
        }
        // radius 0 rejects any error
        let c = &words[5];
        let mut r = c.clone();
        r.flip(2);
        assert_eq!(code.decode(&r, 0).unwrap(), None);
    }

    #[test]
    fn repetition_bounded_decoding() {
        let code = Code::repetition(5).unwrap();
        let zero = BitString::zeros(5);
        assert_eq!(code.decode(&"00011".parse().unwrap(), 2).unwrap(), Some(zero.clone()));
        assert_eq!(code.decode(&"00011".parse().unwrap(), 1).unwrap(), None);
        assert_eq!(
            code.decode(&"11101".parse().unwrap(), 1).unwrap(),
            Some(BitString::ones(5))
        );
    }

    #[test]
    fn bch_parameters_match_known_codes() {
        // (15,11), (15,7), (15,5), (31,26), (31,21), (31,16), (63,51)
        for (m, t, k) in [(4, 1, 11), (4, 2, 7), (4, 3, 5), (5, 1, 26), (5, 2, 21), (5, 3, 16), (6, 2, 51)] {
            let n = (1 << m) - 1;
            let b = BchCode::new(m, t, n).unwrap();
            assert_eq!(b.dimension(), k, "m={m} t={t}");
        }
    }

    #[test]
    fn bch_corrects_up_to_t_exhaustively() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (m, t, len) in [(4, 2, 15), (5, 2, 16), (5, 3, 16), (4, 3, 12)] {
            let code = Code::Bch(BchCode::new(m, t, len).unwrap());
            for _ in 0..4 {
                let c = code.random_codeword(&mut rng);
                assert_eq!(code.decode(&c, t).unwrap().as_ref(), Some(&c));
                for e in all_weight_le(len, t) {
                    let r = c.xor(&e).unwrap();
                    assert_eq!(code.decode(&r, t).unwrap().as_ref(), Some(&c));
                }
            }
        }
    }

    #[test]
    fn bch_never_returns_a_far_word() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = 2;
        let code = Code::Bch(BchCode::new(5, t, 16).unwrap());
        let words = code.codewords().unwrap();
        for _ in 0..2000 {
            let r = BitString::random(16, &mut rng);
            if let Some(c) = code.decode(&r, t).unwrap() {
                assert!(distance(&c, &r) <= t);
                assert!(words.contains(&c));
            }
        }
    }

    #[test]
    fn automatic_choice_for_sixteen_bits() {
        assert_eq!(Code::for_radius(16, 0).unwrap(), Code::Trivial(16));
        for (t, k) in [(1, 11), (2, 6), (3, 1)] {
            let code = Code::for_radius(16, t).unwrap();
            assert_eq!((code.len(), code.dimension()), (16, k));
            assert!(code.max_radius() >= t);
        }
        // BCH(15, 1) at t = 7 is the repetition code
        let code = Code::for_radius(15, 7).unwrap();
        assert_eq!((code.dimension(), code.max_radius()), (1, 7));
        assert_eq!(Code::for_radius(17, 8).unwrap(), Code::Repetition(17));
    }
}
