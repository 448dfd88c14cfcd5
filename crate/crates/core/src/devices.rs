//! Degenerate devices at the two ends of the robustness/unclonability range:
//! a true random number generator and a constant-output device.

use rand::{Rng, RngCore};

use crate::classical_puf::ClassicalDevice;
use crate::error::{Error, Result};
use crate::mathcore::BitString;
use crate::qrpuf::{check_register_len, QuantumDevice};
use crate::qsim::{DensityMatrix, QubitRegister};

/// `size` distinct `len`-bit strings with pairwise distance ≥ `min_distance`.
pub fn separated_palette<R: Rng + ?Sized>(
    len: usize,
    size: usize,
    min_distance: usize,
    rng: &mut R,
) -> Result<Vec<BitString>> {
    if size == 0 || len == 0 || min_distance == 0 {
        return Err(Error::InvalidParameter(
            "palette needs positive length, size and distance".into(),
        ));
    }
    let mut palette: Vec<BitString> = Vec::with_capacity(size);
    let mut attempts = 0usize;
    while palette.len() < size {
        attempts += 1;
        if attempts > 10_000 * size {
            return Err(Error::InvalidParameter(format!(
                "cannot place {size} strings of length {len} at distance {min_distance}"
            )));
        }
        let candidate = BitString::random(len, rng);
        if palette.iter().all(|p| {
            p.iter()
                .zip(candidate.iter())
                .filter(|(a, b)| a != b)
                .count()
                >= min_distance
        }) {
            palette.push(candidate);
        }
    }
    Ok(palette)
}

/// Emits one of `N` fixed computational-basis registers uniformly at random,
/// independent of the input.
#[derive(Clone, Debug, PartialEq)]
pub struct RngQuantumDevice {
    palette: Vec<BitString>,
}

impl RngQuantumDevice {
    pub fn new(palette: Vec<BitString>) -> Result<Self> {
        let lambda = palette.first().map(BitString::len).unwrap_or(0);
        if lambda == 0 || palette.iter().any(|p| p.len() != lambda) {
            return Err(Error::InvalidParameter(
                "palette must be non-empty with equal positive lengths".into(),
            ));
        }
        Ok(Self { palette })
    }

    pub fn sample<R: Rng + ?Sized>(
        lambda: usize,
        outcomes: usize,
        min_distance: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new(separated_palette(lambda, outcomes, min_distance, rng)?)
    }

    pub fn palette(&self) -> &[BitString] {
        &self.palette
    }

    fn draw(&self, rng: &mut dyn RngCore) -> &BitString {
        &self.palette[rng.gen_range(0..self.palette.len())]
    }
}

impl QuantumDevice for RngQuantumDevice {
    fn lambda(&self) -> usize {
        self.palette[0].len()
    }

    fn respond(
        &self,
        input: &[DensityMatrix],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<DensityMatrix>> {
        check_register_len(self.lambda(), input.len())?;
        Ok(QubitRegister::basis(self.draw(rng))?.to_density())
    }

    fn characterize(
        &self,
        input: &QubitRegister,
        rng: &mut dyn RngCore,
    ) -> Result<QubitRegister> {
        check_register_len(self.lambda(), input.len())?;
        QubitRegister::basis(self.draw(rng))
    }
}

/// Always emits `|0⟩^⊗λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstantQuantumDevice {
    lambda: usize,
}

impl ConstantQuantumDevice {
    pub fn new(lambda: usize) -> Result<Self> {
        if lambda == 0 {
            return Err(Error::InvalidParameter("lambda must be at least 1".into()));
        }
        Ok(Self { lambda })
    }
}

impl QuantumDevice for ConstantQuantumDevice {
    fn lambda(&self) -> usize {
        self.lambda
    }

    fn respond(
        &self,
        input: &[DensityMatrix],
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<DensityMatrix>> {
        check_register_len(self.lambda, input.len())?;
        Ok(QubitRegister::all_zero(self.lambda)?.to_density())
    }

    fn characterize(
        &self,
        input: &QubitRegister,
        _rng: &mut dyn RngCore,
    ) -> Result<QubitRegister> {
        check_register_len(self.lambda, input.len())?;
        QubitRegister::all_zero(self.lambda)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RngClassicalDevice {
    challenge_len: usize,
    palette: Vec<BitString>,
}

impl RngClassicalDevice {
    pub fn sample<R: Rng + ?Sized>(
        challenge_len: usize,
        out_len: usize,
        outcomes: usize,
        min_distance: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if challenge_len == 0 {
            return Err(Error::InvalidParameter(
                "challenge length must be at least 1".into(),
            ));
        }
        Ok(Self {
            challenge_len,
            palette: separated_palette(out_len, outcomes, min_distance, rng)?,
        })
    }

    pub fn palette(&self) -> &[BitString] {
        &self.palette
    }
}

impl ClassicalDevice for RngClassicalDevice {
    fn challenge_len(&self) -> usize {
        self.challenge_len
    }

    fn outcome_len(&self) -> usize {
        self.palette[0].len()
    }

    fn respond(&self, x: &BitString, rng: &mut dyn RngCore) -> Result<BitString> {
        check_register_len(self.challenge_len, x.len())?;
        Ok(self.palette[rng.gen_range(0..self.palette.len())].clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstantClassicalDevice {
    challenge_len: usize,
    out_len: usize,
}

impl ConstantClassicalDevice {
    pub fn new(challenge_len: usize, out_len: usize) -> Result<Self> {
        if challenge_len == 0 || out_len == 0 {
            return Err(Error::InvalidParameter(
                "challenge and outcome lengths must be at least 1".into(),
            ));
        }
        Ok(Self {
            challenge_len,
            out_len,
        })
    }
}

impl ClassicalDevice for ConstantClassicalDevice {
    fn challenge_len(&self) -> usize {
        self.challenge_len
    }

    fn outcome_len(&self) -> usize {
        self.out_len
    }

    fn respond(&self, x: &BitString, _rng: &mut dyn RngCore) -> Result<BitString> {
        check_register_len(self.challenge_len, x.len())?;
        Ok(BitString::zeros(self.out_len))
    }
}
