//! Latent noise draws and seeded random streams.

use alloc::vec::Vec;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseDistribution {
    StdNormal,
    /// Success probability `zeta`; values are `0.0` or `1.0`.
    Bernoulli(f64),
    /// Standard Laplace, scale 1.
    Laplace,
    /// Uniform on the open interval `(0, 1)`.
    Uniform01,
}

impl NoiseDistribution {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::StdNormal => rng.sample(StandardNormal),
            Self::Bernoulli(zeta) => {
                if rng.random::<f64>() < zeta {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Laplace => {
                let a: f64 = rng.sample(Exp1);
                let b: f64 = rng.sample(Exp1);
                a - b
            }
            Self::Uniform01 => rng.sample(Open01),
        }
    }

    pub fn in_support(self, v: f64) -> bool {
        match self {
            Self::StdNormal | Self::Laplace => v.is_finite(),
            Self::Bernoulli(_) => v == 0.0 || v == 1.0,
            Self::Uniform01 => v > 0.0 && v < 1.0,
        }
    }
}

/// One realization of the latent noise vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub values: Vec<f64>,
    pub distribution: NoiseDistribution,
    pub draw_index: usize,
}

impl NoiseDraw {
    pub fn sample<R: Rng + ?Sized>(distribution: NoiseDistribution, m: usize, draw_index: usize, rng: &mut R) -> Self {
        let values = (0..m).map(|_| distribution.sample(rng)).collect();
        Self { values, distribution, draw_index }
    }

    /// Checks the draw has `m` coordinates from the expected family.
    pub fn check(&self, expected: NoiseDistribution, m: usize) -> Result<()> {
        let same_family = core::mem::discriminant(&self.distribution) == core::mem::discriminant(&expected);
        if !same_family {
            return Err(invalid(alloc::format!(
                "expected {expected:?} noise, got {:?}",
                self.distribution
            )));
        }
        if self.values.len() != m {
            return Err(invalid(alloc::format!(
                "expected {m} noise coordinates, got {}",
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|&v| !expected.in_support(v)) {
            return Err(invalid(alloc::format!("noise coordinate {i} is outside the support")));
        }
        Ok(())
    }
}

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Calibration = 0,
    Borel = 1,
    Candidate = 2,
    Data = 3,
    Bootstrap = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Mixes a base seed with a counter into a well-spread child seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_and_replay() {
        let a: u64 = stream_rng(7, Stream::Borel).random();
        let b: u64 = stream_rng(7, Stream::Candidate).random();
        let again: u64 = stream_rng(7, Stream::Borel).random();
        assert_ne!(a, b);
        assert_eq!(a, again);
    }

    #[test]
    fn samples_stay_in_support() {
        let mut rng = stream_rng(1, Stream::Data);
        for dist in [
            NoiseDistribution::StdNormal,
            NoiseDistribution::Bernoulli(0.3),
            NoiseDistribution::Laplace,
            NoiseDistribution::Uniform01,
        ] {
            let d = NoiseDraw::sample(dist, 500, 0, &mut rng);
            d.check(dist, 500).unwrap();
        }
    }

    #[test]
    fn check_rejects_mismatch() {
        let d = NoiseDraw { values: alloc::vec![0.5, 2.0], distribution: NoiseDistribution::Uniform01, draw_index: 0 };
        assert!(d.check(NoiseDistribution::Uniform01, 2).is_err());
        assert!(d.check(NoiseDistribution::StdNormal, 2).is_err());
        assert!(d.check(NoiseDistribution::Uniform01, 3).is_err());
    }
}
