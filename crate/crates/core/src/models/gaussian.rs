//! Independent Gaussian populations with known standard deviations.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::neighborhood::NeighborhoodSets;
use crate::noise::{stream_rng, NoiseDistribution, NoiseDraw, Stream};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineOutput, ReproModel};
use crate::rank::ScoreVector;

/// Minimum number of calibration draws.
pub const MIN_CALIBRATION_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianInstance {
    pub y_obs: Vec<f64>,
    pub sigma: Vec<f64>,
    pub n: Vec<usize>,
}

impl GaussianInstance {
    pub fn new(y_obs: Vec<f64>, sigma: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if y_obs.len() < 2 || sigma.len() != y_obs.len() || n.len() != y_obs.len() {
            return Err(invalid("need K >= 2 means, standard deviations and sample sizes"));
        }
        if y_obs.iter().any(|v| !v.is_finite()) {
            return Err(invalid("means must be finite"));
        }
        if sigma.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(invalid("standard deviations must be positive"));
        }
        if n.contains(&0) {
            return Err(invalid("sample sizes must be at least 1"));
        }
        Ok(Self { y_obs, sigma, n })
    }

    pub fn k(&self) -> usize {
        self.y_obs.len()
    }

    /// Standard errors `σ_k / √n_k`.
    pub fn std_errors(&self) -> Vec<f64> {
        self.sigma.iter().zip(&self.n).map(|(s, &n)| s / (n as f64).sqrt()).collect()
    }

    /// Standard deviation of `y_i - y_k`.
    pub fn scale(&self, i: usize, k: usize) -> f64 {
        let se = |j: usize| self.sigma[j] * self.sigma[j] / self.n[j] as f64;
        (se(i) + se(k)).sqrt()
    }
}

/// Common studentized multiplier for all pairwise noise differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseThresholds {
    pub q_star: f64,
}

/// `θ*_k = y_k - (σ_k/√n_k) u_k`.
pub fn gaussian_theta_star(inst: &GaussianInstance, u: &NoiseDraw) -> Result<ScoreVector> {
    u.check(NoiseDistribution::StdNormal, inst.k())?;
    ScoreVector::new(theta_star(&inst.y_obs, &inst.std_errors(), &u.values))
}

fn theta_star(y: &[f64], se: &[f64], u: &[f64]) -> Vec<f64> {
    y.iter().zip(se).zip(u).map(|((y, s), u)| y - s * u).collect()
}

/// Largest studentized pairwise noise difference.
fn max_pair_statistic(inst: &GaussianInstance, se: &[f64], u: &[f64]) -> f64 {
    let k = inst.k();
    let mut m: f64 = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            m = m.max((se[i] * u[i] - se[j] * u[j]).abs() / inst.scale(i, j));
        }
    }
    m
}

/// Monte Carlo `(1 - α)` quantile of the largest studentized pairwise difference.
pub fn gaussian_calibrate_borel(inst: &GaussianInstance, alpha: f64, draws: usize, seed: u64) -> Result<PairwiseThresholds> {
    if draws < MIN_CALIBRATION_DRAWS {
        return Err(invalid(alloc::format!("calibration needs at least {MIN_CALIBRATION_DRAWS} draws")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    let se = inst.std_errors();
    let mut rng = stream_rng(seed, Stream::Calibration);
    let mut stats: Vec<f64> = (0..draws)
        .map(|b| {
            let u = NoiseDraw::sample(NoiseDistribution::StdNormal, inst.k(), b, &mut rng);
            max_pair_statistic(inst, &se, &u.values)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let target = (1.0 - alpha) * draws as f64;
    let idx = ((target - 1e-9).ceil() as usize).clamp(1, draws);
    Ok(PairwiseThresholds { q_star: stats[idx - 1] })
}

/// `i` is below `k` when `y_i - y_k < -q* scale(i, k)`, above when `> q* scale(i, k)`.
pub fn gaussian_neighborhoods(inst: &GaussianInstance, thr: PairwiseThresholds) -> NeighborhoodSets {
    let k = inst.k();
    let mut nb = NeighborhoodSets::empty(k);
    for i in 0..k {
        for j in (i + 1)..k {
            let d = inst.y_obs[i] - inst.y_obs[j];
            let t = thr.q_star * inst.scale(i, j);
            if d < -t {
                nb.record_order(i, j);
            } else if d > t {
                nb.record_order(j, i);
            }
        }
    }
    nb
}

/// A calibrated Gaussian instance ready for the generic pipeline.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    inst: GaussianInstance,
    se: Vec<f64>,
    thresholds: PairwiseThresholds,
    neighborhoods: NeighborhoodSets,
}

impl GaussianModel {
    pub fn new(inst: GaussianInstance, thresholds: PairwiseThresholds) -> Self {
        let se = inst.std_errors();
        let neighborhoods = gaussian_neighborhoods(&inst, thresholds);
        Self { inst, se, thresholds, neighborhoods }
    }

    pub fn thresholds(&self) -> PairwiseThresholds {
        self.thresholds
    }
}

impl ReproModel for GaussianModel {
    fn population_count(&self) -> usize {
        self.inst.k()
    }

    fn estimate(&self) -> &[f64] {
        &self.inst.y_obs
    }

    fn borel_draw(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<Option<NeighborhoodSets>> {
        let u = NoiseDraw::sample(NoiseDistribution::StdNormal, self.inst.k(), index, rng);
        let inside = max_pair_statistic(&self.inst, &self.se, &u.values) <= self.thresholds.q_star;
        Ok(inside.then(|| self.neighborhoods.clone()))
    }

    fn candidate_draw(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>> {
        let u = NoiseDraw::sample(NoiseDistribution::StdNormal, self.inst.k(), index, rng);
        Ok(Some(theta_star(&self.inst.y_obs, &self.se, &u.values)))
    }

    fn pair_scales(&self) -> Option<Vec<f64>> {
        let k = self.inst.k();
        let mut out = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                out.push(self.inst.scale(i, j));
            }
        }
        Some(out)
    }
}

/// Calibrates with `cfg.borel_draws` draws, then runs the generic pipeline.
pub fn gaussian_pipeline(inst: &GaussianInstance, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let thr = gaussian_calibrate_borel(inst, cfg.alpha, cfg.borel_draws.max(MIN_CALIBRATION_DRAWS), cfg.seed)?;
    run_pipeline(&GaussianModel::new(inst.clone(), thr), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn theta_star_examples() {
        let inst = GaussianInstance::new(vec![0.0, 1.0], vec![1.0, 1.0], vec![4, 4]).unwrap();
        let u = NoiseDraw { values: vec![2.0, -2.0], distribution: NoiseDistribution::StdNormal, draw_index: 0 };
        assert_eq!(&*gaussian_theta_star(&inst, &u).unwrap(), &[-1.0, 2.0]);
        let zero = NoiseDraw { values: vec![0.0, 0.0], distribution: NoiseDistribution::StdNormal, draw_index: 0 };
        assert_eq!(&*gaussian_theta_star(&inst, &zero).unwrap(), &[0.0, 1.0]);
        let wrong = NoiseDraw { values: vec![0.5, 0.5], distribution: NoiseDistribution::Uniform01, draw_index: 0 };
        assert!(gaussian_theta_star(&inst, &wrong).is_err());
    }

    #[test]
    fn two_far_apart_populations() {
        let inst = GaussianInstance::new(vec![0.0, 10.0], vec![1.0, 1.0], vec![2, 2]).unwrap();
        let nb = gaussian_neighborhoods(&inst, PairwiseThresholds { q_star: 1.96 });
        assert_eq!(nb.below(1), &[0]);
        assert_eq!(nb.above(0), &[1]);
    }

    #[test]
    fn equal_means_give_no_information() {
        let inst = GaussianInstance::new(vec![3.0; 4], vec![1.0; 4], vec![5; 4]).unwrap();
        let nb = gaussian_neighborhoods(&inst, PairwiseThresholds { q_star: 0.5 });
        assert!((0..4).all(|k| nb.below(k).is_empty() && nb.above(k).is_empty()));
    }

    #[test]
    fn calibration_needs_enough_draws() {
        let inst = GaussianInstance::new(vec![0.0, 1.0], vec![1.0, 1.0], vec![1, 1]).unwrap();
        assert!(gaussian_calibrate_borel(&inst, 0.05, 50, 1).is_err());
    }
}
