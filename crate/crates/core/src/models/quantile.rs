//! Ranking ζ-quantiles of K distributions through Bernoulli latent noise.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::neighborhood::NeighborhoodSets;
use crate::noise::NoiseDraw;
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineOutput, ReproModel};
use crate::rank::ScoreVector;
use crate::solvers::binomial::shortest_binomial_interval;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileInstance {
    sorted: Vec<Vec<f64>>,
    zeta: f64,
}

impl QuantileInstance {
    pub fn new(samples: Vec<Vec<f64>>, zeta: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("need at least one population"));
        }
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(invalid("zeta must lie in (0, 1)"));
        }
        let mut sorted = samples;
        for (k, s) in sorted.iter_mut().enumerate() {
            if s.len() < 2 {
                return Err(invalid(alloc::format!("population {k} has fewer than two observations")));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(invalid(alloc::format!("population {k} has a non-finite observation")));
            }
            s.sort_by(f64::total_cmp);
        }
        Ok(Self { sorted, zeta })
    }

    pub fn k(&self) -> usize {
        self.sorted.len()
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sorted.iter().map(Vec::len).collect()
    }

    /// Sorted observations of population `k`.
    pub fn sorted(&self, k: usize) -> &[f64] {
        &self.sorted[k]
    }

    /// Order statistic `y_(t)` with `y_(0) = -∞` and `y_(n+1) = +∞`.
    fn order_stat(&self, k: usize, t: usize) -> f64 {
        let s = &self.sorted[k];
        match t {
            0 => f64::NEG_INFINITY,
            t if t > s.len() => f64::INFINITY,
            t => s[t - 1],
        }
    }

    /// Sample ζ-quantiles `y_(⌈n ζ⌉)`.
    pub fn theta_hat(&self) -> Vec<f64> {
        (0..self.k())
            .map(|k| {
                let n = self.sorted[k].len();
                let t = ((n as f64 * self.zeta - 1e-9).ceil() as usize).clamp(1, n);
                self.sorted[k][t - 1]
            })
            .collect()
    }
}

/// Per-block sums of a concatenated Bernoulli draw.
pub fn quantile_t(u: &NoiseDraw, layout: &[usize]) -> Result<Vec<usize>> {
    let m: usize = layout.iter().sum();
    if u.values.len() != m {
        return Err(invalid(alloc::format!("noise has {} coordinates, layout needs {m}", u.values.len())));
    }
    if let Some(i) = u.values.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(invalid(alloc::format!("noise coordinate {i} is not 0 or 1")));
    }
    let mut out = Vec::with_capacity(layout.len());
    let mut start = 0;
    for &n in layout {
        out.push(u.values[start..start + n].iter().filter(|&&v| v == 1.0).count());
        start += n;
    }
    Ok(out)
}

/// `θ*_k = y_(clamp(T_k, 1, n_k))`.
pub fn quantile_theta_star(inst: &QuantileInstance, u: &NoiseDraw) -> Result<ScoreVector> {
    let t = quantile_t(u, &inst.sizes())?;
    ScoreVector::new(theta_star_from_counts(inst, &t))
}

pub fn theta_star_from_counts(inst: &QuantileInstance, t: &[usize]) -> Vec<f64> {
    t.iter()
        .enumerate()
        .map(|(k, &tk)| inst.order_stat(k, tk.clamp(1, inst.sorted[k].len())))
        .collect()
}

/// Per-population bounds on the Bernoulli counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialBand {
    pub bounds: Vec<(usize, usize)>,
    pub masses: Vec<f64>,
}

impl BinomialBand {
    pub fn contains(&self, t: &[usize]) -> bool {
        self.bounds.iter().zip(t).all(|(&(lo, hi), &tk)| lo <= tk && tk <= hi)
    }

    /// Exact joint probability of the band.
    pub fn joint_mass(&self) -> f64 {
        self.masses.iter().product()
    }
}

/// Shortest per-population binomial intervals at level `(1 - α)^{1/K}`.
pub fn quantile_borel(inst: &QuantileInstance, alpha: f64) -> Result<BinomialBand> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    let level = (1.0 - alpha).powf(1.0 / inst.k() as f64);
    let mut bounds = Vec::with_capacity(inst.k());
    let mut masses = Vec::with_capacity(inst.k());
    for n in inst.sizes() {
        let iv = shortest_binomial_interval(n, inst.zeta, level)?;
        bounds.push((iv.lo, iv.hi));
        masses.push(iv.mass);
    }
    Ok(BinomialBand { bounds, masses })
}

/// `i` is below `k` when `y^i_(T_i+1) < y^k_(T_k)`, above when `y^i_(T_i) > y^k_(T_k+1)`.
pub fn quantile_neighborhoods(inst: &QuantileInstance, u: &NoiseDraw) -> Result<NeighborhoodSets> {
    let t = quantile_t(u, &inst.sizes())?;
    Ok(neighborhoods_from_counts(inst, &t))
}

pub fn neighborhoods_from_counts(inst: &QuantileInstance, t: &[usize]) -> NeighborhoodSets {
    let k = inst.k();
    let lower: Vec<f64> = (0..k).map(|j| inst.order_stat(j, t[j])).collect();
    let upper: Vec<f64> = (0..k).map(|j| inst.order_stat(j, t[j] + 1)).collect();
    let mut nb = NeighborhoodSets::empty(k);
    for i in 0..k {
        for j in (i + 1)..k {
            if upper[i] < lower[j] {
                nb.record_order(i, j);
            } else if upper[j] < lower[i] {
                nb.record_order(j, i);
            }
        }
    }
    nb
}

#[derive(Debug, Clone)]
pub struct QuantileModel {
    inst: QuantileInstance,
    band: BinomialBand,
    theta_hat: Vec<f64>,
}

impl QuantileModel {
    pub fn new(inst: QuantileInstance, alpha: f64) -> Result<Self> {
        let band = quantile_borel(&inst, alpha)?;
        let theta_hat = inst.theta_hat();
        Ok(Self { inst, band, theta_hat })
    }

    pub fn band(&self) -> &BinomialBand {
        &self.band
    }

    /// Bernoulli counts of one fresh draw, block by block.
    fn counts(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let zeta = self.inst.zeta;
        self.inst
            .sorted
            .iter()
            .map(|s| (0..s.len()).filter(|_| rng.random::<f64>() < zeta).count())
            .collect()
    }
}

impl ReproModel for QuantileModel {
    fn population_count(&self) -> usize {
        self.inst.k()
    }

    fn estimate(&self) -> &[f64] {
        &self.theta_hat
    }

    fn borel_draw(&self, _index: usize, rng: &mut ChaCha8Rng) -> Result<Option<NeighborhoodSets>> {
        let t = self.counts(rng);
        Ok(self.band.contains(&t).then(|| neighborhoods_from_counts(&self.inst, &t)))
    }

    fn candidate_draw(&self, _index: usize, rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>> {
        let t = self.counts(rng);
        Ok(Some(theta_star_from_counts(&self.inst, &t)))
    }
}

pub fn quantile_pipeline(inst: &QuantileInstance, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    if inst.k() < 2 {
        return Err(invalid("ranking needs at least two populations"));
    }
    run_pipeline(&QuantileModel::new(inst.clone(), cfg.alpha)?, cfg)
}
