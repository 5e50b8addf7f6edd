//! Bonferroni-adjusted percentile-bootstrap rank intervals.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::noise::{stream_rng, Stream};
use crate::rank::{k_pairs, RankInterval};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// Order statistic `y_(⌈n ζ⌉)`.
    Quantile(f64),
    Mean,
}

impl Statistic {
    fn eval(self, sample: &mut [f64]) -> f64 {
        match self {
            Self::Mean => sample.iter().sum::<f64>() / sample.len() as f64,
            Self::Quantile(zeta) => {
                let n = sample.len();
                let t = ((n as f64 * zeta - 1e-9).ceil() as usize).clamp(1, n);
                let (_, v, _) = sample.select_nth_unstable_by(t - 1, f64::total_cmp);
                *v
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub alpha: f64,
    pub statistic: Statistic,
}

/// Percentile bootstrap intervals for every pairwise contrast at level
/// `1 - α / K_pairs`, turned into descending rank intervals: `j` counts as below
/// `k` when the whole interval for `θ_k - θ_j` is positive.
pub fn bootstrap_rank_intervals(samples: &[Vec<f64>], cfg: &BootstrapConfig, seed: u64) -> Result<Vec<RankInterval>> {
    let k = samples.len();
    if k < 2 {
        return Err(invalid("need at least two populations"));
    }
    if cfg.resamples < 100 {
        return Err(invalid("need at least 100 bootstrap resamples"));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    if let Statistic::Quantile(z) = cfg.statistic {
        if !(z > 0.0 && z < 1.0) {
            return Err(invalid("zeta must lie in (0, 1)"));
        }
    }
    if samples.iter().any(|s| s.len() < 2) {
        return Err(invalid("every population needs at least two observations"));
    }

    let mut rng = stream_rng(seed, Stream::Bootstrap);
    let mut stats = alloc::vec![Vec::with_capacity(cfg.resamples); k];
    let mut buf = Vec::new();
    for _ in 0..cfg.resamples {
        for (pop, s) in samples.iter().enumerate() {
            buf.clear();
            buf.extend((0..s.len()).map(|_| s[rng.random_range(0..s.len())]));
            stats[pop].push(cfg.statistic.eval(&mut buf));
        }
    }

    let tail = cfg.alpha / (2.0 * k_pairs(k) as f64);
    let b = cfg.resamples;
    let lo_idx = ((tail * b as f64).ceil() as usize).clamp(1, b) - 1;
    let hi_idx = (((1.0 - tail) * b as f64).ceil() as usize).clamp(1, b) - 1;
    let mut clearly_below = alloc::vec![0usize; k];
    let mut clearly_above = alloc::vec![0usize; k];
    let mut diffs = alloc::vec![0.0; b];
    for i in 0..k {
        for j in (i + 1)..k {
            for (d, (a, c)) in diffs.iter_mut().zip(stats[i].iter().zip(&stats[j])) {
                *d = a - c;
            }
            diffs.sort_by(f64::total_cmp);
            let (lo, hi) = (diffs[lo_idx], diffs[hi_idx]);
            if lo > 0.0 {
                clearly_below[i] += 1;
                clearly_above[j] += 1;
            } else if hi < 0.0 {
                clearly_below[j] += 1;
                clearly_above[i] += 1;
            }
        }
    }
    Ok((0..k)
        .map(|pop| RankInterval { population: pop, lo: 1 + clearly_above[pop], hi: k - clearly_below[pop] })
        .collect())
}
