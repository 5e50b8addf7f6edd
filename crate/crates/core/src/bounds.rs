//! Diagnostic bounds on discordance tails and on the expected candidate-set size.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::rank::k_pairs;

/// Ingredients of a tail bound on `P{Disc(theta_hat, theta0) >= c}`.
/// Slices hold one entry per ordered pair `(i, j)`, `i != j`.
#[derive(Debug, Clone, Copy)]
pub enum TailBound<'a> {
    /// Per-pair reversal probabilities.
    Markov { reversal_probs: &'a [f64] },
    /// Gaps `|Δ_ij|` and second moments `m_ij` of the estimation error difference.
    Chebyshev { gaps: &'a [f64], moments: &'a [f64] },
    /// Gaps with per-pair sub-Gaussian scales `τ_ij`.
    SubGaussian { gaps: &'a [f64], scales: &'a [f64] },
    /// Smallest gap and a common scale bound over all pairs.
    SubGaussianUniform { k: usize, gap_min: f64, scale: f64 },
}

/// Upper bound on the probability that the discordance reaches `c`, clamped to `[0, 1]`.
pub fn discordance_tail_bound(bound: TailBound<'_>, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(invalid("the budget c must be positive"));
    }
    let check_gaps = |gaps: &[f64]| -> Result<()> {
        if gaps.iter().any(|&g| !(g > 0.0)) {
            return Err(invalid("gaps must be positive"));
        }
        Ok(())
    };
    let sum = match bound {
        TailBound::Markov { reversal_probs } => reversal_probs.iter().sum::<f64>(),
        TailBound::Chebyshev { gaps, moments } => {
            if gaps.len() != moments.len() {
                return Err(invalid("gaps and moments differ in length"));
            }
            check_gaps(gaps)?;
            gaps.iter().zip(moments).map(|(d, m)| m * m / (d * d)).sum()
        }
        TailBound::SubGaussian { gaps, scales } => {
            if gaps.len() != scales.len() {
                return Err(invalid("gaps and scales differ in length"));
            }
            check_gaps(gaps)?;
            gaps.iter()
                .zip(scales)
                .map(|(d, t)| 2.0 * (-(d * d) / (2.0 * t * t)).exp())
                .sum()
        }
        TailBound::SubGaussianUniform { k, gap_min, scale } => {
            check_gaps(&[gap_min])?;
            let pairs = (k * k.saturating_sub(1)) as f64;
            2.0 * pairs * (-(gap_min * gap_min) / (2.0 * scale * scale)).exp()
        }
    };
    Ok((sum / c).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeBoundParams {
    pub delta_min: f64,
    pub tau_bar: f64,
    pub v_bar: f64,
    pub c: usize,
    pub draws: usize,
    pub k: usize,
    pub w0: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateSizeBound {
    /// Exponential rate of the tail term.
    pub rate: f64,
    /// Normalized-discordance cutoff.
    pub cutoff: f64,
    /// Bound on the expected candidate-set size; `None` when `K!` overflows `f64`.
    pub size_bound: Option<f64>,
}

/// Cutoff on normalized discordance and the resulting bound on the expected number
/// of distinct candidate rankings.
pub fn candidate_size_bound(p: SizeBoundParams) -> Result<CandidateSizeBound> {
    if !(p.delta_min > 0.0 && p.tau_bar > 0.0 && p.v_bar > 0.0) {
        return Err(invalid("delta_min, tau_bar and v_bar must be positive"));
    }
    if p.k < 2 || p.w0 < 1 || p.w0 > p.k || p.draws < 1 {
        return Err(invalid("need K >= 2, 1 <= w0 <= K and at least one draw"));
    }
    let kp = k_pairs(p.k) as f64;
    let rate = p.delta_min * p.delta_min * kp / (p.w0 as f64 * p.tau_bar * p.tau_bar);
    let c = p.c as f64;
    let h = c / 2.0;
    let log_h_pow_h = if h == 0.0 { 0.0 } else { h * h.ln() };
    let inner = 1.0 + c + c * c * (-(p.delta_min * p.delta_min) / (8.0 * p.v_bar * p.v_bar)).exp();
    let cutoff = (h + (h + 1.0).ln() + log_h_pow_h + inner.ln() + (p.draws as f64).ln()) / rate;

    let size_bound = if p.k <= 170 {
        let norm = 2.0 * kp;
        let total: f64 = mahonian(p.k)
            .iter()
            .enumerate()
            .map(|(inv, &count)| {
                let g = inv as f64 / norm;
                if g <= cutoff {
                    count
                } else {
                    count * (-rate * (g - cutoff)).exp()
                }
            })
            .sum();
        Some(total)
    } else {
        None
    };
    Ok(CandidateSizeBound { rate, cutoff, size_bound })
}

/// Number of permutations of `k` items with each inversion count `0..=k(k-1)/2`.
pub fn mahonian(k: usize) -> Vec<f64> {
    let mut row = alloc::vec![1.0];
    for n in 2..=k {
        let len = row.len() + n - 1;
        let mut prefix = alloc::vec![0.0; row.len() + 1];
        for (i, v) in row.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        row = (0..len)
            .map(|j| {
                let hi = (j + 1).min(row.len());
                let lo = j.saturating_sub(n - 1).min(hi);
                prefix[hi] - prefix[lo]
            })
            .collect();
    }
    row
}
