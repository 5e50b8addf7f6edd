//! Discordance budgets and the candidate set of low-discordance repro rankings.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::rank::{discordance_unchecked, k_pairs, rank_finite, Orientation, RankVector};

/// Guards `floor(p* K_pairs)` against products like `0.1 * 30 = 2.9999999999999996`.
const FLOOR_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetMethod {
    /// Empirical quantile of simulated discordances.
    Percentile { q: f64 },
    /// Signal-to-noise rule with inflation factor `lambda`.
    Snr { lambda: f64 },
    /// `c` derived from a user-supplied `p*`.
    PStar,
    /// `c` supplied directly.
    Manual,
}

/// Candidate draws are kept when their discordance is strictly below `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscordanceBudget {
    pub c: usize,
    pub p_star: f64,
    pub k_pairs: usize,
    pub method: BudgetMethod,
}

impl DiscordanceBudget {
    pub fn from_p_star(p_star: f64, k: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_star) {
            return Err(invalid("p* must lie in [0, 1]"));
        }
        Ok(Self::from_p_star_unchecked(p_star, k, BudgetMethod::PStar))
    }

    fn from_p_star_unchecked(p_star: f64, k: usize, method: BudgetMethod) -> Self {
        let kp = k_pairs(k);
        let c = (p_star * kp as f64 + FLOOR_GUARD).floor() as usize;
        Self { c, p_star, k_pairs: kp, method }
    }

    /// A direct budget. `c` may exceed `K(K-1)`, which disables the filter.
    pub fn manual(c: usize, k: usize) -> Self {
        let kp = k_pairs(k);
        let p_star = if kp == 0 { 1.0 } else { (c as f64 / kp as f64).min(1.0) };
        Self { c, p_star, k_pairs: kp, method: BudgetMethod::Manual }
    }
}

/// Smallest `c` with at least a fraction `q` of `disc_values` strictly below it.
pub fn choose_c_percentile(disc_values: &[usize], q: f64, k: usize) -> Result<DiscordanceBudget> {
    if disc_values.is_empty() {
        return Err(invalid("no discordance values"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid("target quantile must lie in (0, 1)"));
    }
    let mut sorted = disc_values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let target = q * n as f64;
    let mut m = (target.ceil() as usize).clamp(1, n);
    while m > 1 && (m - 1) as f64 >= target {
        m -= 1;
    }
    while m < n && (m as f64) < target {
        m += 1;
    }
    let c = sorted[m - 1] + 1;
    let kp = k_pairs(k);
    Ok(DiscordanceBudget {
        c,
        p_star: (c as f64 / kp.max(1) as f64).min(1.0),
        k_pairs: kp,
        method: BudgetMethod::Percentile { q },
    })
}

/// Budget from the weakest pairwise signal: `p* = lambda exp(-SNR_min^2 / 2)`.
///
/// `delta_hat` and `tau_hat` list the same pairs in the same order.
pub fn choose_c_snr(delta_hat: &[f64], tau_hat: &[f64], lambda: f64, k: usize) -> Result<DiscordanceBudget> {
    if delta_hat.len() != tau_hat.len() || delta_hat.is_empty() {
        return Err(invalid("gap and scale lists must be nonempty and of equal length"));
    }
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    if let Some(i) = tau_hat.iter().position(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(invalid(alloc::format!("pairwise scale {i} is not positive")));
    }
    let snr_min = delta_hat
        .iter()
        .zip(tau_hat)
        .map(|(d, t)| d.abs() / t)
        .fold(f64::INFINITY, f64::min);
    let p_bar = (-0.5 * snr_min * snr_min).exp();
    let p_star = (lambda * p_bar).clamp(0.0, 1.0);
    Ok(DiscordanceBudget::from_p_star_unchecked(p_star, k, BudgetMethod::Snr { lambda }))
}

/// Distinct rankings of the draws whose discordance against `theta_hat` is below `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub rank_vectors: BTreeMap<RankVector, usize>,
    pub accepted_draws: usize,
    pub total_draws: usize,
    pub budget: DiscordanceBudget,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.rank_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank_vectors.is_empty()
    }
}

pub fn build_candidate_set<D: AsRef<[f64]>>(
    theta_hat: &[f64],
    draws: &[D],
    budget: DiscordanceBudget,
    orientation: Orientation,
) -> Result<CandidateSet> {
    let mut rank_vectors = BTreeMap::new();
    let mut accepted_draws = 0;
    for d in draws {
        let d = d.as_ref();
        if d.len() != theta_hat.len() {
            return Err(invalid("candidate draw has the wrong length"));
        }
        if discordance_unchecked(theta_hat, d) < budget.c {
            accepted_draws += 1;
            *rank_vectors.entry(rank_finite(d, orientation)).or_insert(0) += 1;
        }
    }
    Ok(CandidateSet { rank_vectors, accepted_draws, total_draws: draws.len(), budget })
}

/// Discordance of every draw against `theta_hat`.
pub fn discordances<D: AsRef<[f64]>>(theta_hat: &[f64], draws: &[D]) -> Vec<usize> {
    draws.iter().map(|d| discordance_unchecked(theta_hat, d.as_ref())).collect()
}
