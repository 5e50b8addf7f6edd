//! Shortest integer intervals for a binomial count.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;

use crate::error::{invalid, Result};

/// Covered masses closer than this are treated as equal when breaking width ties.
const MASS_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialInterval {
    pub lo: usize,
    pub hi: usize,
    pub mass: f64,
}

/// Probability mass function of Binomial(n, zeta) evaluated in log space.
pub fn binomial_pmf(n: usize, zeta: f64) -> Vec<f64> {
    let nf = n as f64;
    let ln_n_fact = libm::lgamma(nf + 1.0);
    let (lz, lq) = (zeta.ln(), (1.0 - zeta).ln());
    (0..=n)
        .map(|r| {
            let rf = r as f64;
            let ln_choose = ln_n_fact - libm::lgamma(rf + 1.0) - libm::lgamma(nf - rf + 1.0);
            (ln_choose + rf * lz + (nf - rf) * lq).exp()
        })
        .collect()
}

/// Narrowest `[lo, hi]` whose Binomial(n, zeta) mass reaches `level`.
/// Equal widths prefer the larger mass, then the smaller `lo`.
pub fn shortest_binomial_interval(n: usize, zeta: f64, level: f64) -> Result<BinomialInterval> {
    if n < 1 {
        return Err(invalid("binomial interval needs n >= 1"));
    }
    if !(zeta > 0.0 && zeta < 1.0) || !(level > 0.0 && level < 1.0) {
        return Err(invalid("zeta and level must lie in (0, 1)"));
    }
    let pmf = binomial_pmf(n, zeta);
    let mut prefix = Vec::with_capacity(n + 2);
    prefix.push(0.0);
    for p in &pmf {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + p);
    }
    for width in 0..=n {
        let mut best: Option<BinomialInterval> = None;
        for lo in 0..=(n - width) {
            let hi = lo + width;
            let mass = prefix[hi + 1] - prefix[lo];
            if mass < level {
                continue;
            }
            if best.is_none_or(|b| mass > b.mass + MASS_TIE) {
                best = Some(BinomialInterval { lo, hi, mass });
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
    }
    Ok(BinomialInterval { lo: 0, hi: n, mass: 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_trials_need_the_full_range() {
        let b = shortest_binomial_interval(2, 0.5, 0.9).unwrap();
        assert_eq!((b.lo, b.hi), (0, 2));
    }

    #[test]
    fn tiny_level_picks_the_mode() {
        let b = shortest_binomial_interval(20, 0.3, 1e-6).unwrap();
        assert_eq!((b.lo, b.hi), (6, 6));
        // Two equal modes at 0 and 1: the smaller index wins.
        let b = shortest_binomial_interval(1, 0.5, 1e-6).unwrap();
        assert_eq!((b.lo, b.hi), (0, 0));
    }

    #[test]
    fn pmf_sums_to_one() {
        let s: f64 = binomial_pmf(500, 0.37).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(shortest_binomial_interval(0, 0.5, 0.9).is_err());
        assert!(shortest_binomial_interval(5, 1.0, 0.9).is_err());
        assert!(shortest_binomial_interval(5, 0.5, 1.0).is_err());
    }
}
