//! Score vectors, rank vectors and pairwise discordance.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Deref;

use crate::error::{invalid, Result};

/// Which end of the score scale receives rank 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Orientation {
    /// Rank 1 is the smallest score.
    Ascending,
    /// Rank 1 is the largest score.
    #[default]
    Descending,
}

/// Latent scores, one per population.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("a score vector needs at least two populations"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(alloc::format!("score {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ScoreVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A full ranking of K populations, ranks in `1..=K`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankVector {
    pub ranks: Vec<usize>,
    pub orientation: Orientation,
}

impl RankVector {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// The same ranking expressed in `orientation`.
    pub fn oriented(&self, orientation: Orientation) -> RankVector {
        if orientation == self.orientation {
            return self.clone();
        }
        let k = self.ranks.len();
        RankVector {
            ranks: self.ranks.iter().map(|&r| k + 1 - r).collect(),
            orientation,
        }
    }
}

/// Integer bounds `[lo, hi]` on the rank of one population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankInterval {
    pub population: usize,
    pub lo: usize,
    pub hi: usize,
}

impl RankInterval {
    pub fn contains(&self, rank: usize) -> bool {
        self.lo <= rank && rank <= self.hi
    }

    pub fn width(&self) -> usize {
        self.hi - self.lo + 1
    }
}

/// Number of unordered pairs, `K(K-1)/2`.
pub fn k_pairs(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Ranks `theta`, breaking ties by population index (lower index, smaller rank).
pub fn rank_of(theta: &[f64], orientation: Orientation) -> Result<RankVector> {
    if let Some(i) = theta.iter().position(|v| !v.is_finite()) {
        return Err(invalid(alloc::format!("score {i} is not finite")));
    }
    Ok(rank_finite(theta, orientation))
}

pub(crate) fn rank_finite(theta: &[f64], orientation: Orientation) -> RankVector {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| {
        let by_value = theta[a].partial_cmp(&theta[b]).unwrap_or(Ordering::Equal);
        let by_value = match orientation {
            Orientation::Ascending => by_value,
            Orientation::Descending => by_value.reverse(),
        };
        by_value.then(a.cmp(&b))
    });
    let mut ranks = alloc::vec![0; theta.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    RankVector { ranks, orientation }
}

/// Ordered-pair reversal count between two score vectors.
pub fn discordance(theta_hat: &[f64], theta_star: &[f64]) -> Result<usize> {
    if theta_hat.len() != theta_star.len() {
        return Err(invalid("discordance needs vectors of equal length"));
    }
    Ok(discordance_unchecked(theta_hat, theta_star))
}

pub(crate) fn discordance_unchecked(a: &[f64], b: &[f64]) -> usize {
    let k = a.len();
    let mut reversed = 0;
    for i in 0..k {
        for j in (i + 1)..k {
            if (a[i] - a[j]) * (b[i] - b[j]) < 0.0 {
                reversed += 1;
            }
        }
    }
    2 * reversed
}

/// Fraction of reversed unordered pairs between `theta_hat` and the ranking,
/// normalized by `2 K_pairs` so the result lies in `[0, 1/2]`.
pub fn normalized_discordance(theta_hat: &[f64], ranking: &RankVector) -> Result<f64> {
    let k = theta_hat.len();
    if ranking.len() != k {
        return Err(invalid("normalized discordance needs vectors of equal length"));
    }
    if k < 2 {
        return Err(invalid("normalized discordance needs at least two populations"));
    }
    let r: Vec<f64> = ranking
        .oriented(Orientation::Ascending)
        .ranks
        .iter()
        .map(|&r| r as f64)
        .collect();
    let reversed = discordance_unchecked(theta_hat, &r) / 2;
    Ok(reversed as f64 / (2 * k_pairs(k)) as f64)
}
