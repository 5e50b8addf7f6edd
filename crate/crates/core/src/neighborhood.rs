//! Populations provably below or above each population, and the rank
//! intervals they imply.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::rank::{Orientation, RankInterval};

/// `below[k]` holds populations with a smaller latent score than `k`,
/// `above[k]` those with a larger one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodSets {
    below: Vec<Vec<usize>>,
    above: Vec<Vec<usize>>,
}

impl NeighborhoodSets {
    pub fn empty(k: usize) -> Self {
        Self {
            below: alloc::vec![Vec::new(); k],
            above: alloc::vec![Vec::new(); k],
        }
    }

    /// Builds neighborhood sets from explicit lists, validating the invariants.
    pub fn from_sets(below: Vec<Vec<usize>>, above: Vec<Vec<usize>>) -> Result<Self> {
        let k = below.len();
        if above.len() != k {
            return Err(invalid("below and above must have one set per population"));
        }
        let mut out = Self::empty(k);
        for (pop, set) in below.into_iter().enumerate() {
            for i in set {
                out.check_index(pop, i)?;
                out.insert(pop, i, true);
            }
        }
        for (pop, set) in above.into_iter().enumerate() {
            for i in set {
                out.check_index(pop, i)?;
                out.insert(pop, i, false);
            }
        }
        for pop in 0..k {
            if out.below[pop].iter().any(|i| out.above[pop].binary_search(i).is_ok()) {
                return Err(invalid(alloc::format!(
                    "population {pop} has a neighbor both below and above"
                )));
            }
        }
        Ok(out)
    }

    fn check_index(&self, pop: usize, i: usize) -> Result<()> {
        if i >= self.k() || i == pop {
            return Err(invalid(alloc::format!("bad neighbor {i} for population {pop}")));
        }
        Ok(())
    }

    fn insert(&mut self, pop: usize, i: usize, below: bool) {
        let set = if below { &mut self.below[pop] } else { &mut self.above[pop] };
        if let Err(pos) = set.binary_search(&i) {
            set.insert(pos, i);
        }
    }

    /// Records `lower < upper` in both populations' sets.
    pub(crate) fn record_order(&mut self, lower: usize, upper: usize) {
        self.insert(upper, lower, true);
        self.insert(lower, upper, false);
    }

    pub fn k(&self) -> usize {
        self.below.len()
    }

    pub fn below(&self, pop: usize) -> &[usize] {
        &self.below[pop]
    }

    pub fn above(&self, pop: usize) -> &[usize] {
        &self.above[pop]
    }
}

/// Rank bounds implied by the neighborhoods: ascending `[|below|+1, K-|above|]`,
/// descending `[|above|+1, K-|below|]`.
pub fn rank_intervals(nbhd: &NeighborhoodSets, orientation: Orientation) -> Result<Vec<RankInterval>> {
    let k = nbhd.k();
    (0..k)
        .map(|pop| {
            let (nb, na) = (nbhd.below[pop].len(), nbhd.above[pop].len());
            if nb + na >= k {
                return Err(Error::InfeasibleNeighborhood { population: pop, below: nb, above: na, k });
            }
            let (before, after) = match orientation {
                Orientation::Ascending => (nb, na),
                Orientation::Descending => (na, nb),
            };
            Ok(RankInterval { population: pop, lo: before + 1, hi: k - after })
        })
        .collect()
}
