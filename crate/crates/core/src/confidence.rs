//! Union-of-boxes rank confidence sets and their refinement by a candidate set.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::candidate::CandidateSet;
use crate::error::{invalid, Result};
use crate::neighborhood::{rank_intervals, NeighborhoodSets};
use crate::rank::{Orientation, RankInterval, RankVector};

/// Rank bounds produced by one accepted draw, restricted to the index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankBox {
    pub intervals: Vec<RankInterval>,
    pub source_draw: usize,
}

impl RankBox {
    fn contains(&self, ranks: &[usize]) -> bool {
        self.intervals.iter().all(|iv| iv.contains(ranks[iv.population]))
    }
}

/// Run settings echoed alongside a confidence set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetMetadata {
    pub c: Option<usize>,
    pub p_star: Option<f64>,
    pub borel_draws: usize,
    pub candidate_draws: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankConfidenceSet {
    pub k: usize,
    pub orientation: Orientation,
    pub alpha: f64,
    pub index_set: Vec<usize>,
    pub boxes: Vec<RankBox>,
    /// Coordinatewise union of the boxes; `[1, K]` outside the index set.
    /// Empty when no draw was accepted.
    pub marginal: Vec<RankInterval>,
    pub metadata: SetMetadata,
    pub diagnostic: Option<String>,
    distinct: Vec<RankBox>,
}

impl RankConfidenceSet {
    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Number of distinct boxes in the union.
    pub fn distinct_boxes(&self) -> usize {
        self.distinct.len()
    }

    /// True when a single box contains every index-set coordinate of `ranking`.
    pub fn contains(&self, ranking: &RankVector) -> bool {
        if ranking.len() != self.k {
            return false;
        }
        let ranks = ranking.oriented(self.orientation).ranks;
        self.distinct.iter().any(|b| b.contains(&ranks))
    }
}

/// Collects one box per accepted draw. `index_set = None` means all populations.
pub fn assemble_confidence_set(
    accepted: &[(NeighborhoodSets, usize)],
    k: usize,
    index_set: Option<&[usize]>,
    alpha: f64,
    orientation: Orientation,
    metadata: SetMetadata,
) -> Result<RankConfidenceSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    let index_set: Vec<usize> = match index_set {
        Some(ix) => ix.iter().copied().collect::<BTreeSet<_>>().into_iter().collect(),
        None => (0..k).collect(),
    };
    if index_set.iter().any(|&i| i >= k) {
        return Err(invalid("index set refers to a population outside 0..K"));
    }
    let mut boxes = Vec::with_capacity(accepted.len());
    for (nbhd, draw) in accepted {
        if nbhd.k() != k {
            return Err(invalid("neighborhood sets do not match K"));
        }
        let all = rank_intervals(nbhd, orientation)?;
        boxes.push(RankBox {
            intervals: index_set.iter().map(|&i| all[i]).collect(),
            source_draw: *draw,
        });
    }

    let mut seen = BTreeSet::new();
    let distinct: Vec<RankBox> = boxes
        .iter()
        .filter(|b| seen.insert(b.intervals.clone()))
        .cloned()
        .collect();

    let (marginal, diagnostic) = if boxes.is_empty() {
        (
            Vec::new(),
            Some(String::from(
                "no draw passed the Borel region; increase the number of draws or the Borel level",
            )),
        )
    } else {
        let mut m: Vec<RankInterval> = (0..k)
            .map(|population| RankInterval { population, lo: 1, hi: k })
            .collect();
        for (slot, &pop) in index_set.iter().enumerate() {
            let lo = distinct.iter().map(|b| b.intervals[slot].lo).min().unwrap_or(1);
            let hi = distinct.iter().map(|b| b.intervals[slot].hi).max().unwrap_or(k);
            m[pop] = RankInterval { population: pop, lo, hi };
        }
        (m, None)
    };

    Ok(RankConfidenceSet {
        k,
        orientation,
        alpha,
        index_set,
        boxes,
        marginal,
        metadata,
        diagnostic,
        distinct,
    })
}

/// Candidate rankings that fall inside the confidence set.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedRankSet {
    pub k: usize,
    pub orientation: Orientation,
    /// Surviving rank vectors with the number of candidate draws that produced each.
    pub members: Vec<(RankVector, usize)>,
    /// Coordinatewise range of the survivors; empty when nothing survived.
    pub marginal: Vec<RankInterval>,
    pub confidence_boxes: usize,
    pub candidate_size: usize,
}

impl RefinedRankSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, ranking: &RankVector) -> bool {
        let r = ranking.oriented(self.orientation);
        self.members.iter().any(|(m, _)| *m == r)
    }
}

/// Keeps the candidate rankings whose index-set coordinates lie jointly in one box.
pub fn refine_with_candidate(gamma: &RankConfidenceSet, cand: &CandidateSet) -> Result<RefinedRankSet> {
    let mut members = Vec::new();
    for (rv, &count) in &cand.rank_vectors {
        if rv.len() != gamma.k {
            return Err(invalid("candidate rankings do not match K"));
        }
        if gamma.contains(rv) {
            members.push((rv.oriented(gamma.orientation), count));
        }
    }
    members.sort();
    let marginal = if members.is_empty() {
        Vec::new()
    } else {
        (0..gamma.k)
            .map(|population| {
                let ranks = members.iter().map(|(m, _)| m.ranks[population]);
                RankInterval {
                    population,
                    lo: ranks.clone().min().unwrap_or(1),
                    hi: ranks.max().unwrap_or(gamma.k),
                }
            })
            .collect()
    };
    Ok(RefinedRankSet {
        k: gamma.k,
        orientation: gamma.orientation,
        members,
        marginal,
        confidence_boxes: gamma.boxes.len(),
        candidate_size: cand.len(),
    })
}
