//! Plackett–Luce top-choice data on item triples.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::neighborhood::NeighborhoodSets;
use crate::noise::{NoiseDistribution, NoiseDraw};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineOutput, ReproModel};
use crate::rank::ScoreVector;
use crate::solvers::beta::beta_order_statistic_quantile;
use crate::solvers::qp::{solve_min_norm_qp, QpProblem, QpSolution};

/// A triple of distinct items in ascending order and the item chosen from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopChoiceTrial {
    pub subset: [usize; 3],
    pub chosen: usize,
}

impl TopChoiceTrial {
    pub fn new(subset: [usize; 3], chosen: usize) -> Result<Self> {
        if !(subset[0] < subset[1] && subset[1] < subset[2]) {
            return Err(invalid("subset items must be distinct and ascending"));
        }
        if !subset.contains(&chosen) {
            return Err(invalid("chosen item is not in the subset"));
        }
        Ok(Self { subset, chosen })
    }

    /// Position of the chosen item within the subset (0, 1 or 2).
    pub fn position(&self) -> usize {
        self.subset.iter().position(|&j| j == self.chosen).unwrap_or(0)
    }
}

/// Trials sharing one subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetGroup {
    pub subset: [usize; 3],
    /// Trial indices, ordered by choice position and then by index.
    pub trials: Vec<usize>,
    /// Number of times each subset position was chosen.
    pub counts: [usize; 3],
}

impl SubsetGroup {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlInstance {
    k: usize,
    trials: Vec<TopChoiceTrial>,
    groups: Vec<SubsetGroup>,
    ragged: bool,
}

impl PlInstance {
    pub fn new(k: usize, trials: Vec<TopChoiceTrial>) -> Result<Self> {
        if k < 2 {
            return Err(invalid("need at least two items"));
        }
        for (t, tr) in trials.iter().enumerate() {
            TopChoiceTrial::new(tr.subset, tr.chosen)?;
            if tr.subset[2] >= k {
                return Err(invalid(alloc::format!("trial {t} refers to an item outside 0..{k}")));
            }
        }
        let mut by_subset: BTreeMap<[usize; 3], Vec<usize>> = BTreeMap::new();
        for (t, tr) in trials.iter().enumerate() {
            by_subset.entry(tr.subset).or_default().push(t);
        }
        let groups: Vec<SubsetGroup> = by_subset
            .into_iter()
            .map(|(subset, mut idx)| {
                idx.sort_by_key(|&t| (trials[t].position(), t));
                let mut counts = [0; 3];
                for &t in &idx {
                    counts[trials[t].position()] += 1;
                }
                SubsetGroup { subset, trials: idx, counts }
            })
            .collect();
        let ragged = groups.windows(2).any(|w| w[0].len() != w[1].len());
        Ok(Self { k, trials, groups, ragged })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn trials(&self) -> &[TopChoiceTrial] {
        &self.trials
    }

    pub fn groups(&self) -> &[SubsetGroup] {
        &self.groups
    }

    /// True when subsets are repeated unequally often.
    pub fn is_ragged(&self) -> bool {
        self.ragged
    }

    /// Common number of repetitions per subset, when there is one.
    pub fn repetitions(&self) -> Option<usize> {
        match self.groups.first() {
            Some(g) if !self.ragged => Some(g.len()),
            _ => None,
        }
    }

    /// Wins per item.
    pub fn wins(&self) -> Vec<usize> {
        let mut w = alloc::vec![0; self.k];
        for t in &self.trials {
            w[t.chosen] += 1;
        }
        w
    }
}

/// Simulates `l` top choices for each subset and returns the generating noise.
pub fn pl_simulate_trials(theta: &[f64], subsets: &[[usize; 3]], l: usize, rng: &mut ChaCha8Rng) -> Result<(PlInstance, NoiseDraw)> {
    if theta.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("worths must be positive and finite"));
    }
    let total: f64 = theta.iter().sum();
    let theta: Vec<f64> = theta.iter().map(|v| v / total).collect();
    let mut trials = Vec::with_capacity(subsets.len() * l);
    let mut u = Vec::with_capacity(subsets.len() * l);
    for s in subsets {
        if s.iter().any(|&j| j >= theta.len()) {
            return Err(invalid("subset refers to an unknown item"));
        }
        let mass: f64 = s.iter().map(|&j| theta[j]).sum();
        for _ in 0..l {
            let ut = NoiseDistribution::Uniform01.sample(rng);
            let target = ut * mass;
            let mut cum = 0.0;
            let mut chosen = s[2];
            for &j in s {
                cum += theta[j];
                if target <= cum {
                    chosen = j;
                    break;
                }
            }
            trials.push(TopChoiceTrial::new(*s, chosen)?);
            u.push(ut);
        }
    }
    let inst = PlInstance::new(theta.len(), trials)?;
    Ok((inst, NoiseDraw { values: u, distribution: NoiseDistribution::Uniform01, draw_index: 0 }))
}

/// Two rows per trial encoding the choice sandwich as `Gθ ≤ 0`; `u` is aligned to trials.
pub fn pl_constraint_matrix(inst: &PlInstance, u: &NoiseDraw) -> Result<DMatrix<f64>> {
    u.check(NoiseDistribution::Uniform01, inst.trials.len())?;
    Ok(constraint_rows(inst, &u.values))
}

fn constraint_rows(inst: &PlInstance, u: &[f64]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(2 * inst.trials.len(), inst.k);
    for (t, (tr, &ut)) in inst.trials.iter().zip(u).enumerate() {
        let m = tr.position();
        for (pos, &j) in tr.subset.iter().enumerate() {
            g[(2 * t, j)] = if pos < m { 1.0 - ut } else { -ut };
            g[(2 * t + 1, j)] = if pos <= m { ut - 1.0 } else { ut };
        }
    }
    g
}

/// Reassigns `u` so that, within each subset, trials choosing the first item get
/// the smallest values, then the second, then the third.
pub fn align_noise(inst: &PlInstance, u: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; u.len()];
    for g in &inst.groups {
        let mut vals: Vec<f64> = g.trials.iter().map(|&t| u[t]).collect();
        vals.sort_by(f64::total_cmp);
        for (&t, v) in g.trials.iter().zip(vals) {
            out[t] = v;
        }
    }
    out
}

/// Minimum-norm worths consistent with the trial-aligned noise `u`.
pub fn pl_theta_star(inst: &PlInstance, u: &NoiseDraw, tol: f64) -> Result<QpSolution> {
    let g = pl_constraint_matrix(inst, u)?;
    solve_min_norm_qp(&QpProblem { g, tolerance: tol, max_iterations: 10_000 })
}

/// Orderings implied within one subset; index 0, 1, 2 stand for the pairs
/// (j1, j2), (j1, j3), (j2, j3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairIndicators {
    /// First item of the pair has the smaller worth.
    pub less: [bool; 3],
    /// First item of the pair has the larger worth.
    pub greater: [bool; 3],
}

pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Ratio bounds on the within-subset worth ratios from the counts and the sorted
/// noise, read as pairwise orderings. Non-positive denominators give no conclusion.
pub fn pl_pairwise_indicators(counts: [usize; 3], u_sorted: &[f64]) -> Result<PairIndicators> {
    let l = u_sorted.len();
    if counts.iter().sum::<usize>() != l {
        return Err(invalid("counts must add up to the number of trials"));
    }
    let u = |i: usize| -> f64 {
        match i {
            0 => 0.0,
            i if i > l => 1.0,
            i => u_sorted[i - 1],
        }
    };
    let (y1, y12) = (counts[0], counts[0] + counts[1]);
    let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };

    let lower = [
        ratio(u(y1) - u(1), u(y12 + 1) - u(y1)),
        ratio(u(y1) - u(1), 1.0 - u(y12)),
        ratio(u(y12) - u(y1 + 1), 1.0 - u(y12)),
    ];
    let upper = [
        ratio(u(y1 + 1), u(y12) - u(y1 + 1)),
        ratio(u(y1 + 1), u(l) - u(y12 + 1)),
        ratio(u(y12 + 1) - u(y1), u(l) - u(y12 + 1)),
    ];
    let mut out = PairIndicators::default();
    for p in 0..3 {
        out.less[p] = upper[p].is_some_and(|r| r < 1.0);
        out.greater[p] = lower[p].is_some_and(|r| r > 1.0);
    }
    Ok(out)
}

/// Neighborhood sets from every subset's indicators; pairs with conflicting
/// evidence across subsets are dropped.
pub fn pl_neighborhoods(inst: &PlInstance, u: &NoiseDraw) -> Result<NeighborhoodSets> {
    u.check(NoiseDistribution::Uniform01, inst.trials.len())?;
    neighborhoods_from_noise(inst, &u.values)
}

fn sorted_group_noise(g: &SubsetGroup, u: &[f64]) -> Vec<f64> {
    let mut vals: Vec<f64> = g.trials.iter().map(|&t| u[t]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

fn neighborhoods_from_noise(inst: &PlInstance, u: &[f64]) -> Result<NeighborhoodSets> {
    // (lower item, upper item) -> seen; conflicting pairs are removed afterwards.
    let mut evidence: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    for g in &inst.groups {
        let ind = pl_pairwise_indicators(g.counts, &sorted_group_noise(g, u))?;
        for (p, &(a, b)) in PAIRS.iter().enumerate() {
            let (ja, jb) = (g.subset[a], g.subset[b]);
            if ind.less[p] {
                evidence.insert((ja, jb), true);
            }
            if ind.greater[p] {
                evidence.insert((jb, ja), true);
            }
        }
    }
    let mut nb = NeighborhoodSets::empty(inst.k);
    for &(lo, hi) in evidence.keys() {
        if !evidence.contains_key(&(hi, lo)) {
            nb.record_order(lo, hi);
        }
    }
    Ok(nb)
}

/// How the overall level is split across the order-statistic bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandLevel {
    /// Each band at `α / #bands`.
    #[default]
    Bonferroni,
    /// Each band at `α`.
    PerBand,
}

/// Two-sided Beta bands for the order statistics of each subset.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStatBands {
    by_len: BTreeMap<usize, Vec<(f64, f64)>>,
}

impl OrderStatBands {
    pub fn new(inst: &PlInstance, alpha: f64, level: BandLevel) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        let bands = inst.trials.len().max(1) as f64;
        let a = match level {
            BandLevel::Bonferroni => alpha / bands,
            BandLevel::PerBand => alpha,
        };
        let mut by_len = BTreeMap::new();
        for g in &inst.groups {
            let l = g.len();
            if by_len.contains_key(&l) {
                continue;
            }
            let table = (1..=l)
                .map(|t| {
                    Ok((
                        beta_order_statistic_quantile(t, l, a / 2.0)?,
                        beta_order_statistic_quantile(t, l, 1.0 - a / 2.0)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            by_len.insert(l, table);
        }
        Ok(Self { by_len })
    }

    /// Band for the order statistics of `l` uniforms.
    pub fn band(&self, l: usize) -> Option<&[(f64, f64)]> {
        self.by_len.get(&l).map(Vec::as_slice)
    }

    fn contains(&self, inst: &PlInstance, u: &[f64]) -> bool {
        inst.groups.iter().all(|g| {
            let sorted = sorted_group_noise(g, u);
            let Some(band) = self.band(g.len()) else { return false };
            sorted.iter().zip(band).all(|(&v, &(lo, hi))| lo < v && v < hi)
        })
    }
}

/// Whether every within-subset order statistic of `u` lies strictly inside its band.
pub fn pl_borel_membership(inst: &PlInstance, u: &NoiseDraw, alpha: f64, level: BandLevel) -> Result<bool> {
    u.check(NoiseDistribution::Uniform01, inst.trials.len())?;
    Ok(OrderStatBands::new(inst, alpha, level)?.contains(inst, &u.values))
}

/// Connected components of the item co-occurrence graph.
pub fn components(inst: &PlInstance) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..inst.k).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for g in &inst.groups {
        for &j in &g.subset[1..] {
            let (a, b) = (find(&mut parent, g.subset[0]), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for j in 0..inst.k {
        let r = find(&mut parent, j);
        comps.entry(r).or_default().push(j);
    }
    comps.into_values().collect()
}

/// Top-choice log-likelihood of worths `theta`.
pub fn pl_log_likelihood(inst: &PlInstance, theta: &[f64]) -> f64 {
    inst.trials
        .iter()
        .map(|t| theta[t.chosen].ln() - t.subset.iter().map(|&j| theta[j]).sum::<f64>().ln())
        .sum()
}

/// Maximum-likelihood worths by minorize–maximize iteration, normalized to sum to one.
pub fn pl_mle_theta_hat(inst: &PlInstance, tol: f64) -> Result<ScoreVector> {
    let comps = components(inst);
    if comps.len() > 1 {
        return Err(Error::DisconnectedGraph { components: comps });
    }
    let wins = inst.wins();
    let k = inst.k;
    let mut theta = alloc::vec![1.0 / k as f64; k];
    for _ in 0..100_000 {
        let mut denom = alloc::vec![0.0; k];
        for g in &inst.groups {
            let mass: f64 = g.subset.iter().map(|&j| theta[j]).sum();
            for &j in &g.subset {
                denom[j] += g.len() as f64 / mass;
            }
        }
        let mut next: Vec<f64> = wins.iter().zip(&denom).map(|(&w, &d)| w as f64 / d).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = next.iter().copied().fold(0.0, f64::max);
        theta = next;
        if change <= tol * scale {
            break;
        }
    }
    ScoreVector::new(theta)
}

#[derive(Debug, Clone)]
pub struct PlModel {
    inst: PlInstance,
    theta_hat: Vec<f64>,
    bands: OrderStatBands,
    qp_tolerance: f64,
}

impl PlModel {
    pub fn new(inst: PlInstance, alpha: f64, level: BandLevel) -> Result<Self> {
        let theta_hat = pl_mle_theta_hat(&inst, 1e-10)?.into_inner();
        let bands = OrderStatBands::new(&inst, alpha, level)?;
        Ok(Self { inst, theta_hat, bands, qp_tolerance: 1e-8 })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.inst.trials.len()).map(|_| NoiseDistribution::Uniform01.sample(rng)).collect()
    }
}

impl ReproModel for PlModel {
    fn population_count(&self) -> usize {
        self.inst.k
    }

    fn estimate(&self) -> &[f64] {
        &self.theta_hat
    }

    fn borel_draw(&self, _index: usize, rng: &mut ChaCha8Rng) -> Result<Option<NeighborhoodSets>> {
        let u = self.draw(rng);
        if !self.bands.contains(&self.inst, &u) {
            return Ok(None);
        }
        neighborhoods_from_noise(&self.inst, &u).map(Some)
    }

    fn candidate_draw(&self, _index: usize, rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>> {
        let u = align_noise(&self.inst, &self.draw(rng));
        let g = constraint_rows(&self.inst, &u);
        match solve_min_norm_qp(&QpProblem { g, tolerance: self.qp_tolerance, max_iterations: 10_000 }) {
            Ok(sol) => Ok(Some(sol.theta)),
            Err(Error::Infeasible { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

pub fn pl_pipeline(inst: &PlInstance, cfg: &PipelineConfig, level: BandLevel) -> Result<PipelineOutput> {
    run_pipeline(&PlModel::new(inst.clone(), cfg.alpha, level)?, cfg)
}

/// Every ascending triple of `0..k`.
pub fn all_triples(k: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            for c in (b + 1)..k {
                out.push([a, b, c]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{stream_rng, Stream};
    use alloc::vec;

    #[test]
    fn constraint_rows_by_hand() {
        let inst = PlInstance::new(3, vec![TopChoiceTrial::new([0, 1, 2], 0).unwrap()]).unwrap();
        let u = NoiseDraw { values: vec![0.5], distribution: NoiseDistribution::Uniform01, draw_index: 0 };
        let g = pl_constraint_matrix(&inst, &u).unwrap();
        assert_eq!(g.row(0).iter().copied().collect::<Vec<_>>(), vec![-0.5, -0.5, -0.5]);
        assert_eq!(g.row(1).iter().copied().collect::<Vec<_>>(), vec![-0.5, 0.5, 0.5]);
    }

    #[test]
    fn truth_is_feasible() {
        let mut rng = stream_rng(3, Stream::Data);
        let theta = [0.4, 0.3, 0.2, 0.1];
        let (inst, u) = pl_simulate_trials(&theta, &all_triples(4), 5, &mut rng).unwrap();
        let g = pl_constraint_matrix(&inst, &u).unwrap();
        let gt = &g * nalgebra::DVector::from_column_slice(&theta);
        assert!(gt.iter().all(|&v| v <= 1e-12));
        // Realigned noise keeps the truth feasible.
        let aligned = NoiseDraw { values: align_noise(&inst, &u.values), ..u };
        let g = pl_constraint_matrix(&inst, &aligned).unwrap();
        let gt = &g * nalgebra::DVector::from_column_slice(&theta);
        assert!(gt.iter().all(|&v| v <= 1e-12));
    }

    #[test]
    fn no_trials_gives_uniform_worths() {
        let inst = PlInstance::new(4, vec![]).unwrap();
        let u = NoiseDraw { values: vec![], distribution: NoiseDistribution::Uniform01, draw_index: 0 };
        let s = pl_theta_star(&inst, &u, 1e-9).unwrap();
        assert!(s.theta.iter().all(|v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn dominant_first_item() {
        let l = 20;
        let u: Vec<f64> = (1..=l).map(|t| 0.3 + 0.02 * t as f64).collect();
        let ind = pl_pairwise_indicators([l, 0, 0], &u).unwrap();
        assert!(ind.greater[0] && ind.greater[1]);
        assert!(!ind.less[0] && !ind.less[1]);
    }

    #[test]
    fn balanced_counts_are_uninformative() {
        let l = 30;
        let u: Vec<f64> = (1..=l).map(|t| t as f64 / (l + 1) as f64).collect();
        let ind = pl_pairwise_indicators([10, 10, 10], &u).unwrap();
        assert_eq!(ind, PairIndicators::default());
    }

    #[test]
    fn band_rejects_extreme_maximum() {
        let trials: Vec<TopChoiceTrial> = (0..10).map(|_| TopChoiceTrial::new([0, 1, 2], 1).unwrap()).collect();
        let inst = PlInstance::new(3, trials).unwrap();
        let mut vals: Vec<f64> = (1..=10).map(|t| t as f64 / 11.0).collect();
        let central = NoiseDraw { values: vals.clone(), distribution: NoiseDistribution::Uniform01, draw_index: 0 };
        assert!(pl_borel_membership(&inst, &central, 0.05, BandLevel::Bonferroni).unwrap());
        vals[9] = 1.0 - 1e-9;
        let extreme = NoiseDraw { values: vals, distribution: NoiseDistribution::Uniform01, draw_index: 0 };
        assert!(!pl_borel_membership(&inst, &extreme, 0.05, BandLevel::Bonferroni).unwrap());
    }

    #[test]
    fn disconnected_items_are_reported() {
        let trials = vec![TopChoiceTrial::new([0, 1, 2], 0).unwrap(), TopChoiceTrial::new([3, 4, 5], 4).unwrap()];
        let inst = PlInstance::new(6, trials).unwrap();
        match pl_mle_theta_hat(&inst, 1e-9) {
            Err(Error::DisconnectedGraph { components }) => assert_eq!(components, vec![vec![0, 1, 2], vec![3, 4, 5]]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_trials_are_rejected() {
        assert!(TopChoiceTrial::new([0, 2, 1], 0).is_err());
        assert!(TopChoiceTrial::new([0, 1, 2], 5).is_err());
        let ragged = vec![
            TopChoiceTrial::new([0, 1, 2], 0).unwrap(),
            TopChoiceTrial::new([0, 1, 3], 0).unwrap(),
            TopChoiceTrial::new([0, 1, 3], 3).unwrap(),
        ];
        assert!(PlInstance::new(4, ragged).unwrap().is_ragged());
    }
}
