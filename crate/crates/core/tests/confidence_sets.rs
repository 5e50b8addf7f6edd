use std::collections::BTreeSet;

use itertools::Itertools;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use rankrepro_core::confidence::SetMetadata;
use rankrepro_core::models::gaussian::{gaussian_pipeline, GaussianInstance};
use rankrepro_core::{
    assemble_confidence_set, build_candidate_set, refine_with_candidate, BudgetConfig, DiscordanceBudget,
    NeighborhoodSets, Orientation, PipelineConfig, RankVector,
};

/// Orders a random subset of pairs according to `truth`.
fn neighborhoods(truth: &[usize], keep: &[bool]) -> (NeighborhoodSets, Vec<(usize, usize)>) {
    let k = truth.len();
    let mut below = vec![Vec::new(); k];
    let mut above = vec![Vec::new(); k];
    let mut known = Vec::new();
    for ((i, j), &kept) in (0..k).tuple_combinations().zip(keep) {
        if kept {
            let (lo, hi) = if truth[i] < truth[j] { (i, j) } else { (j, i) };
            below[hi].push(lo);
            above[lo].push(hi);
            known.push((lo, hi));
        }
    }
    (NeighborhoodSets::from_sets(below, above).unwrap(), known)
}

fn descending_ranks(scores: &[f64]) -> Vec<usize> {
    (0..scores.len())
        .map(|k| 1 + (0..scores.len()).filter(|&i| scores[i] > scores[k] || (scores[i] == scores[k] && i < k)).count())
        .collect()
}

/// Direct check of the box condition: the descending rank of `k` lies in
/// `[|above_k| + 1, K - |below_k|]` for every index-set member.
fn in_box(nbhd: &NeighborhoodSets, ranks: &[usize], index_set: &[usize]) -> bool {
    let k = ranks.len();
    index_set
        .iter()
        .all(|&p| nbhd.above(p).len() < ranks[p] && ranks[p] <= k - nbhd.below(p).len())
}

#[derive(Debug, Clone)]
struct Case {
    k: usize,
    boxes: Vec<(Vec<usize>, Vec<bool>)>,
    hat: Vec<f64>,
    draws: Vec<Vec<f64>>,
    c: usize,
    index_mask: Vec<bool>,
}

fn case() -> impl Strategy<Value = Case> {
    (2usize..=5).prop_flat_map(|k| {
        let pairs = k * (k - 1) / 2;
        let perm = Just((0..k).collect::<Vec<_>>()).prop_shuffle();
        let boxes = prop::collection::vec((perm, prop::collection::vec(any::<bool>(), pairs)), 0..6);
        let coord = prop_oneof![(0i32..4).prop_map(f64::from), -2.0..2.0f64];
        (
            boxes,
            prop::collection::vec(-2.0..2.0f64, k),
            prop::collection::vec(prop::collection::vec(coord, k), 1..60),
            0..=k * (k - 1) + 1,
            prop::collection::vec(any::<bool>(), k),
        )
            .prop_map(move |(boxes, hat, draws, c, index_mask)| Case { k, boxes, hat, draws, c, index_mask })
    })
}

fn brute_discordance(a: &[f64], b: &[f64]) -> usize {
    (0..a.len())
        .cartesian_product(0..a.len())
        .filter(|&(i, j)| i != j && (a[i] - a[j]) * (b[i] - b[j]) < 0.0)
        .count()
}

proptest! {
    #![proptest_config(Config { cases: 200, rng_seed: RngSeed::Fixed(17), ..Config::default() })]

    #[test]
    fn refinement_equals_exhaustive_intersection(case in case()) {
        let k = case.k;
        let index_set: Vec<usize> = (0..k).filter(|&i| case.index_mask[i]).collect();
        let accepted: Vec<(NeighborhoodSets, usize)> = case
            .boxes
            .iter()
            .enumerate()
            .map(|(b, (truth, keep))| (neighborhoods(truth, keep).0, b))
            .collect();
        let gamma = assemble_confidence_set(
            &accepted, k, Some(&index_set), 0.05, Orientation::Descending, SetMetadata::default(),
        ).unwrap();
        let budget = DiscordanceBudget::manual(case.c, k);
        let cand = build_candidate_set(&case.hat, &case.draws, budget, Orientation::Descending).unwrap();
        let refined = refine_with_candidate(&gamma, &cand).unwrap();

        let candidate_oracle: BTreeSet<Vec<usize>> = case
            .draws
            .iter()
            .filter(|d| brute_discordance(&case.hat, d) < case.c)
            .map(|d| descending_ranks(d))
            .collect();
        let mut oracle = BTreeSet::new();
        for perm in (1..=k).permutations(k) {
            let in_gamma = accepted.iter().any(|(nb, _)| in_box(nb, &perm, &index_set));
            let rv = RankVector { ranks: perm.clone(), orientation: Orientation::Descending };
            prop_assert_eq!(gamma.contains(&rv), in_gamma);
            if in_gamma && candidate_oracle.contains(&perm) {
                oracle.insert(perm);
            }
        }
        let got: BTreeSet<Vec<usize>> = refined.members.iter().map(|(rv, _)| rv.ranks.clone()).collect();
        prop_assert_eq!(&got, &oracle);

        for (rv, count) in &refined.members {
            prop_assert!(cand.rank_vectors.get(rv) == Some(count));
            prop_assert!(gamma.contains(rv));
            for (p, &r) in rv.ranks.iter().enumerate() {
                prop_assert!(refined.marginal[p].contains(r));
                prop_assert!(gamma.marginal[p].contains(r));
            }
        }
        prop_assert_eq!(refined.candidate_size, cand.len());
        prop_assert_eq!(refined.confidence_boxes, accepted.len());
    }

    #[test]
    fn marginals_are_box_unions(case in case()) {
        let k = case.k;
        let accepted: Vec<(NeighborhoodSets, usize)> = case
            .boxes
            .iter()
            .enumerate()
            .map(|(b, (truth, keep))| (neighborhoods(truth, keep).0, b))
            .collect();
        let gamma = assemble_confidence_set(&accepted, k, None, 0.1, Orientation::Descending, SetMetadata::default()).unwrap();
        if accepted.is_empty() {
            prop_assert!(gamma.is_empty() && gamma.marginal.is_empty() && gamma.diagnostic.is_some());
        } else {
            for p in 0..k {
                let lo = accepted.iter().map(|(nb, _)| nb.above(p).len() + 1).min().unwrap();
                let hi = accepted.iter().map(|(nb, _)| k - nb.below(p).len()).max().unwrap();
                prop_assert_eq!((gamma.marginal[p].lo, gamma.marginal[p].hi), (lo, hi));
            }
            for perm in (1..=k).permutations(k) {
                let rv = RankVector { ranks: perm.clone(), orientation: Orientation::Descending };
                if gamma.contains(&rv) {
                    prop_assert!(perm.iter().enumerate().all(|(p, &r)| gamma.marginal[p].contains(r)));
                }
            }
        }
    }
}

#[test]
fn every_ranking_as_candidate_leaves_the_box_lattice() {
    let k = 4;
    let (nb, _) = neighborhoods(&[0, 1, 2, 3], &[true, false, false, false, false, true]);
    let gamma = assemble_confidence_set(&[(nb.clone(), 0)], k, None, 0.05, Orientation::Descending, SetMetadata::default()).unwrap();
    let draws: Vec<Vec<f64>> = (0..k)
        .permutations(k)
        .map(|p| p.into_iter().map(|v| v as f64).collect())
        .collect();
    let cand = build_candidate_set(&[0.0; 4], &draws, DiscordanceBudget::manual(13, k), Orientation::Descending).unwrap();
    assert_eq!(cand.len(), 24);
    let refined = refine_with_candidate(&gamma, &cand).unwrap();
    let expected = (1..=k)
        .permutations(k)
        .filter(|p| in_box(&nb, p, &[0, 1, 2, 3]))
        .count();
    assert_eq!(refined.len(), expected);
    let none = build_candidate_set(&[0.0; 4], &draws, DiscordanceBudget::manual(0, k), Orientation::Descending).unwrap();
    assert!(refine_with_candidate(&gamma, &none).unwrap().is_empty());
}

fn gaussian_instance(y: Vec<f64>) -> GaussianInstance {
    let k = y.len();
    GaussianInstance::new(y, vec![1.0; k], vec![1; k]).unwrap()
}

#[test]
fn seeded_pipeline_matches_brute_force_intersection() {
    let inst = gaussian_instance(vec![0.0, 0.8, 1.6, 4.0]);
    let cfg = PipelineConfig { borel_draws: 400, candidate_draws: 400, budget: BudgetConfig::PStar(0.5), seed: 11, ..PipelineConfig::default() };
    let out = gaussian_pipeline(&inst, &cfg).unwrap();
    let cand = out.candidate.as_ref().unwrap();
    let refined = out.refined.as_ref().unwrap();
    let mut expected = BTreeSet::new();
    for perm in (1..=4).permutations(4) {
        let rv = RankVector { ranks: perm.clone(), orientation: Orientation::Descending };
        let in_gamma = out.gamma.boxes.iter().any(|b| b.intervals.iter().all(|iv| iv.contains(perm[iv.population])));
        assert_eq!(out.gamma.contains(&rv), in_gamma);
        if in_gamma && cand.rank_vectors.contains_key(&rv) {
            expected.insert(perm);
        }
    }
    let got: BTreeSet<Vec<usize>> = refined.members.iter().map(|(rv, _)| rv.ranks.clone()).collect();
    assert_eq!(got, expected);
    assert!(!got.is_empty());
}

#[test]
fn separated_means_pin_every_rank() {
    let inst = gaussian_instance(vec![0.0, 10.0, 20.0, 30.0, 40.0]);
    let out = gaussian_pipeline(&inst, &PipelineConfig { borel_draws: 300, candidate_draws: 300, ..PipelineConfig::default() }).unwrap();
    let m: Vec<(usize, usize)> = out.marginals().iter().map(|iv| (iv.lo, iv.hi)).collect();
    assert_eq!(m, vec![(5, 5), (4, 4), (3, 3), (2, 2), (1, 1)]);
}

#[test]
fn nearly_equal_means_say_nothing() {
    let inst = gaussian_instance(vec![0.0, 0.01, 0.02, 0.03, 0.04]);
    let cfg = PipelineConfig { borel_draws: 300, candidate_draws: 2000, budget: BudgetConfig::NoCandidate, ..PipelineConfig::default() };
    let out = gaussian_pipeline(&inst, &cfg).unwrap();
    assert!(out.marginals().iter().all(|iv| (iv.lo, iv.hi) == (1, 5)));
}

#[test]
fn shifting_all_means_changes_nothing() {
    let cfg = PipelineConfig { borel_draws: 200, candidate_draws: 200, seed: 3, ..PipelineConfig::default() };
    let a = gaussian_pipeline(&gaussian_instance(vec![0.0, 1.0, 2.5, 2.7]), &cfg).unwrap();
    let b = gaussian_pipeline(&gaussian_instance(vec![100.0, 101.0, 102.5, 102.7]), &cfg).unwrap();
    assert_eq!(a.marginals(), b.marginals());
    assert_eq!(a.joint_size(), b.joint_size());
}
