use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rankrepro_core::models::regression::{
    ols_theta_hat, regression_borel, regression_neighborhoods, regression_pipeline, regression_theta_star,
    RegressionFit, RegressionInstance,
};
use rankrepro_core::{BudgetConfig, Error, NoiseDistribution, NoiseDraw, PipelineConfig};

fn laplace(rng: &mut ChaCha8Rng) -> f64 {
    NoiseDistribution::Laplace.sample(rng)
}

/// A connected random schedule: a cycle through every team plus random extra games.
fn schedule(k: usize, extra: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let (mut home, mut away) = (Vec::new(), Vec::new());
    for t in 0..k {
        home.push(t);
        away.push((t + 1) % k);
    }
    for _ in 0..extra {
        let h = rng.random_range(0..k);
        let a = (h + rng.random_range(1..k)) % k;
        home.push(h);
        away.push(a);
    }
    (home, away)
}

/// Design in a sum-zero basis: strengths `θ = Zφ` with `Z` spanning `{Σθ = 0}`.
fn reduced_design(k: usize, home: &[usize], away: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let z = DMatrix::from_fn(k, k - 1, |i, j| if i == j { 1.0 } else if i == k - 1 { -1.0 } else { 0.0 });
    let mut x = DMatrix::zeros(home.len(), k);
    for (r, (&h, &a)) in home.iter().zip(away).enumerate() {
        x[(r, h)] = 1.0;
        x[(r, a)] = -1.0;
    }
    let xz = &x * &z;
    let full = DMatrix::from_fn(home.len(), k, |r, c| if c < k - 1 { xz[(r, c)] } else { 1.0 });
    (full, z)
}

#[derive(Debug, Clone)]
struct Case {
    k: usize,
    extra: usize,
    seed: u64,
}

fn case() -> impl Strategy<Value = Case> {
    (3usize..=9, 0usize..40, any::<u64>()).prop_map(|(k, extra, seed)| Case { k, extra, seed })
}

proptest! {
    #![proptest_config(Config { cases: 200, rng_seed: RngSeed::Fixed(41), ..Config::default() })]

    #[test]
    fn sigma_star_matches_projection_formula(case in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
        let (home, away) = schedule(case.k, case.extra + 2, &mut rng);
        let n = home.len();
        let y: Vec<f64> = (0..n).map(|_| 0.4 + 2.0 * laplace(&mut rng)).collect();
        let u: Vec<f64> = (0..n).map(|_| laplace(&mut rng)).collect();
        let inst = RegressionInstance::new(case.k, home.clone(), away.clone(), y.clone()).unwrap();

        let (xr, _) = reduced_design(case.k, &home, &away);
        let pinv = xr.clone().pseudo_inverse(1e-12).unwrap();
        let resid = |v: &[f64]| {
            let v = DVector::from_column_slice(v);
            &v - &xr * (&pinv * &v)
        };
        let (ry, ru) = (resid(&y), resid(&u));
        prop_assume!(ru.norm() > 1e-8);
        let fit = RegressionFit::new(&inst).unwrap();
        let closed = (ry.dot(&ru) / ru.norm_squared()).clamp(1e-6, fit.sigma_max());
        let draw = NoiseDraw { values: u, distribution: NoiseDistribution::Laplace, draw_index: 0 };
        let (_, sigma) = regression_theta_star(&inst, &draw).unwrap();
        prop_assert!((sigma - closed).abs() <= 1e-6, "σ* {} vs closed form {}", sigma, closed);
    }

    #[test]
    fn ols_matches_pseudo_inverse(case in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
        let (home, away) = schedule(case.k, case.extra, &mut rng);
        let y: Vec<f64> = (0..home.len()).map(|_| 3.0 * laplace(&mut rng)).collect();
        let inst = RegressionInstance::new(case.k, home.clone(), away.clone(), y.clone()).unwrap();
        let (theta, intercept) = ols_theta_hat(&inst).unwrap();
        let (xr, z) = reduced_design(case.k, &home, &away);
        let beta = xr.pseudo_inverse(1e-12).unwrap() * DVector::from_column_slice(&y);
        let phi = beta.rows(0, case.k - 1).into_owned();
        let oracle = &z * phi;
        for t in 0..case.k {
            prop_assert!((theta[t] - oracle[t]).abs() <= 1e-8 * (1.0 + oracle[t].abs()));
        }
        prop_assert!((intercept - beta[case.k - 1]).abs() <= 1e-8 * (1.0 + intercept.abs()));
        prop_assert!(theta.iter().sum::<f64>().abs() <= 1e-9);
    }

    #[test]
    fn neighborhood_membership_matches_sigma_grid(case in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
        let (home, away) = schedule(case.k, case.extra, &mut rng);
        let y: Vec<f64> = (0..home.len()).map(|_| laplace(&mut rng)).collect();
        let u: Vec<f64> = (0..home.len()).map(|_| laplace(&mut rng)).collect();
        let inst = RegressionInstance::new(case.k, home, away, y).unwrap();
        let fit = RegressionFit::new(&inst).unwrap();
        let a = &fit.inversion.a;
        let au = a * DVector::from_column_slice(&u);
        let nb = regression_neighborhoods(a, &fit.theta_hat, &u);
        // θ⁰ = θ̂ - σ A u; `i` is below `k` when θ⁰_k > θ⁰_i for every σ > 0.
        let grid: Vec<f64> = (-60..=60).map(|e| 10f64.powf(e as f64 / 10.0)).collect();
        for k in 0..case.k {
            for i in 0..case.k {
                if i == k {
                    continue;
                }
                let always = grid
                    .iter()
                    .all(|s| (fit.theta_hat[k] - s * au[k]) - (fit.theta_hat[i] - s * au[i]) > 0.0);
                prop_assert_eq!(nb.below(k).contains(&i), always);
            }
        }
    }
}

#[test]
fn noiseless_data_is_recovered_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (home, away) = schedule(6, 30, &mut rng);
    let theta0 = [1.0, -0.5, 0.25, 0.75, -1.2, -0.3];
    let y: Vec<f64> = home.iter().zip(&away).map(|(&h, &a)| theta0[h] - theta0[a] + 0.3).collect();
    let inst = RegressionInstance::new(6, home.clone(), away.clone(), y.clone()).unwrap();
    let (theta, intercept) = ols_theta_hat(&inst).unwrap();
    for t in 0..6 {
        assert!((theta[t] - theta0[t]).abs() < 1e-8);
    }
    assert!((intercept - 0.3).abs() < 1e-8);

    let u: Vec<f64> = (0..y.len()).map(|_| laplace(&mut rng)).collect();
    let noisy: Vec<f64> = y.iter().zip(&u).map(|(y, u)| y + 1.7 * u).collect();
    let inst = RegressionInstance::new(6, home, away, noisy).unwrap();
    let draw = NoiseDraw { values: u, distribution: NoiseDistribution::Laplace, draw_index: 0 };
    let (theta, sigma) = regression_theta_star(&inst, &draw).unwrap();
    assert!((sigma - 1.7).abs() < 1e-6);
    for t in 0..6 {
        assert!((theta[t] - theta0[t]).abs() < 1e-6);
    }
}

#[test]
fn noise_in_the_column_space_is_reported() {
    let inst = RegressionInstance::new(3, vec![0, 1, 2, 0], vec![1, 2, 0, 2], vec![1.0, 0.5, -1.0, 2.0]).unwrap();
    let fit = RegressionFit::new(&inst).unwrap();
    let u: Vec<f64> = (&fit.inversion.design * DVector::from_vec(vec![0.5, -0.5, 0.0, 1.0])).iter().copied().collect();
    assert!(matches!(fit.theta_star(&u), Err(Error::DegenerateDesign(_))));
}

#[test]
fn laplace_box_has_the_joint_level() {
    assert!((regression_borel(0.05, 1).unwrap() - 0.05f64.ln().abs()).abs() < 1e-12);
    assert!(regression_borel(1e-12, 10).unwrap() > regression_borel(1e-3, 10).unwrap());
    let c = regression_borel(0.05, 380).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let reps = 40_000;
    let inside = (0..reps).filter(|_| (0..380).all(|_| laplace(&mut rng).abs() <= c)).count();
    let freq = inside as f64 / reps as f64;
    assert!((0.94..=0.96).contains(&freq), "box frequency {freq}");
}

fn round_robin(k: usize) -> (Vec<usize>, Vec<usize>) {
    let (mut home, mut away) = (Vec::new(), Vec::new());
    for h in 0..k {
        for a in 0..k {
            if h != a {
                home.push(h);
                away.push(a);
            }
        }
    }
    (home, away)
}

#[test]
fn dominant_team_is_ranked_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (home, away) = round_robin(6);
    let y: Vec<f64> = home
        .iter()
        .zip(&away)
        .map(|(&h, &a)| {
            let base = 0.3 * laplace(&mut rng);
            if h == 0 { 6.0 + base.abs() } else if a == 0 { -6.0 - base.abs() } else { base }
        })
        .collect();
    let inst = RegressionInstance::new(6, home, away, y).unwrap();
    let cfg = PipelineConfig { borel_draws: 300, candidate_draws: 300, budget: BudgetConfig::PStar(0.2), seed: 1, ..PipelineConfig::default() };
    let out = regression_pipeline(&inst, &cfg).unwrap();
    assert_eq!((out.marginals()[0].lo, out.marginals()[0].hi), (1, 1));
}

#[test]
fn intercept_shift_and_relabeling_are_harmless() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let k = 5;
    let strength = [0.8, -0.2, 0.1, -0.9, 0.2];
    let (home, away) = round_robin(k);
    let y: Vec<f64> = home.iter().zip(&away).map(|(&h, &a)| strength[h] - strength[a] + 0.5 * laplace(&mut rng)).collect();
    let cfg = PipelineConfig { borel_draws: 200, candidate_draws: 200, budget: BudgetConfig::PStar(0.3), seed: 5, ..PipelineConfig::default() };
    let base = regression_pipeline(&RegressionInstance::new(k, home.clone(), away.clone(), y.clone()).unwrap(), &cfg).unwrap();

    let shifted: Vec<f64> = y.iter().map(|v| v + 2.5).collect();
    let moved = regression_pipeline(&RegressionInstance::new(k, home.clone(), away.clone(), shifted).unwrap(), &cfg).unwrap();
    assert_eq!(base.marginals(), moved.marginals());

    let relabel = [3, 0, 4, 1, 2];
    let ph: Vec<usize> = home.iter().map(|&h| relabel[h]).collect();
    let pa: Vec<usize> = away.iter().map(|&a| relabel[a]).collect();
    let permuted = regression_pipeline(&RegressionInstance::new(k, ph, pa, y).unwrap(), &cfg).unwrap();
    for t in 0..k {
        let (a, b) = (base.marginals()[t], permuted.marginals()[relabel[t]]);
        assert_eq!((a.lo, a.hi), (b.lo, b.hi));
    }
}
