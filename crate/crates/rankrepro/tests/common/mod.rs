#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Binomial, Discrete};

pub fn manifest_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

/// Ordered pairs `(i, j)` with `a` and `b` disagreeing strictly.
pub fn brute_discordance(a: &[f64], b: &[f64]) -> usize {
    let mut n = 0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            if i != j && (a[i] - a[j]) * (b[i] - b[j]) < 0.0 {
                n += 1;
            }
        }
    }
    n
}

/// Descending ranks with ties broken by index.
pub fn descending_ranks(scores: &[f64]) -> Vec<usize> {
    (0..scores.len())
        .map(|k| 1 + (0..scores.len()).filter(|&i| scores[i] > scores[k] || (scores[i] == scores[k] && i < k)).count())
        .collect()
}

/// Average-tie descending ranks.
pub fn average_ranks(scores: &[f64]) -> Vec<f64> {
    scores
        .iter()
        .map(|&s| {
            let above = scores.iter().filter(|&&t| t > s).count() as f64;
            let tied = scores.iter().filter(|&&t| t == s).count() as f64;
            above + (tied + 1.0) / 2.0
        })
        .collect()
}

/// Every `(i, j)` window; ties on width go to the larger mass, then the smaller `i`.
pub fn scan_binomial(n: u64, zeta: f64, level: f64) -> (usize, usize) {
    let d = Binomial::new(zeta, n).unwrap();
    let pmf: Vec<f64> = (0..=n).map(|r| d.pmf(r)).collect();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..=n as usize {
        let mut mass = 0.0;
        for j in i..=n as usize {
            mass += pmf[j];
            if mass < level - 1e-12 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bj, bm)) => j - i < bj - bi || (j - i == bj - bi && mass > bm + 1e-12),
            };
            if better {
                best = Some((i, j, mass));
            }
            break;
        }
    }
    let (i, j, _) = best.unwrap();
    (i, j)
}

/// Minimum-norm point of `{θ ≥ 0, Σθ = 1, Gθ ≤ 0}` by an augmented-Lagrangian
/// penalty method with semismooth Newton inner steps.
pub fn penalty_oracle(g: &DMatrix<f64>, rho: f64) -> DVector<f64> {
    let k = g.ncols();
    let mut normals: Vec<(DVector<f64>, f64, bool)> = (0..g.nrows())
        .filter(|&i| g.row(i).norm() > 0.0)
        .map(|i| (-g.row(i).transpose() / g.row(i).norm(), 0.0, false))
        .collect();
    for j in 0..k {
        let mut e = DVector::zeros(k);
        e[j] = 1.0;
        normals.push((e, 0.0, false));
    }
    normals.push((DVector::from_element(k, 1.0 / (k as f64).sqrt()), 1.0 / (k as f64).sqrt(), true));
    let mut lambda = vec![0.0; normals.len()];
    let shifted = |lam: f64, s: f64, eq: bool| if eq { lam - rho * s } else { (lam - rho * s).max(0.0) };
    let mut x = DVector::from_element(k, 1.0 / k as f64);
    for _ in 0..200 {
        let value = |x: &DVector<f64>| {
            x.norm_squared()
                + normals
                    .iter()
                    .zip(&lambda)
                    .map(|((n, b, eq), &lam)| {
                        let m = shifted(lam, n.dot(x) - b, *eq);
                        (m * m - lam * lam) / (2.0 * rho)
                    })
                    .sum::<f64>()
        };
        for _ in 0..200 {
            let mut h = DMatrix::identity(k, k) * 2.0;
            let mut grad = &x * 2.0;
            for ((n, b, eq), &lam) in normals.iter().zip(&lambda) {
                let m = shifted(lam, n.dot(&x) - b, *eq);
                if *eq || m > 0.0 {
                    h += n * n.transpose() * rho;
                    grad -= n * m;
                }
            }
            let step = h.lu().solve(&grad).unwrap();
            let f0 = value(&x);
            let mut t = 1.0;
            while value(&(&x - &step * t)) > f0 && t > 1e-12 {
                t *= 0.5;
            }
            let next = &x - &step * t;
            let moved = (&next - &x).amax();
            x = next;
            if moved < 1e-16 {
                break;
            }
        }
        let mut worst: f64 = 0.0;
        for ((n, b, eq), lam) in normals.iter().zip(lambda.iter_mut()) {
            let s = n.dot(&x) - b;
            worst = worst.max(if *eq { s.abs() } else { (-s).max(0.0) });
            *lam = shifted(*lam, s, *eq);
        }
        if worst < 1e-13 {
            break;
        }
    }
    x
}

/// Residual of `v` after projecting onto the columns of the sum-zero design plus intercept.
pub fn design_residual(k: usize, home: &[usize], away: &[usize], v: &[f64]) -> DVector<f64> {
    let z = DMatrix::from_fn(k, k - 1, |i, j| if i == j { 1.0 } else if i == k - 1 { -1.0 } else { 0.0 });
    let mut x = DMatrix::zeros(home.len(), k);
    for (r, (&h, &a)) in home.iter().zip(away).enumerate() {
        x[(r, h)] = 1.0;
        x[(r, a)] = -1.0;
    }
    let xz = &x * &z;
    let full = DMatrix::from_fn(home.len(), k, |r, c| if c < k - 1 { xz[(r, c)] } else { 1.0 });
    let pinv = full.clone().pseudo_inverse(1e-12).unwrap();
    let v = DVector::from_column_slice(v);
    &v - &full * (&pinv * &v)
}
