//! Minimum-norm point of `{θ ≥ 0, Gθ ≤ 0, Σθ = 1}` by a dual active-set method.
//!
//! Constraints are handled internally as `nᵀθ ≥ b`: row `i < m` of `G` becomes
//! `-g_iᵀθ ≥ 0`, index `m + k` is `θ_k ≥ 0`, and index `m + K` is the equality.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;

use crate::error::{invalid, Error, Result};

/// Normalized violation below which a constraint counts as satisfied.
const ACTIVATION_TOL: f64 = 1e-12;
/// Relative norm below which a projected direction counts as zero.
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// One row per linear constraint `g_iᵀθ ≤ 0`; `K` columns.
    pub g: DMatrix<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl QpProblem {
    pub fn new(g: DMatrix<f64>) -> Self {
        Self { g, tolerance: 1e-9, max_iterations: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub theta: Vec<f64>,
    /// `‖θ‖²`.
    pub objective: f64,
    /// Active constraint indices with their multipliers (for `½‖θ‖²`).
    pub active: Vec<(usize, f64)>,
    pub residuals: KktResiduals,
    pub iterations: usize,
}

struct Constraints<'a> {
    g: &'a DMatrix<f64>,
    k: usize,
}

impl Constraints<'_> {
    fn m(&self) -> usize {
        self.g.nrows()
    }

    fn equality(&self) -> usize {
        self.m() + self.k
    }

    fn count(&self) -> usize {
        self.m() + self.k + 1
    }

    fn normal(&self, i: usize) -> DVector<f64> {
        if i < self.m() {
            -self.g.row(i).transpose()
        } else if i < self.equality() {
            let mut e = DVector::zeros(self.k);
            e[i - self.m()] = 1.0;
            e
        } else {
            DVector::from_element(self.k, 1.0)
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        if i == self.equality() {
            1.0
        } else {
            0.0
        }
    }

    /// Slacks `nᵀx - b` of every constraint.
    fn slacks(&self, x: &DVector<f64>) -> Vec<f64> {
        let gx = self.g * x;
        let mut s: Vec<f64> = gx.iter().map(|v| -v).collect();
        s.extend(x.iter().copied());
        s.push(x.sum() - 1.0);
        s
    }

    fn normal_norm(&self, i: usize) -> f64 {
        if i < self.m() {
            self.g.row(i).norm()
        } else if i < self.equality() {
            1.0
        } else {
            (self.k as f64).sqrt()
        }
    }
}

pub fn solve_min_norm_qp(problem: &QpProblem) -> Result<QpSolution> {
    let k = problem.g.ncols();
    if k < 2 {
        return Err(invalid("the QP needs at least two coordinates"));
    }
    if problem.g.iter().any(|v| !v.is_finite()) {
        return Err(invalid("constraint matrix has non-finite entries"));
    }
    let cons = Constraints { g: &problem.g, k };
    let mut x = DVector::<f64>::zeros(k);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut iterations = 0;

    loop {
        let slacks = cons.slacks(&x);
        let p = if !active.contains(&cons.equality()) {
            cons.equality()
        } else {
            let mut worst = (-ACTIVATION_TOL, None);
            for i in 0..cons.equality() {
                let v = slacks[i] / cons.normal_norm(i).max(f64::MIN_POSITIVE);
                if v < worst.0 && !active.contains(&i) {
                    worst = (v, Some(i));
                }
            }
            match worst.1 {
                Some(i) => i,
                None => break,
            }
        };

        let np = cons.normal(p);
        let mut up = 0.0;
        loop {
            iterations += 1;
            if iterations > problem.max_iterations {
                let residuals = kkt_residuals(&cons, &x, &active, &u);
                return Err(Error::QpNonConvergence { residuals });
            }
            let (z, r) = project(&cons, &active, &np);
            let sp = np.dot(&x) - cons.rhs(p);

            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, (&c, &rj)) in active.iter().zip(&r).enumerate() {
                if c != cons.equality() && rj > 0.0 {
                    let ratio = u[j] / rj;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(j);
                    }
                }
            }
            let zn = z.dot(&np);
            let t2 = if z.norm() > DEPENDENCE_TOL * np.norm() && zn > 0.0 {
                -sp / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(Error::Infeasible { constraint: p });
            }

            for (uj, rj) in u.iter_mut().zip(&r) {
                *uj -= t * rj;
            }
            up += t;
            if t2.is_finite() {
                x += &z * t;
            }
            if t2 <= t1 {
                active.push(p);
                u.push(up);
                break;
            }
            if let Some(j) = drop {
                active.remove(j);
                u.remove(j);
            }
        }
    }

    let residuals = kkt_residuals(&cons, &x, &active, &u);
    if residuals.max() > problem.tolerance {
        return Err(Error::QpNonConvergence { residuals });
    }
    let theta: Vec<f64> = x.iter().copied().collect();
    Ok(QpSolution {
        objective: x.norm_squared(),
        theta,
        active: active.into_iter().zip(u).collect(),
        residuals,
        iterations,
    })
}

/// Component of `np` orthogonal to the active normals, and its coefficients in them.
fn project(cons: &Constraints<'_>, active: &[usize], np: &DVector<f64>) -> (DVector<f64>, Vec<f64>) {
    if active.is_empty() {
        return (np.clone(), Vec::new());
    }
    let cols: Vec<DVector<f64>> = active.iter().map(|&i| cons.normal(i)).collect();
    let n = DMatrix::from_columns(&cols);
    let qr = n.qr();
    let q = qr.q();
    let rmat = qr.r();
    let qt_np = q.transpose() * np;
    let z = np - &q * &qt_np;
    let r = rmat
        .solve_upper_triangular(&qt_np)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|| alloc::vec![0.0; active.len()]);
    (z, r)
}

fn kkt_residuals(cons: &Constraints<'_>, x: &DVector<f64>, active: &[usize], u: &[f64]) -> KktResiduals {
    let mut grad = x.clone();
    for (&i, &ui) in active.iter().zip(u) {
        grad -= cons.normal(i) * ui;
    }
    let slacks = cons.slacks(x);
    let mut primal = slacks[cons.equality()].abs();
    for (i, &s) in slacks.iter().enumerate().take(cons.count() - 1) {
        primal = primal.max((-s / cons.normal_norm(i).max(f64::MIN_POSITIVE)).max(0.0));
    }
    let mut dual: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    for (&i, &ui) in active.iter().zip(u) {
        if i != cons.equality() {
            dual = dual.max(-ui);
        }
        complementarity = complementarity.max((ui * slacks[i]).abs());
    }
    KktResiduals { stationarity: grad.amax(), primal, dual, complementarity }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_center_without_rows() {
        let s = solve_min_norm_qp(&QpProblem::new(DMatrix::zeros(0, 4))).unwrap();
        for v in &s.theta {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn inactive_row() {
        let g = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
        let s = solve_min_norm_qp(&QpProblem::new(g)).unwrap();
        for v in &s.theta {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn binding_row() {
                let g = DMatrix::from_row_slice(1, 3, &[-1.0, 2.0, 0.0]);
        let s = solve_min_norm_qp(&QpProblem::new(g)).unwrap();
        let t = &s.theta;
        assert!(t[0] - 2.0 * t[1] > -1e-12);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.residuals.max() < 1e-9);
        // On θ1 = 2θ2 = 2a with θ3 = 1 - 3a, 5a² + (1 - 3a)² is minimal at a = 3/14.
        for (v, e) in t.iter().zip([6.0 / 14.0, 3.0 / 14.0, 5.0 / 14.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn forcing_rows_give_a_vertex() {
        // θ1 ≤ 0 and θ2 ≤ 0 leave only (0, 0, 1).
        let g = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let s = solve_min_norm_qp(&QpProblem::new(g)).unwrap();
        assert!((s.theta[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system_is_reported() {
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(solve_min_norm_qp(&QpProblem::new(g)), Err(Error::Infeasible { .. })));
    }
}
