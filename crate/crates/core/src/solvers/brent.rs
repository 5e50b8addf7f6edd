//! Derivative-free scalar minimization on a bracket.

use crate::error::{invalid, Error, Result};

const GOLDEN: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrentOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BrentOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub f: f64,
    pub iterations: usize,
}

/// Golden-section search with parabolic acceleration on `[a, b]`.
///
/// Returns a local minimum when `f` is not unimodal on the bracket.
pub fn brent_minimize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: BrentOptions) -> Result<ScalarMinimum> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(invalid("bracket must satisfy a < b with finite ends"));
    }
    if !(opts.tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let (mut a, mut b) = (a, b);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for iter in 0..opts.max_iterations {
        let xm = 0.5 * (a + b);
        let tol1 = 4.0 * f64::EPSILON * x.abs() + opts.tolerance / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(ScalarMinimum { x, f: fx, iterations: iter });
        }

        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }

        let u = if d.abs() >= tol1 { x + d } else if d > 0.0 { x + tol1 } else { x - tol1 };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::Convergence { iterations: opts.max_iterations, best_x: x, best_f: fx })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_vertex() {
        let m = brent_minimize(|x| (x - 2.0) * (x - 2.0), 0.0, 5.0, BrentOptions::default()).unwrap();
        assert!((m.x - 2.0).abs() < 1e-8);
    }

    #[test]
    fn asymmetric_brackets() {
        for (a, b) in [(1.9, 100.0), (-50.0, 2.1), (-1e3, 1e3)] {
            let m = brent_minimize(|x| 3.0 * (x - 2.0) * (x - 2.0) + 1.0, a, b, BrentOptions::default()).unwrap();
            assert!((m.x - 2.0).abs() < 1e-8, "{a} {b} -> {}", m.x);
        }
    }

    #[test]
    fn kink_matches_grid() {
        let f = |x: f64| (x - 1.0).abs() + 0.1 * x * x;
        let m = brent_minimize(f, -5.0, 5.0, BrentOptions::default()).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        let mut x = -5.0;
        while x <= 5.0 {
            if f(x) < best.0 {
                best = (f(x), x);
            }
            x += 1e-5;
        }
        assert!((m.x - best.1).abs() < 2e-5);
        assert!(m.f <= best.0 + 1e-9);
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let opts = BrentOptions { tolerance: 1e-12, max_iterations: 3 };
        match brent_minimize(|x| (x - 2.0).powi(2), 0.0, 5.0, opts) {
            Err(Error::Convergence { iterations: 3, best_x, .. }) => assert!(best_x > 0.0 && best_x < 5.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(brent_minimize(|x| x, 1.0, 1.0, BrentOptions::default()).is_err());
    }
}
