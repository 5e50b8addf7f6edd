//! Team strengths from game-level score differences under a linear model with
//! Laplace noise of unknown scale.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by std methods when a dependency links std
use num_traits::Float;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::neighborhood::NeighborhoodSets;
use crate::noise::{NoiseDistribution, NoiseDraw};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineOutput, ReproModel};
use crate::rank::ScoreVector;
use crate::solvers::brent::{brent_minimize, BrentOptions};

const SIGMA_FLOOR: f64 = 1e-6;
const SIGMA_STEP_TOL: f64 = 1e-8;
const MAX_SIGMA_PASSES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Identifiability {
    /// Strengths sum to zero.
    #[default]
    SumZero,
    /// Strength of the given team is fixed at zero.
    ReferenceZero(usize),
}

/// One game per row: `y = θ_home - θ_away (+ intercept) + σ u`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    pub k: usize,
    pub home: Vec<usize>,
    pub away: Vec<usize>,
    pub y_obs: Vec<f64>,
    pub intercept: bool,
    pub identifiability: Identifiability,
}

impl RegressionInstance {
    pub fn new(k: usize, home: Vec<usize>, away: Vec<usize>, y_obs: Vec<f64>) -> Result<Self> {
        let inst = Self { k, home, away, y_obs, intercept: true, identifiability: Identifiability::SumZero };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y_obs.len();
        if self.k < 2 {
            return Err(invalid("need at least two teams"));
        }
        if self.home.len() != n || self.away.len() != n {
            return Err(invalid("home, away and responses differ in length"));
        }
        if n < self.k {
            return Err(invalid("need at least as many games as teams"));
        }
        for (row, (&h, &a)) in self.home.iter().zip(&self.away).enumerate() {
            if h >= self.k || a >= self.k {
                return Err(invalid(alloc::format!("game {row} refers to an unknown team")));
            }
            if h == a {
                return Err(invalid(alloc::format!("game {row} has a team playing itself")));
            }
        }
        if self.y_obs.iter().any(|v| !v.is_finite()) {
            return Err(invalid("responses must be finite"));
        }
        if let Identifiability::ReferenceZero(r) = self.identifiability {
            if r >= self.k {
                return Err(invalid("reference team out of range"));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y_obs.len()
    }

    fn columns(&self) -> usize {
        self.k + usize::from(self.intercept)
    }

    /// `±1` team columns followed by the optional intercept column.
    pub fn design(&self) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.n(), self.columns());
        for row in 0..self.n() {
            x[(row, self.home[row])] = 1.0;
            x[(row, self.away[row])] = -1.0;
            if self.intercept {
                x[(row, self.k)] = 1.0;
            }
        }
        x
    }

    fn constraint(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.columns());
        match self.identifiability {
            Identifiability::SumZero => c.rows_mut(0, self.k).fill(1.0),
            Identifiability::ReferenceZero(r) => c[r] = 1.0,
        }
        c
    }
}

/// Maps responses to constrained least-squares coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionMatrix {
    /// Team rows `A` (K × n).
    pub a: DMatrix<f64>,
    /// All coefficient rows including the intercept.
    pub coef: DMatrix<f64>,
    pub design: DMatrix<f64>,
}

impl InversionMatrix {
    pub fn new(inst: &RegressionInstance) -> Result<Self> {
        inst.validate()?;
        let x = inst.design();
        let p = x.ncols();
        let c = inst.constraint();
        let mut kkt = DMatrix::zeros(p + 1, p + 1);
        kkt.view_mut((0, 0), (p, p)).copy_from(&(x.transpose() * &x));
        kkt.view_mut((0, p), (p, 1)).copy_from(&c);
        kkt.view_mut((p, 0), (1, p)).copy_from(&c.transpose());

        let sv = kkt.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > 1e-10 * smax) {
            return Err(Error::DegenerateDesign(alloc::string::String::from(
                "the schedule does not identify all strengths (disconnected or too few games)",
            )));
        }
        let inv = kkt
            .try_inverse()
            .ok_or_else(|| Error::DegenerateDesign(alloc::string::String::from("singular normal equations")))?;
        let coef = inv.view((0, 0), (p, p)) * x.transpose();
        let a = coef.rows(0, inst.k).into_owned();
        Ok(Self { a, coef, design: x })
    }

    /// Residual `(I - P) v` of the constrained least-squares fit.
    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.design * (&self.coef * v)
    }
}

/// Constrained least-squares strengths and intercept (zero without an intercept column).
pub fn ols_theta_hat(inst: &RegressionInstance) -> Result<(ScoreVector, f64)> {
    let inv = InversionMatrix::new(inst)?;
    let beta = &inv.coef * DVector::from_column_slice(&inst.y_obs);
    let intercept = if inst.intercept { beta[inst.k] } else { 0.0 };
    Ok((ScoreVector::new(beta.rows(0, inst.k).iter().copied().collect())?, intercept))
}

/// Robust Laplace scale of the fitted residuals: median absolute deviation / ln 2.
fn laplace_scale(resid: &DVector<f64>) -> f64 {
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
    };
    let mut r: Vec<f64> = resid.iter().copied().collect();
    let m = median(&mut r);
    let mut dev: Vec<f64> = r.iter().map(|x| (x - m).abs()).collect();
    median(&mut dev) / core::f64::consts::LN_2
}

/// Precomputed quantities shared by all repro draws of one instance.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub inversion: InversionMatrix,
    pub theta_hat: Vec<f64>,
    pub intercept: f64,
    y: DVector<f64>,
    resid_y: DVector<f64>,
    sigma_max: f64,
}

impl RegressionFit {
    pub fn new(inst: &RegressionInstance) -> Result<Self> {
        let inversion = InversionMatrix::new(inst)?;
        let y = DVector::from_column_slice(&inst.y_obs);
        let beta = &inversion.coef * &y;
        let theta_hat = beta.rows(0, inst.k).iter().copied().collect();
        let intercept = if inst.intercept { beta[inst.k] } else { 0.0 };
        let resid_y = inversion.residual(&y);
        let b = laplace_scale(&resid_y);
        let sigma_max = if b > 0.0 { 10.0 * b } else { 1.0 };
        Ok(Self { inversion, theta_hat, intercept, y, resid_y, sigma_max })
    }

    /// Upper end of the scale search bracket.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Scale and strengths reproduced by one noise draw.
    pub fn theta_star(&self, u: &[f64]) -> Result<(Vec<f64>, f64)> {
        let u = DVector::from_column_slice(u);
        let resid_u = self.inversion.residual(&u);
        if resid_u.norm() <= 1e-12 * u.norm().max(1.0) {
            return Err(Error::DegenerateDesign(alloc::string::String::from(
                "noise draw lies in the column space of the design",
            )));
        }
        let objective = |s: f64| (&self.resid_y - &resid_u * s).norm_squared();
        let opts = BrentOptions { tolerance: 1e-10, max_iterations: 500 };
        let mut sigma = self.sigma_max;
        for _ in 0..MAX_SIGMA_PASSES {
            let next = brent_minimize(objective, SIGMA_FLOOR, self.sigma_max, opts)?.x;
            let done = (next - sigma).abs() <= SIGMA_STEP_TOL;
            sigma = next;
            if done {
                break;
            }
        }
        let theta = (&self.inversion.a * (&self.y - &u * sigma)).iter().copied().collect();
        Ok((theta, sigma))
    }
}

/// Reproduced strengths `θ* = A(y - σ* u*)` with `σ*` minimizing the residual norm.
pub fn regression_theta_star(inst: &RegressionInstance, u: &NoiseDraw) -> Result<(ScoreVector, f64)> {
    u.check(NoiseDistribution::Laplace, inst.n())?;
    let fit = RegressionFit::new(inst)?;
    let (theta, sigma) = fit.theta_star(&u.values)?;
    Ok((ScoreVector::new(theta)?, sigma))
}

/// `i` is below `k` when `A_k u < A_i u` and `θ̂_k > θ̂_i`.
pub fn regression_neighborhoods(a: &DMatrix<f64>, theta_hat: &[f64], u: &[f64]) -> NeighborhoodSets {
    let au = a * DVector::from_column_slice(u);
    let k = theta_hat.len();
    let mut nb = NeighborhoodSets::empty(k);
    for i in 0..k {
        for j in (i + 1)..k {
            if au[i] < au[j] && theta_hat[i] > theta_hat[j] {
                nb.record_order(j, i);
            } else if au[j] < au[i] && theta_hat[j] > theta_hat[i] {
                nb.record_order(i, j);
            }
        }
    }
    nb
}

/// Half-width of the coordinatewise Laplace box with joint mass `1 - α` over `n` games.
pub fn regression_borel(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || n == 0 {
        return Err(invalid("need alpha in (0, 1) and n >= 1"));
    }
    let marginal = (1.0 - alpha).powf(1.0 / n as f64);
    let q = 0.5 * (1.0 + marginal);
    Ok(-(2.0 * (1.0 - q)).ln())
}

#[derive(Debug, Clone)]
pub struct RegressionModel {
    fit: RegressionFit,
    n: usize,
    box_half_width: f64,
}

impl RegressionModel {
    pub fn new(inst: &RegressionInstance, alpha: f64) -> Result<Self> {
        Ok(Self { fit: RegressionFit::new(inst)?, n: inst.n(), box_half_width: regression_borel(alpha, inst.n())? })
    }

    pub fn fit(&self) -> &RegressionFit {
        &self.fit
    }
}

impl ReproModel for RegressionModel {
    fn population_count(&self) -> usize {
        self.fit.theta_hat.len()
    }

    fn estimate(&self) -> &[f64] {
        &self.fit.theta_hat
    }

    fn borel_draw(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<Option<NeighborhoodSets>> {
        let u = NoiseDraw::sample(NoiseDistribution::Laplace, self.n, index, rng);
        if u.values.iter().any(|v| v.abs() > self.box_half_width) {
            return Ok(None);
        }
        Ok(Some(regression_neighborhoods(&self.fit.inversion.a, &self.fit.theta_hat, &u.values)))
    }

    fn candidate_draw(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>> {
        let u = NoiseDraw::sample(NoiseDistribution::Laplace, self.n, index, rng);
        Ok(Some(self.fit.theta_star(&u.values)?.0))
    }
}

pub fn regression_pipeline(inst: &RegressionInstance, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    run_pipeline(&RegressionModel::new(inst, cfg.alpha)?, cfg)
}
