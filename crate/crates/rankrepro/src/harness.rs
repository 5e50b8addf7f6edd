//! Coverage experiments and the p* sweep.
//!
//! Each replication regenerates data from a known truth on its own seed, runs the
//! model pipeline and records whether the true ranks are covered. Replications run
//! in parallel and are aggregated in index order, so a config and seed always give
//! the same report.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use rankrepro_core::candidate::{build_candidate_set, DiscordanceBudget};
use rankrepro_core::models::gaussian::{gaussian_pipeline, gaussian_theta_star, GaussianInstance};
use rankrepro_core::models::pl::{all_triples, pl_pipeline, pl_simulate_trials, BandLevel};
use rankrepro_core::models::quantile::{quantile_pipeline, QuantileInstance};
use rankrepro_core::models::regression::{regression_pipeline, RegressionInstance};
use rankrepro_core::noise::{child_seed, stream_rng, Stream};
use rankrepro_core::{rank_of, NoiseDistribution, NoiseDraw, Orientation, PipelineConfig, PipelineOutput, RankVector};

use crate::document::{BudgetRecord, OrientationTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    /// `y_k = θ_k + σ_k / √n_k · z`.
    Gaussian { theta: Vec<f64>, sigma: Vec<f64>, n: Vec<usize> },
    /// Lognormal populations ranked by their `ζ`-quantile.
    Quantile { mu: Vec<f64>, sigma: Vec<f64>, n: usize, zeta: f64 },
    /// Laplace score differences over a schedule where every pair meets `legs`
    /// times, home advantage alternating.
    Regression { strengths: Vec<f64>, scale: f64, intercept: f64, legs: usize },
    /// Top choices from every triple of items, `l` times each.
    Pl { theta: Vec<f64>, l: usize },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Quantile { .. } => "quantile",
            Self::Regression { .. } => "regression",
            Self::Pl { .. } => "pl",
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Self::Gaussian { theta, .. } => theta.len(),
            Self::Quantile { mu, .. } => mu.len(),
            Self::Regression { strengths, .. } => strengths.len(),
            Self::Pl { theta, .. } => theta.len(),
        }
    }

    /// The ranking characteristic of the generating distribution.
    pub fn true_scores(&self) -> Vec<f64> {
        match self {
            Self::Gaussian { theta, .. } => theta.clone(),
            Self::Quantile { mu, sigma, zeta, .. } => {
                let z = Normal::standard().inverse_cdf(*zeta);
                mu.iter().zip(sigma).map(|(m, s)| (m + s * z).exp()).collect()
            }
            Self::Regression { strengths, .. } => strengths.clone(),
            Self::Pl { theta, .. } => theta.clone(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        let k = self.k();
        if k < 2 {
            return Err("need at least two populations".into());
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::Gaussian { theta, sigma, n } => {
                if sigma.len() != k || n.len() != k {
                    return Err("theta, sigma and n differ in length".into());
                }
                if !finite(theta) || sigma.iter().any(|&s| !(s > 0.0)) || n.contains(&0) {
                    return Err("need finite theta, positive sigma and n".into());
                }
            }
            Self::Quantile { mu, sigma, n, zeta } => {
                if sigma.len() != k {
                    return Err("mu and sigma differ in length".into());
                }
                if !finite(mu) || sigma.iter().any(|&s| !(s > 0.0)) || *n < 2 || !(*zeta > 0.0 && *zeta < 1.0) {
                    return Err("need finite mu, positive sigma, n >= 2 and zeta in (0, 1)".into());
                }
            }
            Self::Regression { strengths, scale, intercept, legs } => {
                if !finite(strengths) || !(*scale > 0.0) || !intercept.is_finite() || *legs == 0 {
                    return Err("need finite strengths and intercept, positive scale and legs".into());
                }
            }
            Self::Pl { theta, l } => {
                if k < 3 || theta.iter().any(|&t| !(t > 0.0)) || *l < 2 {
                    return Err("need K >= 3 positive worths and l >= 2".into());
                }
            }
        }
        Ok(())
    }
}

/// Every unordered pair meets `legs` times, the home side alternating.
pub fn schedule(k: usize, legs: usize) -> (Vec<usize>, Vec<usize>) {
    let (mut home, mut away) = (Vec::new(), Vec::new());
    for leg in 0..legs {
        for i in 0..k {
            for j in (i + 1)..k {
                let (h, a) = if leg % 2 == 0 { (i, j) } else { (j, i) };
                home.push(h);
                away.push(a);
            }
        }
    }
    (home, away)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub replications: usize,
    pub alpha: f64,
    pub borel_draws: usize,
    pub candidate_draws: usize,
    pub budget: BudgetRecord,
    pub seed: u64,
    #[serde(default = "descending")]
    pub orientation: OrientationTag,
    /// PL only: use the per-band level instead of the Bonferroni split.
    #[serde(default)]
    pub per_band: bool,
}

fn descending() -> OrientationTag {
    OrientationTag::Descending
}

impl From<OrientationTag> for Orientation {
    fn from(o: OrientationTag) -> Self {
        match o {
            OrientationTag::Ascending => Orientation::Ascending,
            OrientationTag::Descending => Orientation::Descending,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(s).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.replications == 0 {
            return Err("need at least one replication".into());
        }
        self.model.validate()?;
        rankrepro_core::pipeline::validate(&self.pipeline_config(0)).map_err(|e| e.to_string())
    }

    fn pipeline_config(&self, seed: u64) -> PipelineConfig {
        PipelineConfig {
            alpha: self.alpha,
            borel_draws: self.borel_draws,
            candidate_draws: self.candidate_draws,
            budget: (&self.budget).into(),
            seed,
            orientation: self.orientation.into(),
        }
    }

    /// Generates one data set from the truth and runs the matching pipeline.
    pub fn run_replication(&self, rep: usize) -> rankrepro_core::Result<PipelineOutput> {
        let seed = child_seed(self.seed, rep as u64);
        let mut rng = stream_rng(seed, Stream::Data);
        let cfg = self.pipeline_config(seed);
        match &self.model {
            ModelSpec::Gaussian { theta, sigma, n } => {
                let y = (0..theta.len())
                    .map(|k| theta[k] + sigma[k] / (n[k] as f64).sqrt() * NoiseDistribution::StdNormal.sample(&mut rng))
                    .collect();
                gaussian_pipeline(&GaussianInstance::new(y, sigma.clone(), n.clone())?, &cfg)
            }
            ModelSpec::Quantile { mu, sigma, n, zeta } => {
                let samples = mu
                    .iter()
                    .zip(sigma)
                    .map(|(m, s)| (0..*n).map(|_| (m + s * NoiseDistribution::StdNormal.sample(&mut rng)).exp()).collect())
                    .collect();
                quantile_pipeline(&QuantileInstance::new(samples, *zeta)?, &cfg)
            }
            ModelSpec::Regression { strengths, scale, intercept, legs } => {
                let (home, away) = schedule(strengths.len(), *legs);
                let y = home
                    .iter()
                    .zip(&away)
                    .map(|(&h, &a)| {
                        strengths[h] - strengths[a] + intercept + scale * NoiseDistribution::Laplace.sample(&mut rng)
                    })
                    .collect();
                regression_pipeline(&RegressionInstance::new(strengths.len(), home, away, y)?, &cfg)
            }
            ModelSpec::Pl { theta, l } => {
                let (inst, _) = pl_simulate_trials(theta, &all_triples(theta.len()), *l, &mut rng)?;
                let level = if self.per_band { BandLevel::PerBand } else { BandLevel::Bonferroni };
                pl_pipeline(&inst, &cfg, level)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationCoverage {
    pub population: usize,
    pub true_rank: usize,
    pub coverage: f64,
    /// Monte Carlo standard error `√(p̂(1 - p̂)/reps)`.
    pub coverage_se: f64,
    /// Over replications with a nonempty set.
    pub mean_length: f64,
    pub sd_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub model: String,
    pub k: usize,
    pub replications: usize,
    /// Replications whose pipeline returned an error; they count as not covered.
    pub failures: usize,
    /// Replications whose reported set was empty; they count as not covered.
    pub empty_sets: usize,
    pub populations: Vec<PopulationCoverage>,
    pub mean_coverage: f64,
    pub joint_coverage: f64,
    pub joint_coverage_se: f64,
    pub config: ExperimentConfig,
}

impl CoverageReport {
    /// Population coverages ordered by true rank.
    pub fn coverage_by_rank(&self) -> Vec<f64> {
        let mut v: Vec<(usize, f64)> = self.populations.iter().map(|p| (p.true_rank, p.coverage)).collect();
        v.sort_by_key(|x| x.0);
        v.into_iter().map(|x| x.1).collect()
    }

    /// `population,true_rank,coverage,coverage_se,mean_length,sd_length`, then
    /// `mean` and `joint` summary rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["population", "true_rank", "coverage", "coverage_se", "mean_length", "sd_length"])?;
        for p in &self.populations {
            w.write_record([
                (p.population + 1).to_string(),
                p.true_rank.to_string(),
                format!("{:.6}", p.coverage),
                format!("{:.6}", p.coverage_se),
                format!("{:.6}", p.mean_length),
                format!("{:.6}", p.sd_length),
            ])?;
        }
        w.write_record(["mean", "", &format!("{:.6}", self.mean_coverage), "", "", ""])?;
        w.write_record(["joint", "", &format!("{:.6}", self.joint_coverage), &format!("{:.6}", self.joint_coverage_se), "", ""])?;
        w.flush()?;
        Ok(())
    }
}

enum Outcome {
    Failed,
    Empty,
    Done { covered: Vec<bool>, lengths: Vec<usize>, joint: bool },
}

fn se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn run_coverage_experiment(cfg: &ExperimentConfig) -> Result<CoverageReport, String> {
    cfg.validate()?;
    let k = cfg.model.k();
    let orientation: Orientation = cfg.orientation.into();
    let truth = rank_of(&cfg.model.true_scores(), orientation).map_err(|e| e.to_string())?;
    let outcomes: Vec<Outcome> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| match cfg.run_replication(rep) {
            Err(_) => Outcome::Failed,
            Ok(out) if out.marginals().is_empty() => Outcome::Empty,
            Ok(out) => {
                let m = out.marginals();
                Outcome::Done {
                    covered: (0..k).map(|i| m[i].contains(truth.ranks[i])).collect(),
                    lengths: m.iter().map(|iv| iv.width()).collect(),
                    joint: out.contains(&truth),
                }
            }
        })
        .collect();
    Ok(aggregate(cfg, &truth, &outcomes))
}

fn aggregate(cfg: &ExperimentConfig, truth: &RankVector, outcomes: &[Outcome]) -> CoverageReport {
    let k = truth.len();
    let reps = outcomes.len();
    let mut hits = vec![0usize; k];
    let mut lengths: Vec<Vec<usize>> = vec![Vec::new(); k];
    let (mut joint, mut failures, mut empty_sets) = (0, 0, 0);
    for o in outcomes {
        match o {
            Outcome::Failed => failures += 1,
            Outcome::Empty => empty_sets += 1,
            Outcome::Done { covered, lengths: l, joint: j } => {
                for i in 0..k {
                    hits[i] += usize::from(covered[i]);
                    lengths[i].push(l[i]);
                }
                joint += usize::from(*j);
            }
        }
    }
    let populations: Vec<PopulationCoverage> = (0..k)
        .map(|i| {
            let p = hits[i] as f64 / reps as f64;
            let l = &lengths[i];
            let (mean, sd) = if l.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let mean = l.iter().sum::<usize>() as f64 / l.len() as f64;
                let var = if l.len() > 1 {
                    l.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (l.len() - 1) as f64
                } else {
                    0.0
                };
                (mean, var.sqrt())
            };
            PopulationCoverage {
                population: i,
                true_rank: truth.ranks[i],
                coverage: p,
                coverage_se: se(p, reps),
                mean_length: mean,
                sd_length: sd,
            }
        })
        .collect();
    let mean_coverage = populations.iter().map(|p| p.coverage).sum::<f64>() / k as f64;
    let joint_coverage = joint as f64 / reps as f64;
    CoverageReport {
        model: cfg.model.name().into(),
        k,
        replications: reps,
        failures,
        empty_sets,
        populations,
        mean_coverage,
        joint_coverage,
        joint_coverage_se: se(joint_coverage, reps),
        config: cfg.clone(),
    }
}

/// A Gaussian instance and a grid of budgets sharing one pool of repro draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub y_obs: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Sample sizes; defaults to one per population so `sigma` is the standard error.
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    pub draws: usize,
    pub seed: u64,
    pub p_star: Vec<f64>,
    #[serde(default = "descending")]
    pub orientation: OrientationTag,
}

impl SweepConfig {
    pub fn from_toml(s: &str) -> Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    pub fn instance(&self) -> rankrepro_core::Result<GaussianInstance> {
        let n = self.n.clone().unwrap_or_else(|| vec![1; self.y_obs.len()]);
        GaussianInstance::new(self.y_obs.clone(), self.sigma.clone(), n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p_star: f64,
    pub c: usize,
    pub accepted: usize,
    pub unique: usize,
}

/// One row per budget, sorted by p*.
pub fn run_pstar_sweep(cfg: &SweepConfig) -> rankrepro_core::Result<Vec<SweepRow>> {
    let inst = cfg.instance()?;
    let k = inst.k();
    let mut rng = stream_rng(cfg.seed, Stream::Candidate);
    let pool: Vec<Vec<f64>> = (0..cfg.draws)
        .map(|i| {
            let u = NoiseDraw::sample(NoiseDistribution::StdNormal, k, i, &mut rng);
            gaussian_theta_star(&inst, &u).map(|t| t.into_inner())
        })
        .collect::<rankrepro_core::Result<_>>()?;
    let mut grid = cfg.p_star.clone();
    grid.sort_by(f64::total_cmp);
    grid.par_iter()
        .map(|&p| {
            let budget = DiscordanceBudget::from_p_star(p, k)?;
            let cand = build_candidate_set(&inst.y_obs, &pool, budget, cfg.orientation.into())?;
            Ok(SweepRow { p_star: p, c: budget.c, accepted: cand.accepted_draws, unique: cand.len() })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_star", "c", "accepted", "unique"])?;
    for r in rows {
        w.write_record([r.p_star.to_string(), r.c.to_string(), r.accepted.to_string(), r.unique.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
