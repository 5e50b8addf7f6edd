//! The generic two-stage procedure shared by every model: Borel-filtered draws build
//! the box union, an independent draw pool builds the candidate set, and the two are
//! intersected.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::candidate::{
    build_candidate_set, choose_c_percentile, choose_c_snr, discordances, CandidateSet, DiscordanceBudget,
};
use crate::confidence::{assemble_confidence_set, refine_with_candidate, RankConfidenceSet, RefinedRankSet, SetMetadata};
use crate::error::{invalid, Result};
use crate::neighborhood::NeighborhoodSets;
use crate::noise::{stream_rng, Stream};
use crate::rank::{Orientation, RankInterval, RankVector};

/// Default inflation factor for the signal-to-noise budget rule.
pub const DEFAULT_SNR_LAMBDA: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetConfig {
    PStar(f64),
    Manual(usize),
    Percentile(f64),
    /// Signal-to-noise rule; a zero budget is raised to one so that draws ordered
    /// like the estimate still enter the candidate set.
    Snr { lambda: f64 },
    /// Skip the candidate set; the final set is the box union itself.
    NoCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub borel_draws: usize,
    pub candidate_draws: usize,
    pub budget: BudgetConfig,
    pub seed: u64,
    pub orientation: Orientation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            borel_draws: 1000,
            candidate_draws: 1000,
            budget: BudgetConfig::Snr { lambda: DEFAULT_SNR_LAMBDA },
            seed: 0,
            orientation: Orientation::Descending,
        }
    }
}

/// A model that can redraw its latent noise.
pub trait ReproModel {
    fn population_count(&self) -> usize;

    /// Point estimate used for discordance.
    fn estimate(&self) -> &[f64];

    /// Draws fresh noise and returns its neighborhood sets when the draw lies in the
    /// Borel region, `None` otherwise.
    fn borel_draw(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<Option<NeighborhoodSets>>;

    /// Draws fresh noise and returns the implied scores, `None` when the draw admits
    /// no consistent scores.
    fn candidate_draw(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>>;

    /// Noise scale of `θ_i - θ_j` for each pair `i < j` in lexicographic order, when
    /// the model knows it.
    fn pair_scales(&self) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub theta_hat: Vec<f64>,
    pub gamma: RankConfidenceSet,
    pub candidate: Option<CandidateSet>,
    pub refined: Option<RefinedRankSet>,
    pub infeasible_draws: usize,
}

impl PipelineOutput {
    /// Marginal intervals of the reported set: the refined set when a candidate set
    /// was built, otherwise the box union. Empty when the reported set is empty.
    pub fn marginals(&self) -> &[RankInterval] {
        match &self.refined {
            Some(r) => &r.marginal,
            None => &self.gamma.marginal,
        }
    }

    pub fn contains(&self, ranking: &RankVector) -> bool {
        match &self.refined {
            Some(r) => r.contains(ranking),
            None => self.gamma.contains(ranking),
        }
    }

    /// Number of rank vectors in the refined set, when one was built.
    pub fn joint_size(&self) -> Option<usize> {
        self.refined.as_ref().map(|r| r.len())
    }
}

pub fn validate(cfg: &PipelineConfig) -> Result<()> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(invalid("alpha must lie in (0, 1)"));
    }
    if cfg.borel_draws == 0 {
        return Err(invalid("need at least one Borel draw"));
    }
    if cfg.candidate_draws == 0 && cfg.budget != BudgetConfig::NoCandidate {
        return Err(invalid("need at least one candidate draw"));
    }
    match cfg.budget {
        BudgetConfig::PStar(p) if !(0.0..=1.0).contains(&p) => Err(invalid("p* must lie in [0, 1]")),
        BudgetConfig::Percentile(q) if !(q > 0.0 && q < 1.0) => Err(invalid("percentile must lie in (0, 1)")),
        BudgetConfig::Snr { lambda } if !(lambda > 0.0) => Err(invalid("lambda must be positive")),
        _ => Ok(()),
    }
}

pub fn run_pipeline<M: ReproModel + ?Sized>(model: &M, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    validate(cfg)?;
    let k = model.population_count();
    let theta_hat = model.estimate().to_vec();

    let mut rng = stream_rng(cfg.seed, Stream::Borel);
    let mut accepted = Vec::new();
    for b in 0..cfg.borel_draws {
        if let Some(nbhd) = model.borel_draw(b, &mut rng)? {
            accepted.push((nbhd, b));
        }
    }

    let mut pool = Vec::new();
    let mut infeasible_draws = 0;
    if cfg.budget != BudgetConfig::NoCandidate {
        let mut rng = stream_rng(cfg.seed, Stream::Candidate);
        pool.reserve(cfg.candidate_draws);
        for v in 0..cfg.candidate_draws {
            match model.candidate_draw(v, &mut rng)? {
                Some(theta) => pool.push(theta),
                None => infeasible_draws += 1,
            }
        }
    }

    let budget = match cfg.budget {
        BudgetConfig::NoCandidate => None,
        BudgetConfig::PStar(p) => Some(DiscordanceBudget::from_p_star(p, k)?),
        BudgetConfig::Manual(c) => Some(DiscordanceBudget::manual(c, k)),
        BudgetConfig::Percentile(q) => {
            let disc = discordances(&theta_hat, &pool);
            if disc.is_empty() {
                Some(DiscordanceBudget::manual(0, k))
            } else {
                Some(choose_c_percentile(&disc, q, k)?)
            }
        }
        BudgetConfig::Snr { lambda } => {
            let tau = model.pair_scales().unwrap_or_else(|| empirical_pair_scales(&pool, k));
            let delta = pair_gaps(&theta_hat);
            let b = choose_c_snr(&delta, &tau, lambda, k)?;
            Some(DiscordanceBudget { c: b.c.max(1), ..b })
        }
    };

    let metadata = SetMetadata {
        c: budget.map(|b| b.c),
        p_star: budget.map(|b| b.p_star),
        borel_draws: cfg.borel_draws,
        candidate_draws: if budget.is_some() { cfg.candidate_draws } else { 0 },
        seed: cfg.seed,
    };
    let gamma = assemble_confidence_set(&accepted, k, None, cfg.alpha, cfg.orientation, metadata)?;

    let (candidate, refined) = match budget {
        Some(b) => {
            let cand = build_candidate_set(&theta_hat, &pool, b, cfg.orientation)?;
            let refined = refine_with_candidate(&gamma, &cand)?;
            (Some(cand), Some(refined))
        }
        None => (None, None),
    };

    Ok(PipelineOutput { theta_hat, gamma, candidate, refined, infeasible_draws })
}

/// `|θ_i - θ_j|` for pairs `i < j` in lexicographic order.
pub fn pair_gaps(theta: &[f64]) -> Vec<f64> {
    let k = theta.len();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            out.push((theta[i] - theta[j]).abs());
        }
    }
    out
}

/// Standard deviation of `θ*_i - θ*_j` across a draw pool; zero spreads are replaced
/// by the smallest positive float so the pair reads as noiseless.
pub fn empirical_pair_scales(pool: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = pool.len() as f64;
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let (mut s, mut ss) = (0.0, 0.0);
            for d in pool {
                let x = d[i] - d[j];
                s += x;
                ss += x * x;
            }
            let var = if pool.len() > 1 { ((ss - s * s / n) / (n - 1.0)).max(0.0) } else { 0.0 };
            out.push(libm::sqrt(var).max(f64::MIN_POSITIVE));
        }
    }
    out
}
