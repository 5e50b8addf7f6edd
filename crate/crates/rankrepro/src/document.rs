//! Versioned JSON result documents and the marginal-intervals CSV.

use std::io::Write;

use serde::{Deserialize, Serialize};

use rankrepro_core::{rank_of, BudgetConfig, Orientation, PipelineConfig, PipelineOutput, RankInterval};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationTag {
    Ascending,
    Descending,
}

impl From<Orientation> for OrientationTag {
    fn from(o: Orientation) -> Self {
        match o {
            Orientation::Ascending => Self::Ascending,
            Orientation::Descending => Self::Descending,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BudgetRecord {
    PStar { p_star: f64 },
    Manual { c: usize },
    Percentile { q: f64 },
    Snr { lambda: f64 },
    NoCandidate,
}

impl From<BudgetConfig> for BudgetRecord {
    fn from(b: BudgetConfig) -> Self {
        match b {
            BudgetConfig::PStar(p_star) => Self::PStar { p_star },
            BudgetConfig::Manual(c) => Self::Manual { c },
            BudgetConfig::Percentile(q) => Self::Percentile { q },
            BudgetConfig::Snr { lambda } => Self::Snr { lambda },
            BudgetConfig::NoCandidate => Self::NoCandidate,
        }
    }
}

impl From<&BudgetRecord> for BudgetConfig {
    fn from(b: &BudgetRecord) -> Self {
        match *b {
            BudgetRecord::PStar { p_star } => Self::PStar(p_star),
            BudgetRecord::Manual { c } => Self::Manual(c),
            BudgetRecord::Percentile { q } => Self::Percentile(q),
            BudgetRecord::Snr { lambda } => Self::Snr { lambda },
            BudgetRecord::NoCandidate => Self::NoCandidate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationResult {
    pub id: String,
    pub estimate: f64,
    pub rank: usize,
    /// `None` when the reported set is empty.
    pub interval: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_interval: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateStats {
    pub c: usize,
    pub p_star: f64,
    pub accepted: usize,
    pub unique: usize,
    pub total: usize,
    pub infeasible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub alpha: f64,
    pub borel_draws: usize,
    pub candidate_draws: usize,
    pub budget: BudgetRecord,
    pub seed: u64,
}

impl RunSettings {
    pub fn pipeline_config(&self, orientation: Orientation) -> PipelineConfig {
        PipelineConfig {
            alpha: self.alpha,
            borel_draws: self.borel_draws,
            candidate_draws: self.candidate_draws,
            budget: (&self.budget).into(),
            seed: self.seed,
            orientation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub rankrepro: String,
    pub rankrepro_core: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self { rankrepro: env!("CARGO_PKG_VERSION").into(), rankrepro_core: rankrepro_core::VERSION.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub method: String,
    pub k: usize,
    pub orientation: OrientationTag,
    pub settings: RunSettings,
    pub populations: Vec<PopulationResult>,
    pub accepted_borel_draws: usize,
    pub distinct_boxes: usize,
    /// Size of the refined joint set, when a candidate set was built.
    pub joint_set_size: Option<usize>,
    pub candidate: Option<CandidateStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub versions: Versions,
}

impl ResultDocument {
    pub fn from_output(
        method: &str,
        ids: &[String],
        cfg: &PipelineConfig,
        out: &PipelineOutput,
    ) -> rankrepro_core::Result<Self> {
        let ranks = rank_of(&out.theta_hat, cfg.orientation)?.ranks;
        let marg = out.marginals();
        let populations = ids
            .iter()
            .enumerate()
            .map(|(i, id)| PopulationResult {
                id: id.clone(),
                estimate: out.theta_hat[i],
                rank: ranks[i],
                interval: marg.get(i).map(|iv| [iv.lo, iv.hi]),
                bootstrap_interval: None,
            })
            .collect();
        let candidate = out.candidate.as_ref().map(|c| CandidateStats {
            c: c.budget.c,
            p_star: c.budget.p_star,
            accepted: c.accepted_draws,
            unique: c.len(),
            total: c.total_draws,
            infeasible: out.infeasible_draws,
        });
        let mut notes = Vec::new();
        if let Some(d) = &out.gamma.diagnostic {
            notes.push(d.clone());
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            method: method.into(),
            k: ids.len(),
            orientation: cfg.orientation.into(),
            settings: RunSettings {
                alpha: cfg.alpha,
                borel_draws: cfg.borel_draws,
                candidate_draws: cfg.candidate_draws,
                budget: cfg.budget.into(),
                seed: cfg.seed,
            },
            populations,
            accepted_borel_draws: out.gamma.boxes.len(),
            distinct_boxes: out.gamma.distinct_boxes(),
            joint_set_size: out.joint_size(),
            candidate,
            notes,
            versions: Versions::default(),
        })
    }

    pub fn with_bootstrap(mut self, intervals: &[RankInterval]) -> Self {
        for (p, iv) in self.populations.iter_mut().zip(intervals) {
            p.bootstrap_interval = Some([iv.lo, iv.hi]);
        }
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// `id,estimate,rank,lo,hi` with blank bounds for an empty set, plus bootstrap
    /// bounds when present.
    pub fn write_marginals_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let boot = self.populations.iter().any(|p| p.bootstrap_interval.is_some());
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["id", "estimate", "rank", "lo", "hi"];
        if boot {
            head.extend(["bootstrap_lo", "bootstrap_hi"]);
        }
        w.write_record(&head)?;
        let bound = |iv: Option<[usize; 2]>, i: usize| iv.map_or(String::new(), |v| v[i].to_string());
        for p in &self.populations {
            let mut row = vec![
                p.id.clone(),
                p.estimate.to_string(),
                p.rank.to_string(),
                bound(p.interval, 0),
                bound(p.interval, 1),
            ];
            if boot {
                row.push(bound(p.bootstrap_interval, 0));
                row.push(bound(p.bootstrap_interval, 1));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let width = self.populations.iter().map(|p| p.id.len()).max().unwrap_or(2).max(2);
        let boot = self.populations.iter().any(|p| p.bootstrap_interval.is_some());
        let fmt = |iv: Option<[usize; 2]>| iv.map_or("empty".to_string(), |[lo, hi]| format!("[{lo}, {hi}]"));
        let mut s = format!("{:width$}  {:>12}  {:>4}  {:>9}", "id", "estimate", "rank", "CI");
        if boot {
            s.push_str(&format!("  {:>9}", "bootstrap"));
        }
        s.push('\n');
        for p in &self.populations {
            s.push_str(&format!("{:width$}  {:>12.6}  {:>4}  {:>9}", p.id, p.estimate, p.rank, fmt(p.interval)));
            if boot {
                s.push_str(&format!("  {:>9}", fmt(p.bootstrap_interval)));
            }
            s.push('\n');
        }
        s
    }
}
