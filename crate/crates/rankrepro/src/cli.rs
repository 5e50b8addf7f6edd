//! Command-line surface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rankrepro_core::baselines::{bootstrap_rank_intervals, BootstrapConfig, Statistic};
use rankrepro_core::models::gaussian::gaussian_pipeline;
use rankrepro_core::models::pl::{pl_pipeline, BandLevel};
use rankrepro_core::models::quantile::{quantile_pipeline, QuantileInstance};
use rankrepro_core::models::regression::regression_pipeline;
use rankrepro_core::pipeline::DEFAULT_SNR_LAMBDA;
use rankrepro_core::{BudgetConfig, Error, Orientation, PipelineConfig, RankInterval};

use crate::document::ResultDocument;
use crate::harness::{run_coverage_experiment, run_pstar_sweep, write_sweep_csv, ExperimentConfig, SweepConfig};
use crate::io::{load_gaussian_csv, load_matches_csv, load_populations_csv, load_trials_csv, LoadError};

#[derive(Debug, Parser)]
#[command(name = "rankrepro", version, about = "Finite-sample confidence sets for ranks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Population means with known standard deviations.
    Gaussian {
        /// `population_id,value` samples or `population_id,mean,sd,n` summaries.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Population quantiles.
    Quantile {
        /// `population_id,value` samples.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        zeta: f64,
        /// Also report bootstrap rank intervals from this many resamples.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Team strengths from match score differences under Laplace noise.
    Regression {
        /// `home_id,away_id,home_goals,away_goals` or `home_id,away_id,score_diff`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Plackett-Luce worths from top choices among triples.
    Pl {
        /// `item1,item2,item3,chosen` with ascending integer item ids.
        #[arg(long)]
        input: PathBuf,
        /// Give each order-statistic band the full level instead of splitting it.
        #[arg(long)]
        per_band: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Coverage experiment from a TOML config; writes the report CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Candidate-set sizes over a grid of p* from a TOML config; writes a CSV table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrientationArg {
    Ascending,
    Descending,
}

#[derive(Debug, Args)]
#[group(id = "budget", multiple = false)]
struct BudgetArgs {
    /// Discordance budget as a fraction of the number of pairs.
    #[arg(long, group = "budget")]
    pstar: Option<f64>,
    /// Discordance budget as a count of ordered pairs.
    #[arg(long, group = "budget")]
    c: Option<usize>,
    /// Budget at this percentile of the candidate draws' discordances.
    #[arg(long, group = "budget")]
    percentile_q: Option<f64>,
    /// Signal-to-noise budget with this inflation factor (the default rule).
    #[arg(long, group = "budget")]
    snr_lambda: Option<f64>,
    /// Report the box union without a candidate set.
    #[arg(long, group = "budget")]
    no_candidate: bool,
}

impl BudgetArgs {
    fn config(&self) -> BudgetConfig {
        if let Some(p) = self.pstar {
            BudgetConfig::PStar(p)
        } else if let Some(c) = self.c {
            BudgetConfig::Manual(c)
        } else if let Some(q) = self.percentile_q {
            BudgetConfig::Percentile(q)
        } else if self.no_candidate {
            BudgetConfig::NoCandidate
        } else {
            BudgetConfig::Snr { lambda: self.snr_lambda.unwrap_or(DEFAULT_SNR_LAMBDA) }
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Borel-stage repro draws.
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    /// Candidate-stage repro draws.
    #[arg(long, default_value_t = 2000)]
    candidate_draws: usize,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Result document path; the marginal intervals go next to it as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OrientationArg::Descending)]
    orientation: OrientationArg,
}

impl RunArgs {
    fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        let cfg = PipelineConfig {
            alpha: self.alpha,
            borel_draws: self.draws,
            candidate_draws: self.candidate_draws,
            budget: self.budget.config(),
            seed: self.seed,
            orientation: match self.orientation {
                OrientationArg::Ascending => Orientation::Ascending,
                OrientationArg::Descending => Orientation::Descending,
            },
        };
        rankrepro_core::pipeline::validate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => Self::Data(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// `results.json` → `results.csv`; other names get `.csv` appended.
pub fn marginals_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("csv")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".csv");
        PathBuf::from(s)
    }
}

fn emit(doc: &ResultDocument, out: Option<&Path>) -> Result<(), CliError> {
    print!("{}", doc.table());
    if let Some(path) = out {
        write_file(path, doc.to_json().as_bytes())?;
        let mut csv = Vec::new();
        doc.write_marginals_csv(&mut csv).map_err(|e| CliError::Data(e.to_string()))?;
        write_file(&marginals_path(path), &csv)?;
    }
    Ok(())
}

fn oriented(intervals: Vec<RankInterval>, orientation: Orientation, k: usize) -> Vec<RankInterval> {
    match orientation {
        Orientation::Descending => intervals,
        Orientation::Ascending => intervals
            .into_iter()
            .map(|iv| RankInterval { lo: k + 1 - iv.hi, hi: k + 1 - iv.lo, ..iv })
            .collect(),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gaussian { input, run } => {
            let cfg = run.pipeline_config()?;
            let (ids, inst) = load_gaussian_csv(&input)?;
            let out = gaussian_pipeline(&inst, &cfg)?;
            emit(&ResultDocument::from_output("gaussian", &ids, &cfg, &out)?, run.out.as_deref())
        }
        Command::Quantile { input, zeta, bootstrap, run } => {
            let cfg = run.pipeline_config()?;
            if !(zeta > 0.0 && zeta < 1.0) {
                return Err(CliError::Usage("--zeta must lie in (0, 1)".into()));
            }
            let pops = load_populations_csv(&input)?;
            let inst = QuantileInstance::new(pops.samples.clone(), zeta)?;
            let out = quantile_pipeline(&inst, &cfg)?;
            let mut doc = ResultDocument::from_output("quantile", &pops.ids, &cfg, &out)?;
            if let Some(resamples) = bootstrap {
                let bcfg = BootstrapConfig { resamples, alpha: cfg.alpha, statistic: Statistic::Quantile(zeta) };
                let iv = bootstrap_rank_intervals(&pops.samples, &bcfg, cfg.seed)?;
                doc = doc.with_bootstrap(&oriented(iv, cfg.orientation, pops.k()));
            }
            emit(&doc, run.out.as_deref())
        }
        Command::Regression { input, run } => {
            let cfg = run.pipeline_config()?;
            let m = load_matches_csv(&input)?;
            let out = regression_pipeline(&m.instance, &cfg)?;
            emit(&ResultDocument::from_output("regression", &m.teams, &cfg, &out)?, run.out.as_deref())
        }
        Command::Pl { input, per_band, run } => {
            let cfg = run.pipeline_config()?;
            let t = load_trials_csv(&input)?;
            if t.ragged {
                eprintln!("warning: subsets are repeated unequally often");
            }
            let level = if per_band { BandLevel::PerBand } else { BandLevel::Bonferroni };
            let out = pl_pipeline(&t.instance, &cfg, level)?;
            let ids: Vec<String> = t.items.iter().map(u64::to_string).collect();
            let mut doc = ResultDocument::from_output("pl", &ids, &cfg, &out)?;
            if t.ragged {
                doc.notes.push("ragged design: subsets are repeated unequally often".into());
            }
            emit(&doc, run.out.as_deref())
        }
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::from_toml(&read_file(&config)?).map_err(CliError::Usage)?;
            let report = run_coverage_experiment(&cfg).map_err(CliError::Numerical)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv).map_err(|e| CliError::Data(e.to_string()))?;
            match out {
                Some(p) => write_file(&p, &csv),
                None => {
                    print!("{}", String::from_utf8_lossy(&csv));
                    Ok(())
                }
            }
        }
        Command::Sweep { config, out } => {
            let cfg = SweepConfig::from_toml(&read_file(&config)?).map_err(CliError::Usage)?;
            let rows = run_pstar_sweep(&cfg)?;
            let mut csv = Vec::new();
            write_sweep_csv(&mut csv, &rows).map_err(|e| CliError::Data(e.to_string()))?;
            match out {
                Some(p) => write_file(&p, &csv),
                None => {
                    print!("{}", String::from_utf8_lossy(&csv));
                    Ok(())
                }
            }
        }
    }
}

/// Caps rayon's pool at `RANKREPRO_THREADS` when set; 0 means automatic.
fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RANKREPRO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("RANKREPRO_THREADS={v:?} is not a thread count")))?;
    if n > 0 {
        // A pool that already exists (e.g. from an earlier call in-process) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let result = configure_threads().and_then(|()| run(cli));
    match result {
        Ok(()) => {
            eprintln!("finished in {:.2} s", started.elapsed().as_secs_f64());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
