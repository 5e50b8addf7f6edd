//! Finite-sample confidence sets for the ranks of K populations.
//!
//! Latent model noise is redrawn ("repro samples"); every draw that lands in a
//! high-probability region yields bounds on each population's rank, and the union
//! of those boxes is a confidence set. A second stream of draws produces candidate
//! rankings that are filtered by their discordance with the point estimate and
//! intersected with the box union.

#![no_std]

extern crate alloc;

/// Crate version, recorded in result documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod baselines;
pub mod bounds;
pub mod candidate;
pub mod confidence;
pub mod error;
pub mod models;
pub mod neighborhood;
pub mod noise;
pub mod pipeline;
pub mod rank;
pub mod solvers;

pub use candidate::{
    build_candidate_set, choose_c_percentile, choose_c_snr, BudgetMethod, CandidateSet, DiscordanceBudget,
};
pub use confidence::{assemble_confidence_set, refine_with_candidate, RankBox, RankConfidenceSet, RefinedRankSet, SetMetadata};
pub use error::{Error, Result};
pub use neighborhood::{rank_intervals, NeighborhoodSets};
pub use noise::{NoiseDistribution, NoiseDraw};
pub use pipeline::{BudgetConfig, PipelineConfig, PipelineOutput};
pub use rank::{discordance, k_pairs, normalized_discordance, rank_of, Orientation, RankInterval, RankVector, ScoreVector};
