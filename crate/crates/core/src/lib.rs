//! Bayesian inference for latent per-group bias in stop-and-search records.
//!
//! Each stopped individual carries a latent criminality `C` and belongs to a
//! group with an additive bias `beta_k`. A stop happens when
//! `C + beta_k + N(0, alpha) > 0` and an offence is found when
//! `C + N(0, gamma) > 0`. The crate infers a joint Gaussian over
//! `(beta_0, .., beta_{K-1}, C)` with a Gibbs sampler over truncated-Gaussian
//! latents, and provides a TrueSkill-style ranking baseline, the analytic
//! per-record likelihood with a quadrature cross-check, and held-out scoring.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, ingestion and
//! the command-line driver live in the `latent-bias` crate.

#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

pub mod dataset;
mod error;
pub mod gaussian;
pub mod inference;
pub mod likelihood;
pub mod linalg;
pub mod model;
pub mod mvn;
pub mod quadrature;
pub mod ranking;
pub mod seed;

pub use error::{Error, Result};
pub use gaussian::{sample_truncated_normal, std_normal_cdf, std_normal_pdf, Gaussian1D, Sign};
pub use inference::{
    accumulate_stats, anchor, gibbs_sweep, run_gibbs, sample_latents, GibbsChain, GibbsTrace, LatentPair,
    PosteriorSummary, StatsAccumulator,
};
pub use likelihood::{likelihood_oracle, predictive_score, stop_search_likelihood, OutcomeLikelihood, ScoringRule};
pub use model::{
    build_prior, guilt_probability, stop_probability, DrawMode, EthnicGroup, GroupId, Groups,
    ModelConfig, PosteriorState, PriorKind, StopRecord,
};
pub use mvn::{mvn_marginal, mvn_sample, MultivariateGaussian, NaturalGaussian};
pub use ranking::{matches_from_dataset, rank, trueskill_gibbs, Match, Player, SkillState};
