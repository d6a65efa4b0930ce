//! File formats, ingestion and the `latent-bias` command-line tool built on
//! [`latent_bias_core`].

pub mod cli;
pub mod data;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod presets;

pub use error::AppError;
