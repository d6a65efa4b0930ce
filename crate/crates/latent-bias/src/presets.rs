//! Dataset variants used in the experiments.

use latent_bias_core::dataset::{balance, filter_force};
use latent_bias_core::seed::stream;
use latent_bias_core::{Groups, StopRecord};

use crate::error::AppError;

pub const LONDON_MET_FORCE: &str = "Metropolitan Police Service";
pub const AUGMENTED_PER_GROUP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// All forces, guilty / not guilty.
    National,
    /// National, subsampled to 1000 records per group.
    Augmented,
    /// Guilty records only, lenient / severe.
    Charges,
    /// Metropolitan Police Service only.
    LondonMet,
}

impl Preset {
    pub fn uses_charges_scheme(self) -> bool {
        matches!(self, Preset::Charges)
    }

    /// Applies the preset's dataset operations. Balancing draws from the
    /// `"balance"` stream of `seed`.
    pub fn apply(self, records: Vec<StopRecord>, groups: &Groups, seed: u64) -> Result<Vec<StopRecord>, AppError> {
        match self {
            Preset::National | Preset::Charges => Ok(records),
            Preset::Augmented => Ok(balance(&records, groups, AUGMENTED_PER_GROUP, &mut stream(seed, "balance", 0))?),
            Preset::LondonMet => Ok(filter_force(&records, LONDON_MET_FORCE)),
        }
    }
}
