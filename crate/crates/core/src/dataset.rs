//! Dataset operations: group balancing, force filtering, stratified
//! train/test splits and the synthetic generator.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{GroupId, Groups, StopRecord};
use crate::{Error, Result};

/// Per-group record and positive-outcome counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GroupTally {
    pub total: usize,
    pub positive: usize,
}

impl GroupTally {
    /// Positive share in percent; 0 for an empty group.
    pub fn percent_positive(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.positive as f64 / self.total as f64
        }
    }
}

pub fn tally(dataset: &[StopRecord], group_count: usize) -> Vec<GroupTally> {
    let mut out = alloc::vec![GroupTally::default(); group_count];
    for r in dataset {
        if let Some(t) = out.get_mut(r.group.0) {
            t.total += 1;
            t.positive += usize::from(r.outcome == Some(true));
        }
    }
    out
}

fn indices_by_group(dataset: &[StopRecord], group_count: usize) -> Vec<Vec<usize>> {
    let mut by = alloc::vec![Vec::new(); group_count];
    for (i, r) in dataset.iter().enumerate() {
        if let Some(v) = by.get_mut(r.group.0) {
            v.push(i);
        }
    }
    by
}

/// Uniform subsample without replacement of exactly `n_per_group` records
/// per group. Output keeps the input order.
pub fn balance<R: Rng + ?Sized>(
    dataset: &[StopRecord],
    groups: &Groups,
    n_per_group: usize,
    rng: &mut R,
) -> Result<Vec<StopRecord>> {
    if n_per_group == 0 {
        return Err(Error::domain("n_per_group must be positive"));
    }
    let by = indices_by_group(dataset, groups.len());
    let mut keep = Vec::with_capacity(n_per_group * groups.len());
    for (g, idx) in groups.iter().zip(&by) {
        if idx.len() < n_per_group {
            return Err(Error::domain(alloc::format!(
                "group {:?} has {} records, fewer than {n_per_group}",
                g.label,
                idx.len()
            )));
        }
        keep.extend(sample(rng, idx.len(), n_per_group).into_iter().map(|j| idx[j]));
    }
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| dataset[i].clone()).collect())
}

pub fn filter_force(dataset: &[StopRecord], force: &str) -> Vec<StopRecord> {
    dataset.iter().filter(|r| r.force == force).cloned().collect()
}

/// Records that are positive under the outcome scheme.
pub fn filter_positive(dataset: &[StopRecord]) -> Vec<StopRecord> {
    dataset.iter().filter(|r| r.outcome == Some(true)).cloned().collect()
}

/// Stratified split: each group sends `round(n_g * test_fraction)` records
/// to the test side. Both sides keep the input order.
pub fn split<R: Rng + ?Sized>(
    dataset: &[StopRecord],
    test_fraction: f64,
    rng: &mut R,
) -> Result<(Vec<StopRecord>, Vec<StopRecord>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::domain("test fraction must lie in (0, 1)"));
    }
    if dataset.len() < 2 {
        return Err(Error::domain("split needs at least two records"));
    }
    let group_count = dataset.iter().map(|r| r.group.0 + 1).max().unwrap_or(0);
    let mut in_test = alloc::vec![false; dataset.len()];
    for idx in indices_by_group(dataset, group_count) {
        let n_test = libm::round(idx.len() as f64 * test_fraction) as usize;
        for j in sample(rng, idx.len(), n_test.min(idx.len())) {
            in_test[idx[j]] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (r, t) in dataset.iter().zip(in_test) {
        if t {
            test.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    Ok((train, test))
}

/// Ground truth for the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueParams {
    pub beta: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    /// Individuals simulated per group.
    pub population: Vec<usize>,
}

impl TrueParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain("alpha and gamma must be positive"));
        }
        if self.beta.len() != self.population.len() || self.beta.is_empty() {
            return Err(Error::domain("beta and population need one entry per group"));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::domain("beta must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    /// Stopped individuals only.
    pub records: Vec<StopRecord>,
    /// Empirical stop rate per group.
    pub stop_rates: Vec<f64>,
}

/// One simulated individual; `None` when not stopped.
fn simulate_one<R: Rng + ?Sized>(beta: f64, sd_a: f64, sd_g: f64, rng: &mut R) -> Option<bool> {
    let c: f64 = rng.sample(StandardNormal);
    let e_s: f64 = rng.sample(StandardNormal);
    let e_t: f64 = rng.sample(StandardNormal);
    if c + beta + sd_a * e_s > 0.0 {
        Some(c + sd_g * e_t > 0.0)
    } else {
        None
    }
}

/// Simulates `population[k]` individuals per group with `C ~ N(0, 1)` and
/// keeps the stopped ones, group by group.
pub fn synthesize<R: Rng + ?Sized>(params: &TrueParams, rng: &mut R) -> Result<Synthetic> {
    params.validate()?;
    let (sd_a, sd_g) = (libm::sqrt(params.alpha), libm::sqrt(params.gamma));
    let mut records = Vec::new();
    let mut stop_rates = Vec::with_capacity(params.beta.len());
    for (k, (&beta, &pop)) in params.beta.iter().zip(&params.population).enumerate() {
        let mut stops = 0usize;
        for _ in 0..pop {
            if let Some(found) = simulate_one(beta, sd_a, sd_g, rng) {
                stops += 1;
                records.push(StopRecord::stopped(GroupId(k), found).with_force(String::from("synthetic")));
            }
        }
        stop_rates.push(if pop == 0 { 0.0 } else { stops as f64 / pop as f64 });
    }
    Ok(Synthetic { records, stop_rates })
}

/// Simulates individuals round-robin over the groups until `kept` stops
/// have been recorded. Fails if that takes more than `max_population`
/// individuals.
pub fn synthesize_until<R: Rng + ?Sized>(
    beta: &[f64],
    alpha: f64,
    gamma: f64,
    kept: usize,
    max_population: usize,
    rng: &mut R,
) -> Result<Vec<StopRecord>> {
    TrueParams { beta: beta.to_vec(), alpha, gamma, population: alloc::vec![0; beta.len()] }.validate()?;
    let (sd_a, sd_g) = (libm::sqrt(alpha), libm::sqrt(gamma));
    let mut records = Vec::with_capacity(kept);
    let mut simulated = 0usize;
    while records.len() < kept {
        if simulated >= max_population {
            return Err(Error::domain("stop rate too low to reach the requested record count"));
        }
        let k = simulated % beta.len();
        simulated += 1;
        if let Some(found) = simulate_one(beta[k], sd_a, sd_g, rng) {
            records.push(StopRecord::stopped(GroupId(k), found).with_force(String::from("synthetic")));
        }
    }
    Ok(records)
}
