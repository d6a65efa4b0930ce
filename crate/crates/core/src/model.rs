//! Domain types for the stop-and-search model and prior construction.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::gaussian::phi;
use crate::linalg::Matrix;
use crate::mvn::MultivariateGaussian;
use crate::{Error, Result};

/// Dense group index `0..K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupId(pub usize);

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EthnicGroup {
    pub id: GroupId,
    pub label: String,
}

/// The ordered set of groups a dataset is coded against.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Groups(Vec<EthnicGroup>);

impl Groups {
    /// Ids are assigned densely in the order given; labels must be unique.
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut groups: Vec<EthnicGroup> = Vec::new();
        for (i, label) in labels.into_iter().enumerate() {
            let label = label.into();
            if groups.iter().any(|g| g.label == label) {
                return Err(Error::domain(alloc::format!("duplicate group label {label:?}")));
            }
            groups.push(EthnicGroup { id: GroupId(i), label });
        }
        if groups.is_empty() {
            return Err(Error::domain("at least one group is required"));
        }
        Ok(Self(groups))
    }

    /// White, Black, Asian, Other/Mixed.
    pub fn standard() -> Self {
        Self::new(["White", "Black", "Asian", "Other/Mixed"]).expect("static labels are unique")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EthnicGroup> {
        self.0.iter()
    }

    pub fn label(&self, id: GroupId) -> Option<&str> {
        self.0.get(id.0).map(|g| g.label.as_str())
    }

    pub fn id_of(&self, label: &str) -> Option<GroupId> {
        self.0.iter().find(|g| g.label == label).map(|g| g.id)
    }

    pub fn labels(&self) -> Vec<String> {
        self.0.iter().map(|g| g.label.clone()).collect()
    }
}

/// One stop-and-search event.
///
/// `outcome` is `None` exactly when `stopped` is false: criminality is only
/// observed for people who were stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StopRecord {
    pub group: GroupId,
    pub stopped: bool,
    pub outcome: Option<bool>,
    pub force: String,
    pub raw_outcome: String,
}

impl StopRecord {
    pub fn stopped(group: GroupId, outcome: bool) -> Self {
        Self { group, stopped: true, outcome: Some(outcome), force: String::new(), raw_outcome: String::new() }
    }

    pub fn not_stopped(group: GroupId) -> Self {
        Self { group, stopped: false, outcome: None, force: String::new(), raw_outcome: String::new() }
    }

    pub fn with_force(mut self, force: impl Into<String>) -> Self {
        self.force = force.into();
        self
    }

    pub fn with_raw_outcome(mut self, raw: impl Into<String>) -> Self {
        self.raw_outcome = raw.into();
        self
    }

    pub fn validate(&self, group_count: usize) -> Result<()> {
        if self.group.0 >= group_count {
            return Err(Error::domain(alloc::format!("record group {} out of range", self.group)));
        }
        if self.stopped != self.outcome.is_some() {
            return Err(Error::domain("outcome must be present exactly when the record is stopped"));
        }
        Ok(())
    }
}

/// How the criminality coordinate and bias terms are coupled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PriorKind {
    /// `C ~ N(0, 1)` held fixed; biases independent of it and of each other.
    Independent,
    /// Joint Gaussian; the data introduce `C`-bias covariance; anchored.
    Dependent,
    /// Joint Gaussian with no anchoring and no constraint on `C`.
    Free,
}

impl PriorKind {
    pub fn name(self) -> &'static str {
        match self {
            PriorKind::Independent => "independent",
            PriorKind::Dependent => "dependent",
            PriorKind::Free => "free",
        }
    }

    /// Anchoring is on by default only for the dependent prior.
    pub fn default_anchoring(self) -> bool {
        matches!(self, PriorKind::Dependent)
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the per-record `(c, b_k)` pair comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DrawMode {
    /// Fresh draw from the current state's `(beta_k, C)` marginal per record.
    PerRecord,
    /// One draw from the initial state before the first sweep, reused for
    /// every record in every sweep.
    SingleDraw,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    /// Stop-noise variance.
    pub alpha: f64,
    /// Search-noise variance.
    pub gamma: f64,
    pub prior: PriorKind,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub anchoring: bool,
    pub draw: DrawMode,
}

impl ModelConfig {
    /// Defaults: `alpha = gamma = 1`, 500 sweeps, 100 burn-in, anchoring
    /// per [`PriorKind::default_anchoring`], per-record draws.
    pub fn new(prior: PriorKind, seed: u64) -> Self {
        Self {
            alpha: 1.0,
            gamma: 1.0,
            prior,
            sweeps: 500,
            burn_in: 100,
            seed,
            anchoring: prior.default_anchoring(),
            draw: DrawMode::PerRecord,
        }
    }

    pub fn with_sweeps(mut self, sweeps: usize, burn_in: usize) -> Self {
        self.sweeps = sweeps;
        self.burn_in = burn_in;
        self
    }

    pub fn with_anchoring(mut self, on: bool) -> Self {
        self.anchoring = on;
        self
    }

    pub fn with_noise(mut self, alpha: f64, gamma: f64) -> Self {
        self.alpha = alpha;
        self.gamma = gamma;
        self
    }

    pub fn with_draw(mut self, draw: DrawMode) -> Self {
        self.draw = draw;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain("alpha must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain("gamma must be positive"));
        }
        if self.sweeps == 0 {
            return Err(Error::domain("sweeps must be positive"));
        }
        if self.sweeps <= self.burn_in {
            return Err(Error::domain("sweeps must exceed burn-in"));
        }
        Ok(())
    }
}

/// Joint Gaussian over `(beta_0, .., beta_{K-1}, C)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorState {
    pub joint: MultivariateGaussian,
    pub prior_kind: PriorKind,
    pub group_count: usize,
}

impl PosteriorState {
    /// Index of the criminality coordinate.
    pub fn c_index(&self) -> usize {
        self.group_count
    }

    pub fn criminality_mean(&self) -> f64 {
        self.joint.mean()[self.group_count]
    }

    pub fn criminality_variance(&self) -> f64 {
        self.joint.covariance()[(self.group_count, self.group_count)]
    }
}

/// Prior with mean `(mu_0..mu_{K-1}, 0)` and diagonal covariance
/// `(sigma_0..sigma_{K-1}, 1)`. Cross terms start at zero for every kind.
pub fn build_prior(
    kind: PriorKind,
    group_count: usize,
    group_means: &[f64],
    group_variances: &[f64],
) -> Result<PosteriorState> {
    if group_count == 0 {
        return Err(Error::domain("group count must be positive"));
    }
    if group_means.len() != group_count || group_variances.len() != group_count {
        return Err(Error::domain("prior means and variances must have one entry per group"));
    }
    if group_variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::domain("prior variances must be positive"));
    }
    if group_means.iter().any(|m| !m.is_finite()) {
        return Err(Error::domain("prior means must be finite"));
    }
    let mut mean = group_means.to_vec();
    mean.push(0.0);
    let mut diag = group_variances.to_vec();
    diag.push(1.0);
    let joint = MultivariateGaussian::new(mean, Matrix::diagonal(&diag))?;
    Ok(PosteriorState { joint, prior_kind: kind, group_count })
}

/// Standard prior: zero means, unit variances.
pub fn default_prior(kind: PriorKind, group_count: usize) -> Result<PosteriorState> {
    let zeros = alloc::vec![0.0; group_count];
    let ones = alloc::vec![1.0; group_count];
    build_prior(kind, group_count, &zeros, &ones)
}

/// `P(stop | C = c, beta = beta) = Phi((c + beta) / sqrt(alpha))`.
pub fn stop_probability(c: f64, beta: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain("alpha must be positive"));
    }
    Ok(phi((c + beta) / libm::sqrt(alpha)))
}

/// `P(found | C = c) = Phi(c / sqrt(gamma))`.
pub fn guilt_probability(c: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain("gamma must be positive"));
    }
    Ok(phi(c / libm::sqrt(gamma)))
}
