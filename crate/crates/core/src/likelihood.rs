//! Per-record likelihood, its quadrature cross-check, and held-out scoring.

use crate::gaussian::{phi, std_normal_pdf};
use crate::inference::PosteriorSummary;
use crate::model::{guilt_probability, StopRecord};
use crate::quadrature::adaptive_simpson;
use crate::{Error, Result};

/// Integration half-width in standard deviations for the oracle.
const ORACLE_SPAN: f64 = 12.0;
const ORACLE_TOL: f64 = 1e-10;
const ORACLE_DEPTH: u32 = 40;

/// One branch of the per-record likelihood: `P(stopped, outcome = x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeLikelihood {
    pub x: bool,
    pub value: f64,
}

impl OutcomeLikelihood {
    pub fn at(c: f64, beta: f64, x: bool) -> Self {
        Self { x, value: stop_search_likelihood(c, beta, x) }
    }

    /// Both branches, guilty first.
    pub fn branches(c: f64, beta: f64) -> [Self; 2] {
        [Self::at(c, beta, true), Self::at(c, beta, false)]
    }
}

/// `P(stopped, outcome = x | C = c, beta)` at unit noise:
/// `Phi(c) Phi(c + beta)` for `x`, `Phi(-c) Phi(c + beta)` otherwise.
///
/// The two branches sum to the stop probability `Phi(c + beta)`.
pub fn stop_search_likelihood(c: f64, beta: f64, x: bool) -> f64 {
    let stop = phi(c + beta);
    if x {
        phi(c) * stop
    } else {
        phi(-c) * stop
    }
}

/// The same quantity by direct 2D integration over the latents `S` and `T`,
/// with the stop gate `H(S)` and the outcome gate `x = H(T)`.
pub fn likelihood_oracle(c: f64, beta: f64, x: bool) -> Result<f64> {
    if !(c.is_finite() && beta.is_finite()) {
        return Err(Error::domain("likelihood arguments must be finite"));
    }
    let s_mean = c + beta;
    let s_hi = s_mean.max(0.0) + ORACLE_SPAN;
    let (t_lo, t_hi) = if x { (0.0, c.max(0.0) + ORACLE_SPAN) } else { (c.min(0.0) - ORACLE_SPAN, 0.0) };
    let mut failure = None;
    let outer = adaptive_simpson(
        |s| {
            let inner = adaptive_simpson(|t| std_normal_pdf(t - c), t_lo, t_hi, ORACLE_TOL, ORACLE_DEPTH);
            match inner {
                Ok(v) => std_normal_pdf(s - s_mean) * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        s_hi,
        ORACLE_TOL,
        ORACLE_DEPTH,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}

/// How held-out records are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoringRule {
    /// Fraction of outcomes predicted correctly, guilty when the predicted
    /// probability is at least 0.5.
    #[default]
    Accuracy,
    /// Mean predicted probability of the observed outcome.
    PredictiveLikelihood,
}

/// `phi(z) / Phi(z)` without underflow in the far left tail.
fn inverse_mills(z: f64) -> f64 {
    if z > -30.0 {
        std_normal_pdf(z) / phi(z)
    } else {
        let w = -z;
        w + 1.0 / w - 2.0 / (w * w * w)
    }
}

/// Criminality mean among stopped members of group `k`:
/// `E[C | C + beta_k + N(0, alpha) > 0]` under the summary's Gaussian.
pub fn stopped_criminality_mean(posterior: &PosteriorSummary, k: usize, alpha: f64) -> Result<f64> {
    let g = posterior
        .groups
        .get(k)
        .ok_or_else(|| Error::domain(alloc::format!("group {k} is not in the summary")))?;
    let var_y = posterior.criminality_variance + g.bias_variance + 2.0 * g.cov_c_bias + alpha;
    if !(var_y > 0.0 && var_y.is_finite()) {
        return Err(Error::domain("summary implies a non-positive stop variance"));
    }
    let sd_y = libm::sqrt(var_y);
    let mean_y = posterior.criminality_mean + g.bias_mean;
    let cov_cy = posterior.criminality_variance + g.cov_c_bias;
    Ok(posterior.criminality_mean + cov_cy / sd_y * inverse_mills(mean_y / sd_y))
}

/// Scores `test` by accuracy.
pub fn predictive_score(posterior: &PosteriorSummary, test: &[StopRecord], alpha: f64, gamma: f64) -> Result<f64> {
    predictive_score_with(posterior, test, alpha, gamma, ScoringRule::Accuracy)
}

/// Scores `test` under `rule`. Each record's guilt probability is
/// `guilt_probability(m_k, gamma)` with `m_k` from
/// [`stopped_criminality_mean`].
pub fn predictive_score_with(
    posterior: &PosteriorSummary,
    test: &[StopRecord],
    alpha: f64,
    gamma: f64,
    rule: ScoringRule,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::domain("test set is empty"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain("alpha must be positive"));
    }
    let probs = (0..posterior.groups.len())
        .map(|k| guilt_probability(stopped_criminality_mean(posterior, k, alpha)?, gamma))
        .collect::<Result<alloc::vec::Vec<f64>>>()?;
    let mut total = 0.0;
    for r in test {
        let found = match (r.stopped, r.outcome) {
            (true, Some(found)) => found,
            _ => return Err(Error::domain("test records must be stopped with an outcome")),
        };
        let p = *probs
            .get(r.group.0)
            .ok_or_else(|| Error::domain(alloc::format!("test record group {} is not in the summary", r.group)))?;
        total += match rule {
            ScoringRule::Accuracy => f64::from(u8::from((p >= 0.5) == found)),
            ScoringRule::PredictiveLikelihood => {
                if found {
                    p
                } else {
                    1.0 - p
                }
            }
        };
    }
    Ok(total / test.len() as f64)
}
