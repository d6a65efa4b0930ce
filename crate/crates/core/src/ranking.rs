//! TrueSkill-style baseline: every group plays a common "Criminality"
//! player once per stop, losing when the search found something.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::gaussian::{sample_truncated_normal, Gaussian1D, Sign};
use crate::linalg::Matrix;
use crate::model::{Groups, StopRecord};
use crate::seed;
use crate::{Error, Result};

/// Id of the common player.
pub const CRIMINALITY: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Player {
    pub id: usize,
    pub label: String,
}

/// Player list for `groups`: Criminality first, then group `k` as `k + 1`.
pub fn players_for(groups: &Groups) -> Vec<Player> {
    let mut v = alloc::vec![Player { id: CRIMINALITY, label: String::from("Criminality") }];
    v.extend(groups.iter().map(|g| Player { id: g.id.0 + 1, label: g.label.clone() }));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub winner: usize,
    pub loser: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SkillState {
    pub players: Vec<Player>,
    pub skills: Vec<Gaussian1D>,
}

/// One match per stopped record, in order. A positive outcome is a win for
/// Criminality.
pub fn matches_from_dataset(dataset: &[StopRecord]) -> Result<Vec<Match>> {
    dataset
        .iter()
        .map(|r| match (r.stopped, r.outcome) {
            (true, Some(true)) => Ok(Match { winner: CRIMINALITY, loser: r.group.0 + 1 }),
            (true, Some(false)) => Ok(Match { winner: r.group.0 + 1, loser: CRIMINALITY }),
            _ => Err(Error::domain("ranking needs stopped records with outcomes")),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrueSkillConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Per-player performance noise variance.
    pub performance_variance: f64,
    /// Shift all means so Criminality sits at zero.
    pub anchor: bool,
}

impl TrueSkillConfig {
    /// 20% burn-in, unit performance noise, no anchoring.
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self { iterations, burn_in: iterations / 5, seed, performance_variance: 1.0, anchor: false }
    }
}

/// Batch Gibbs over skills `w ~ N(0, I)` and per-match performance
/// differences `d ~ N(w_win - w_lose, 2 * performance_variance)` truncated
/// to `d > 0`. Returns post-burn-in posterior means and variances per player.
pub fn trueskill_gibbs(matches: &[Match], players: &[Player], config: &TrueSkillConfig) -> Result<SkillState> {
    let n = players.len();
    if matches.is_empty() {
        return Err(Error::domain("no matches to rank"));
    }
    if players.iter().enumerate().any(|(i, p)| p.id != i) {
        return Err(Error::domain("player ids must be dense and in order"));
    }
    if config.iterations == 0 || config.burn_in >= config.iterations {
        return Err(Error::domain("iterations must exceed burn-in"));
    }
    if !(config.performance_variance > 0.0 && config.performance_variance.is_finite()) {
        return Err(Error::domain("performance variance must be positive"));
    }
    for m in matches {
        if m.winner == m.loser || m.winner >= n || m.loser >= n {
            return Err(Error::domain("match players are invalid"));
        }
    }
    let noise = 2.0 * config.performance_variance;
    // Precision is fixed by the schedule, so it is factored once.
    let mut precision = Matrix::identity(n);
    for m in matches {
        let (a, b) = (m.winner, m.loser);
        precision[(a, a)] += 1.0 / noise;
        precision[(b, b)] += 1.0 / noise;
        precision[(a, b)] -= 1.0 / noise;
        precision[(b, a)] -= 1.0 / noise;
    }
    let chol = precision.cholesky()?;
    let mut rng = seed::stream(config.seed, "trueskill", 0);
    let mut w = alloc::vec![0.0; n];
    let mut sum = alloc::vec![0.0; n];
    let mut sum_sq = alloc::vec![0.0; n];
    let mut h = alloc::vec![0.0; n];
    let mut z = alloc::vec![0.0; n];
    let kept = config.iterations - config.burn_in;
    for it in 0..config.iterations {
        h.iter_mut().for_each(|x| *x = 0.0);
        for m in matches {
            let d = sample_truncated_normal(w[m.winner] - w[m.loser], noise, Sign::Positive, &mut rng)?;
            h[m.winner] += d / noise;
            h[m.loser] -= d / noise;
        }
        let mean = chol.solve(&h);
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        // With P = L L^T, L^{-T} z has covariance P^{-1}.
        let offset = upper_solve(chol.factor(), &z);
        for i in 0..n {
            w[i] = mean[i] + offset[i];
            if !w[i].is_finite() || libm::fabs(w[i]) > crate::inference::DIVERGENCE_MEAN {
                return Err(Error::Diverged { sweep: it, reason: alloc::format!("skill {i} = {:e}", w[i]) });
            }
        }
        if it >= config.burn_in {
            for i in 0..n {
                sum[i] += mean[i];
                sum_sq[i] += mean[i] * mean[i];
            }
        }
    }
    // Rao-Blackwellised summaries: the conditional covariance is the same at
    // every iteration, so only the conditional means carry Monte Carlo noise.
    let cond_var = chol.inverse().diag();
    let shift = if config.anchor { sum[CRIMINALITY] / kept as f64 } else { 0.0 };
    let skills = (0..n)
        .map(|i| {
            let m = sum[i] / kept as f64;
            let spread = if kept > 1 { ((sum_sq[i] - kept as f64 * m * m) / (kept - 1) as f64).max(0.0) } else { 0.0 };
            Gaussian1D { mean: m - shift, variance: cond_var[i] + spread }
        })
        .collect();
    Ok(SkillState { players: players.to_vec(), skills })
}

/// Solves `L^T x = z` for lower-triangular `L`.
fn upper_solve(l: &Matrix, z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut x = z.to_vec();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            x[i] -= l[(k, i)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Players by descending mean skill, ties by ascending id.
pub fn rank(skills: &SkillState) -> Vec<(Player, Gaussian1D)> {
    let means: Vec<f64> = skills.skills.iter().map(|g| g.mean).collect();
    let ranks = crate::inference::descending_ranks(&means);
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by_key(|&i| ranks[i]);
    order.into_iter().map(|i| (skills.players[i].clone(), skills.skills[i])).collect()
}
