//! Gibbs sampler over the truncated-Gaussian latents and the joint
//! `(beta, C)` state.
//!
//! One sweep draws a `(c, b_k)` pair per record from the current state's
//! `(beta_k, C)` marginal, samples the stop latent `S` and the criminality
//! latent `T` on the half-lines fixed by the record, turns them into Gaussian
//! pseudo-observations in natural form, and adds those to the current state.
//! Precisions add `1/alpha` and `1/gamma` per record, which is the unit
//! increment at `alpha = gamma = 1`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::gaussian::{sample_truncated_normal, Sign};
use crate::model::{DrawMode, Groups, ModelConfig, PosteriorState, PriorKind, StopRecord};
use crate::mvn::{mvn_marginal, MvnSampler, NaturalGaussian};
use crate::seed::{self, StreamRng};
use crate::{Error, Result};

/// Any state mean beyond this magnitude is treated as divergence.
pub const DIVERGENCE_MEAN: f64 = 1e6;
/// Any state variance beyond this is treated as divergence.
pub const DIVERGENCE_VARIANCE: f64 = 1e12;

/// Latent stop susceptibility `s` and, for stopped records, criminality `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentPair {
    pub s: f64,
    pub t: Option<f64>,
}

/// Draws `s ~ N(c + b, alpha)` on the stop side and `t ~ N(c, gamma)` on the
/// outcome side.
pub fn sample_latents<R: Rng + ?Sized>(
    record: &StopRecord,
    c: f64,
    b: f64,
    config: &ModelConfig,
    rng: &mut R,
) -> Result<LatentPair> {
    let s = sample_truncated_normal(c + b, config.alpha, Sign::from_bool(record.stopped), rng)?;
    let t = match (record.stopped, record.outcome) {
        (true, Some(found)) => Some(sample_truncated_normal(c, config.gamma, Sign::from_bool(found), rng)?),
        (true, None) => return Err(Error::domain("stopped record is missing its outcome")),
        (false, _) => None,
    };
    Ok(LatentPair { s, t })
}

/// Natural-parameter pseudo-observations over `(beta_0, .., beta_{K-1}, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsAccumulator {
    natural: NaturalGaussian,
    group_count: usize,
    records: usize,
}

impl StatsAccumulator {
    pub fn new(group_count: usize) -> Self {
        Self { natural: NaturalGaussian::zeros(group_count + 1), group_count, records: 0 }
    }

    pub fn natural(&self) -> &NaturalGaussian {
        &self.natural
    }

    pub fn into_natural(self) -> NaturalGaussian {
        self.natural
    }

    pub fn records(&self) -> usize {
        self.records
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn clear(&mut self) {
        self.natural = NaturalGaussian::zeros(self.group_count + 1);
        self.records = 0;
    }
}

/// Adds one record's pseudo-observations.
///
/// `S` observes `beta_k + C` with variance `alpha`; `T` observes `C` with
/// variance `gamma`. Under the independent prior only the `beta_k` diagonal
/// and its precision-mean entry are touched, so `C` keeps its prior.
pub fn accumulate_stats(
    record: &StopRecord,
    latents: &LatentPair,
    config: &ModelConfig,
    stats: &mut StatsAccumulator,
) {
    let k = record.group.0;
    let c = stats.group_count;
    let w = 1.0 / config.alpha;
    let nat = &mut stats.natural;
    nat.precision[(k, k)] += w;
    nat.precision_mean[k] += w * latents.s;
    if config.prior != PriorKind::Independent {
        nat.precision[(k, c)] += w;
        nat.precision[(c, k)] += w;
        nat.precision[(c, c)] += w;
        nat.precision_mean[c] += w * latents.s;
        if let Some(t) = latents.t {
            let v = 1.0 / config.gamma;
            nat.precision[(c, c)] += v;
            nat.precision_mean[c] += v * t;
        }
    }
    stats.records += 1;
}

/// Source of per-record latents; the sampler uses random draws, tests can
/// substitute fixed values.
pub trait LatentSource {
    fn latents<R: Rng + ?Sized>(
        &mut self,
        record: &StopRecord,
        c: f64,
        b: f64,
        config: &ModelConfig,
        rng: &mut R,
    ) -> Result<LatentPair>;
}

/// Draws latents with [`sample_latents`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SampledLatents;

impl LatentSource for SampledLatents {
    fn latents<R: Rng + ?Sized>(
        &mut self,
        record: &StopRecord,
        c: f64,
        b: f64,
        config: &ModelConfig,
        rng: &mut R,
    ) -> Result<LatentPair> {
        sample_latents(record, c, b, config, rng)
    }
}

fn check_dataset(dataset: &[StopRecord], group_count: usize) -> Result<()> {
    for r in dataset {
        r.validate(group_count)?;
    }
    Ok(())
}

fn group_samplers(state: &PosteriorState) -> Result<Vec<MvnSampler>> {
    let c = state.c_index();
    (0..state.group_count)
        .map(|k| mvn_marginal(&state.joint, &[k, c])?.sampler())
        .collect()
}

/// `theta` fixes every record's `(c, b_k)` to `(theta[K], theta[k])`;
/// otherwise pairs are drawn per record from the state's marginals.
fn sweep_core<R: Rng + ?Sized, L: LatentSource>(
    state: &PosteriorState,
    dataset: &[StopRecord],
    config: &ModelConfig,
    theta: Option<&[f64]>,
    rng: &mut R,
    source: &mut L,
) -> Result<PosteriorState> {
    let kk = state.group_count;
    let samplers = if theta.is_none() { group_samplers(state)? } else { Vec::new() };
    let mut stats = StatsAccumulator::new(kk);
    let mut pair = [0.0; 2];
    for record in dataset {
        let k = record.group.0;
        let (b, c) = match theta {
            Some(th) => (th[k], th[kk]),
            None => {
                samplers[k].sample_into(rng, &mut pair);
                (pair[0], pair[1])
            }
        };
        let latents = source.latents(record, c, b, config, rng)?;
        accumulate_stats(record, &latents, config, &mut stats);
    }
    if stats.records == 0 {
        return Ok(state.clone());
    }
    let mut natural = state.joint.to_natural()?;
    natural.add_assign(stats.natural());
    let joint = natural.to_moment()?;
    Ok(PosteriorState { joint, prior_kind: state.prior_kind, group_count: kk })
}

/// One conjugate sweep. Under [`DrawMode::SingleDraw`] a single `theta` is
/// drawn from `state` and used for every record of this sweep.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &PosteriorState,
    dataset: &[StopRecord],
    config: &ModelConfig,
    rng: &mut R,
) -> Result<PosteriorState> {
    check_dataset(dataset, state.group_count)?;
    let theta = match config.draw {
        DrawMode::PerRecord => None,
        DrawMode::SingleDraw => Some(state.joint.sampler()?.sample(rng)),
    };
    gibbs_sweep_core(state, dataset, config, theta.as_deref(), rng)
}

fn gibbs_sweep_core<R: Rng + ?Sized>(
    state: &PosteriorState,
    dataset: &[StopRecord],
    config: &ModelConfig,
    theta: Option<&[f64]>,
    rng: &mut R,
) -> Result<PosteriorState> {
    sweep_core(state, dataset, config, theta, rng, &mut SampledLatents)
}

/// A sweep with caller-provided latents.
pub fn gibbs_sweep_with<R: Rng + ?Sized, L: LatentSource>(
    state: &PosteriorState,
    dataset: &[StopRecord],
    config: &ModelConfig,
    rng: &mut R,
    source: &mut L,
) -> Result<PosteriorState> {
    check_dataset(dataset, state.group_count)?;
    let theta = match config.draw {
        DrawMode::PerRecord => None,
        DrawMode::SingleDraw => Some(state.joint.sampler()?.sample(rng)),
    };
    sweep_core(state, dataset, config, theta.as_deref(), rng, source)
}

/// Re-centres every mean on `C` and divides the covariance by the
/// pre-anchor `var(C)`.
pub fn anchor(state: &PosteriorState) -> Result<PosteriorState> {
    let c = state.c_index();
    let scale = state.criminality_variance();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Conditioning { pivot: c });
    }
    let shift = state.criminality_mean();
    let mut out = state.clone();
    let (mean, cov) = out.joint.parts_mut();
    for m in mean.iter_mut() {
        *m -= shift;
    }
    mean[c] = 0.0;
    cov.scale(1.0 / scale);
    cov[(c, c)] = 1.0;
    Ok(out)
}

/// Per-sweep record of the chain.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GibbsTrace {
    pub group_count: usize,
    /// `K + 1` means per sweep, `C` last.
    pub means: Vec<Vec<f64>>,
    /// `K + 1` variances per sweep, `C` last.
    pub variances: Vec<Vec<f64>>,
    /// `cov(C, beta_k)` per sweep.
    pub cov_c_beta: Vec<Vec<f64>>,
    /// Seconds since the chain started, when a clock was supplied.
    pub wall_seconds: Vec<f64>,
}

impl GibbsTrace {
    pub fn new(group_count: usize) -> Self {
        Self { group_count, ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    fn push(&mut self, state: &PosteriorState, wall: f64) {
        let c = state.c_index();
        let cov = state.joint.covariance();
        self.means.push(state.joint.mean().to_vec());
        self.variances.push(state.joint.variances());
        self.cov_c_beta.push((0..state.group_count).map(|k| cov[(c, k)]).collect());
        self.wall_seconds.push(wall);
    }

    /// Average of recorded means and variances over sweeps `from..`.
    pub fn average_from(&self, from: usize) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.len().checked_sub(from).filter(|&n| n > 0)?;
        let avg = |rows: &[Vec<f64>]| -> Vec<f64> {
            let d = rows[0].len();
            let mut acc = alloc::vec![0.0; d];
            for row in rows {
                for (a, x) in acc.iter_mut().zip(row) {
                    *a += x;
                }
            }
            acc.iter().map(|a| a / n as f64).collect()
        };
        Some((avg(&self.means[from..]), avg(&self.variances[from..]), avg(&self.cov_c_beta[from..])))
    }
}

/// Least-squares trend of `|mean(C)|` against sweep index.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriftFit {
    pub slope: f64,
    /// Slope over its standard error; 0 when the series is constant.
    pub t_stat: f64,
}

impl GibbsTrace {
    /// Trend of the criminality mean's magnitude over sweeps `from..`.
    pub fn criminality_drift(&self, from: usize) -> Option<DriftFit> {
        let c = self.group_count;
        let ys: Vec<f64> = self.means.get(from..)?.iter().map(|m| libm::fabs(m[c])).collect();
        let n = ys.len();
        if n < 3 {
            return None;
        }
        let nf = n as f64;
        let x_mean = (nf - 1.0) / 2.0;
        let y_mean = ys.iter().sum::<f64>() / nf;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (i, y) in ys.iter().enumerate() {
            let dx = i as f64 - x_mean;
            sxx += dx * dx;
            sxy += dx * (y - y_mean);
        }
        let slope = sxy / sxx;
        let rss: f64 = ys
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let r = y - y_mean - slope * (i as f64 - x_mean);
                r * r
            })
            .sum();
        let se = libm::sqrt(rss / (nf - 2.0) / sxx);
        let t_stat = if se > 0.0 {
            slope / se
        } else if slope == 0.0 {
            0.0
        } else {
            f64::INFINITY * slope.signum()
        };
        Some(DriftFit { slope, t_stat })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupSummary {
    pub id: usize,
    pub label: String,
    pub bias_mean: f64,
    pub bias_variance: f64,
    /// Averaged `cov(C, beta_k)`.
    pub cov_c_bias: f64,
    /// 1 is the largest bias mean.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PosteriorSummary {
    /// In group-id order.
    pub groups: Vec<GroupSummary>,
    pub criminality_mean: f64,
    pub criminality_variance: f64,
    pub prior: PriorKind,
    pub anchoring: bool,
    /// Post-burn-in sweeps that were averaged.
    pub sweeps_used: usize,
}

impl PosteriorSummary {
    /// Groups sorted by rank.
    pub fn ranked(&self) -> Vec<&GroupSummary> {
        let mut v: Vec<&GroupSummary> = self.groups.iter().collect();
        v.sort_by_key(|g| g.rank);
        v
    }

    pub fn bias_means(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.bias_mean).collect()
    }

    pub fn bias_variances(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.bias_variance).collect()
    }
}

/// Ranks `1..=K` by descending value, ties by ascending index.
pub(crate) fn descending_ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut ranks = alloc::vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

fn summarise(trace: &GibbsTrace, groups: &Groups, config: &ModelConfig) -> Result<PosteriorSummary> {
    summarise_traces(core::slice::from_ref(trace), groups, config)
}

/// Pools the post-burn-in sweeps of several chains into one summary.
pub fn summarise_traces(traces: &[GibbsTrace], groups: &Groups, config: &ModelConfig) -> Result<PosteriorSummary> {
    let first = traces.first().ok_or_else(|| Error::domain("no traces to summarise"))?;
    let k = first.group_count;
    if k != groups.len() || traces.iter().any(|t| t.group_count != k) {
        return Err(Error::domain("trace dimensions do not match the groups"));
    }
    let mut pooled = GibbsTrace::new(k);
    for t in traces {
        let from = config.burn_in.min(t.len());
        pooled.means.extend_from_slice(&t.means[from..]);
        pooled.variances.extend_from_slice(&t.variances[from..]);
        pooled.cov_c_beta.extend_from_slice(&t.cov_c_beta[from..]);
    }
    let sweeps_used = pooled.len();
    let (means, vars, covs) = pooled
        .average_from(0)
        .ok_or_else(|| Error::domain("no post-burn-in sweeps to summarise"))?;
    let ranks = descending_ranks(&means[..k]);
    let groups = groups
        .iter()
        .enumerate()
        .map(|(i, g)| GroupSummary {
            id: i,
            label: g.label.clone(),
            bias_mean: means[i],
            bias_variance: vars[i],
            cov_c_bias: covs[i],
            rank: ranks[i],
        })
        .collect();
    Ok(PosteriorSummary {
        groups,
        criminality_mean: means[k],
        criminality_variance: vars[k],
        prior: config.prior,
        anchoring: config.anchoring,
        sweeps_used,
    })
}

fn check_state(state: &PosteriorState, sweep: usize) -> Result<()> {
    let diverged = |reason: String| Err(Error::Diverged { sweep, reason });
    for (i, &m) in state.joint.mean().iter().enumerate() {
        if !m.is_finite() || libm::fabs(m) > DIVERGENCE_MEAN {
            return diverged(alloc::format!("mean {i} = {m:e}"));
        }
    }
    for (i, v) in state.joint.variances().into_iter().enumerate() {
        if !v.is_finite() || v > DIVERGENCE_VARIANCE {
            return diverged(alloc::format!("variance {i} = {v:e}"));
        }
        if v <= 0.0 {
            return Err(Error::SweepConditioning { sweep, pivot: i });
        }
    }
    if !state.joint.covariance().is_finite() {
        return diverged(String::from("non-finite covariance"));
    }
    Ok(())
}

fn at_sweep(e: Error, sweep: usize) -> Error {
    match e {
        Error::Conditioning { pivot } => Error::SweepConditioning { sweep, pivot },
        other => other,
    }
}

/// A running chain. Useful when the caller wants the trace of a chain that
/// stopped early.
#[derive(Debug)]
pub struct GibbsChain<'a> {
    dataset: &'a [StopRecord],
    config: ModelConfig,
    state: PosteriorState,
    theta: Option<Vec<f64>>,
    rng: StreamRng,
    trace: GibbsTrace,
}

impl<'a> GibbsChain<'a> {
    /// Starts from `prior`. The chain's stream is derived from `config.seed`.
    pub fn new(prior: PosteriorState, dataset: &'a [StopRecord], config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::domain("dataset is empty"));
        }
        if prior.prior_kind != config.prior {
            return Err(Error::domain("prior state kind does not match the configuration"));
        }
        check_dataset(dataset, prior.group_count)?;
        let mut rng = seed::stream(config.seed, "gibbs", 0);
        let theta = match config.draw {
            DrawMode::PerRecord => None,
            DrawMode::SingleDraw => Some(prior.joint.sampler()?.sample(&mut rng)),
        };
        Ok(Self {
            dataset,
            config: config.clone(),
            trace: GibbsTrace::new(prior.group_count),
            state: prior,
            theta,
            rng,
        })
    }

    pub fn state(&self) -> &PosteriorState {
        &self.state
    }

    pub fn trace(&self) -> &GibbsTrace {
        &self.trace
    }

    pub fn into_trace(self) -> GibbsTrace {
        self.trace
    }

    pub fn sweeps_done(&self) -> usize {
        self.trace.len()
    }

    pub fn is_finished(&self) -> bool {
        self.sweeps_done() >= self.config.sweeps
    }

    /// Runs one sweep (plus anchoring when configured) and records it.
    pub fn step(&mut self, wall_seconds: f64) -> Result<&PosteriorState> {
        let sweep = self.sweeps_done();
        let next = gibbs_sweep_core(&self.state, self.dataset, &self.config, self.theta.as_deref(), &mut self.rng)
            .map_err(|e| at_sweep(e, sweep))?;
        check_state(&next, sweep)?;
        let next = if self.config.anchoring {
            anchor(&next).map_err(|e| at_sweep(e, sweep))?
        } else {
            next
        };
        check_state(&next, sweep)?;
        self.trace.push(&next, wall_seconds);
        self.state = next;
        Ok(&self.state)
    }

    pub fn summary(&self, groups: &Groups) -> Result<PosteriorSummary> {
        summarise(&self.trace, groups, &self.config)
    }
}

/// Runs `config.sweeps` sweeps from the default prior (zero means, unit
/// variances). Deterministic in `config.seed`.
pub fn run_gibbs(
    dataset: &[StopRecord],
    groups: &Groups,
    config: &ModelConfig,
) -> Result<(PosteriorSummary, GibbsTrace)> {
    let prior = crate::model::default_prior(config.prior, groups.len())?;
    run_gibbs_from(prior, dataset, groups, config, None)
}

/// As [`run_gibbs`] from an explicit prior; `clock` (seconds) fills the
/// trace's wall-time column when given.
pub fn run_gibbs_from(
    prior: PosteriorState,
    dataset: &[StopRecord],
    groups: &Groups,
    config: &ModelConfig,
    clock: Option<&dyn Fn() -> f64>,
) -> Result<(PosteriorSummary, GibbsTrace)> {
    if prior.group_count != groups.len() {
        return Err(Error::domain("prior dimension does not match the group count"));
    }
    let mut chain = GibbsChain::new(prior, dataset, config)?;
    let start = clock.map_or(0.0, |f| f());
    while !chain.is_finished() {
        let now = clock.map_or(0.0, |f| f() - start);
        chain.step(now)?;
    }
    let summary = chain.summary(groups)?;
    Ok((summary, chain.into_trace()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{default_prior, GroupId};
    use crate::mvn::MultivariateGaussian;
    use rand::SeedableRng;

    fn cfg(prior: PriorKind) -> ModelConfig {
        ModelConfig::new(prior, 11).with_sweeps(20, 5)
    }

    fn small_dataset() -> Vec<StopRecord> {
        let mut v = Vec::new();
        for i in 0..40 {
            v.push(StopRecord::stopped(GroupId(i % 2), i % 3 == 0));
        }
        v
    }

    #[test]
    fn unit_precision_increment() {
        let config = cfg(PriorKind::Dependent);
        let mut stats = StatsAccumulator::new(2);
        let r = StopRecord::stopped(GroupId(1), true);
        accumulate_stats(&r, &LatentPair { s: 0.7, t: Some(0.3) }, &config, &mut stats);
        let p = &stats.natural().precision;
        assert_eq!(p[(1, 1)], 1.0);
        assert_eq!(p[(1, 2)], 1.0);
        assert_eq!(p[(2, 2)], 2.0);
        assert_eq!(p[(0, 0)], 0.0);
        assert_eq!(stats.natural().precision_mean, [0.0, 0.7, 1.0]);
    }

    #[test]
    fn accumulation_is_additive() {
        let config = cfg(PriorKind::Free);
        let r = StopRecord::stopped(GroupId(0), false);
        let l = LatentPair { s: 0.25, t: Some(-1.5) };
        let mut one = StatsAccumulator::new(3);
        accumulate_stats(&r, &l, &config, &mut one);
        let mut two = StatsAccumulator::new(3);
        accumulate_stats(&r, &l, &config, &mut two);
        accumulate_stats(&r, &l, &config, &mut two);
        let mut doubled = one.natural().clone();
        doubled.add_assign(one.natural());
        assert_eq!(&doubled, two.natural());
        assert_eq!(StatsAccumulator::new(3).natural(), &NaturalGaussian::zeros(4));
    }

    #[test]
    fn independent_drops_criminality_terms() {
        let config = cfg(PriorKind::Independent);
        let mut stats = StatsAccumulator::new(2);
        accumulate_stats(&StopRecord::stopped(GroupId(0), true), &LatentPair { s: 1.0, t: Some(1.0) }, &config, &mut stats);
        let p = &stats.natural().precision;
        assert_eq!(p[(0, 0)], 1.0);
        assert_eq!((p[(0, 2)], p[(2, 0)], p[(2, 2)]), (0.0, 0.0, 0.0));
        assert_eq!(stats.natural().precision_mean[2], 0.0);
    }

    #[test]
    fn latent_signs() {
        let mut rng = StreamRng::seed_from_u64(3);
        let config = cfg(PriorKind::Dependent);
        for i in 0..2000 {
            let r = StopRecord::stopped(GroupId(0), i % 2 == 0);
            let l = sample_latents(&r, 0.3, -0.2, &config, &mut rng).unwrap();
            assert!(l.s > 0.0);
            let t = l.t.unwrap();
            assert_eq!(t > 0.0, i % 2 == 0);
        }
        let l = sample_latents(&StopRecord::not_stopped(GroupId(0)), 0.0, 0.0, &config, &mut rng).unwrap();
        assert!(l.s < 0.0 && l.t.is_none());
    }

    #[test]
    fn empty_dataset_leaves_state() {
        let state = default_prior(PriorKind::Dependent, 3).unwrap();
        let mut rng = StreamRng::seed_from_u64(1);
        let next = gibbs_sweep(&state, &[], &cfg(PriorKind::Dependent), &mut rng).unwrap();
        assert_eq!(next, state);
    }

    #[test]
    fn independent_keeps_criminality_standard() {
        let data = small_dataset();
        let mut state = default_prior(PriorKind::Independent, 2).unwrap();
        let config = cfg(PriorKind::Independent);
        let mut rng = StreamRng::seed_from_u64(5);
        for _ in 0..10 {
            state = gibbs_sweep(&state, &data, &config, &mut rng).unwrap();
            assert_eq!(state.criminality_mean(), 0.0);
            assert_eq!(state.criminality_variance(), 1.0);
            let cov = state.joint.covariance();
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert_eq!(cov[(i, j)].to_bits(), 0f64.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn anchor_examples() {
        let s = PosteriorState {
            joint: MultivariateGaussian::new(alloc::vec![1.0, 2.0, 1.0], Matrix::diagonal(&[4.0, 4.0, 4.0])).unwrap(),
            prior_kind: PriorKind::Dependent,
            group_count: 2,
        };
        let a = anchor(&s).unwrap();
        assert_eq!(a.joint.mean(), &[0.0, 1.0, 0.0]);
        assert_eq!(a.joint.covariance(), &Matrix::identity(3));
        let fixed = default_prior(PriorKind::Dependent, 2).unwrap();
        assert_eq!(anchor(&fixed).unwrap(), fixed);
    }

    #[test]
    fn deterministic_runs() {
        let data = small_dataset();
        let groups = Groups::new(["a", "b"]).unwrap();
        let config = cfg(PriorKind::Dependent);
        let (s1, t1) = run_gibbs(&data, &groups, &config).unwrap();
        let (s2, t2) = run_gibbs(&data, &groups, &config).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(s1, s2);
        assert_eq!(t1.len(), 20);
        assert_eq!(s1.sweeps_used, 15);
        let mut ranks: Vec<usize> = s1.groups.iter().map(|g| g.rank).collect();
        ranks.sort();
        assert_eq!(ranks, [1, 2]);
    }

    #[test]
    fn anchored_chain_has_zero_criminality_mean() {
        let data = small_dataset();
        let groups = Groups::new(["a", "b"]).unwrap();
        let (_, trace) = run_gibbs(&data, &groups, &cfg(PriorKind::Dependent)).unwrap();
        assert!(trace.means.iter().all(|m| m[2] == 0.0));
        assert!(trace.variances.iter().all(|v| v.iter().all(|&x| x > 0.0)));
    }

    #[test]
    fn rejects_bad_inputs() {
        let groups = Groups::new(["a"]).unwrap();
        assert!(run_gibbs(&[], &groups, &cfg(PriorKind::Dependent)).is_err());
        let bad = [StopRecord::stopped(GroupId(3), true)];
        assert!(run_gibbs(&bad, &groups, &cfg(PriorKind::Dependent)).is_err());
    }

    #[test]
    fn tie_ranks_by_index() {
        assert_eq!(descending_ranks(&[1.0, 1.0, 2.0]), [2, 3, 1]);
    }
}
