//! Command-line driver.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latent_bias_core::dataset::split;
use latent_bias_core::inference::{summarise_traces, GibbsChain};
use latent_bias_core::likelihood::predictive_score_with;
use latent_bias_core::model::default_prior;
use latent_bias_core::ranking::{players_for, TrueSkillConfig};
use latent_bias_core::seed::{derive_seed, stream};
use latent_bias_core::{
    matches_from_dataset, rank, trueskill_gibbs, DrawMode, Error as CoreError, GibbsTrace, Groups, ModelConfig,
    PriorKind, ScoringRule, StopRecord,
};
use serde_json::json;

use crate::data::{parse_records, read_canonical_file, write_canonical, MappingConfig};
use crate::error::AppError;
use crate::formats;
use crate::manifest::{write_file, Divergence, RunManifest};
use crate::presets::Preset;

#[derive(Debug, Parser)]
#[command(name = "latent-bias", version, about = "Latent group-bias inference for stop-and-search records")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a raw CSV export into the canonical dataset format.
    Ingest(IngestArgs),
    /// Fit the bias model with the Gibbs sampler.
    Fit(FitArgs),
    /// TrueSkill-style baseline ranking.
    Rank(RankArgs),
    /// Score a fitted summary on held-out records.
    Score(ScoreArgs),
    /// Plot a trace as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Guilty,
    Charges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Independent,
    Dependent,
    Free,
}

impl From<PriorArg> for PriorKind {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Independent => PriorKind::Independent,
            PriorArg::Dependent => PriorKind::Dependent,
            PriorArg::Free => PriorKind::Free,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DrawArg {
    PerRecord,
    SingleDraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Accuracy,
    Likelihood,
}

/// Where records come from and which dataset variant to build.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset path. Canonical format unless `--mapping` is given.
    #[arg(long)]
    pub input: PathBuf,
    /// Treat the input as a raw export and map it with this file
    /// (`builtin` for the shipped mapping).
    #[arg(long)]
    pub mapping: Option<String>,
    /// Outcome coarsening for raw input.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Mapping file; the shipped mapping when absent.
    #[arg(long)]
    pub mapping: Option<String>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Needed by presets that subsample.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Canonical dataset path; `<out-dir>/dataset.csv` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "dependent")]
    pub prior: PriorArg,
    #[arg(long, default_value_t = 500)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,
    #[arg(long)]
    pub seed: u64,
    /// Defaults to on for the dependent prior, off otherwise.
    #[arg(long, value_enum)]
    pub anchoring: Option<Switch>,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, value_enum, default_value = "per-record")]
    pub draw: DrawArg,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Hold out this fraction (stratified by group) and write train.csv and
    /// test.csv next to the summary.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    /// Defaults to a fifth of the iterations.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Shift skills so Criminality has mean zero.
    #[arg(long)]
    pub anchor: bool,
    /// Ranking table path; `<out-dir>/ranking.csv` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// `summary.json` from `fit`, or the summary CSV.
    #[arg(long)]
    pub summary: PathBuf,
    /// Canonical test dataset.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "accuracy")]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// SVG path; `<out-dir>/trace.svg` by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Comma-separated series labels.
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Rank(a) => cmd_rank(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Plot(a) => cmd_plot(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_mapping(source: Option<&str>, manifest: &mut RunManifest) -> Result<MappingConfig, AppError> {
    match source {
        None | Some("builtin") => Ok(MappingConfig::builtin()),
        Some(path) => {
            let path = Path::new(path);
            manifest.add_input(path)?;
            MappingConfig::load(path)
        }
    }
}

fn charges_scheme(scheme: Option<SchemeArg>, preset: Option<Preset>) -> Result<bool, AppError> {
    let from_preset = preset.map(Preset::uses_charges_scheme);
    match (scheme, from_preset) {
        (Some(SchemeArg::Guilty), Some(true)) => {
            Err(AppError::Config("--scheme guilty conflicts with --preset charges".into()))
        }
        (Some(s), _) => Ok(s == SchemeArg::Charges),
        (None, p) => Ok(p.unwrap_or(false)),
    }
}

fn preset_seed(preset: Option<Preset>, seed: Option<u64>) -> Result<u64, AppError> {
    match (preset, seed) {
        (Some(Preset::Augmented), None) => Err(AppError::Config("--preset augmented needs --seed".into())),
        (_, s) => Ok(s.unwrap_or(0)),
    }
}

/// Loads records (raw or canonical), then applies the preset.
fn load_data(data: &DataArgs, seed: u64, manifest: &mut RunManifest) -> Result<(Vec<StopRecord>, Groups), AppError> {
    manifest.add_input(&data.input)?;
    let charges = charges_scheme(data.scheme, data.preset)?;
    let (records, groups) = match data.mapping.as_deref() {
        Some(m) => {
            let mapping = load_mapping(Some(m), manifest)?;
            let file = std::fs::File::open(&data.input).map_err(|e| AppError::io(&data.input, e))?;
            let (records, report) = parse_records(std::io::BufReader::new(file), &mapping, &mapping.scheme(charges))?;
            eprint!("{}", report.render());
            (records, mapping.ethnicity.groups.clone())
        }
        None => {
            if data.scheme.is_some() {
                return Err(AppError::Config("--scheme applies to raw input; add --mapping".into()));
            }
            read_canonical_file(&data.input, None)?
        }
    };
    let records = match data.preset {
        Some(p) => p.apply(records, &groups, seed)?,
        None => records,
    };
    Ok((records, groups))
}

fn finish(mut manifest: RunManifest, out_dir: &Path, start: Instant, code: u8) -> Result<u8, AppError> {
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    manifest.exit_code = code;
    manifest.write(out_dir)?;
    Ok(code)
}

fn cmd_ingest(a: &IngestArgs) -> Result<u8, AppError> {
    let start = Instant::now();
    let charges = charges_scheme(a.scheme, a.preset)?;
    let seed = preset_seed(a.preset, a.seed)?;
    let mut manifest = RunManifest::new(
        "ingest",
        json!({
            "scheme": if charges { "charges" } else { "guilty" },
            "preset": a.preset.map(|p| format!("{p:?}")),
            "mapping": a.mapping,
            "seed": a.seed,
        }),
    );
    manifest.add_input(&a.input)?;
    let mapping = load_mapping(a.mapping.as_deref(), &mut manifest)?;
    let file = std::fs::File::open(&a.input).map_err(|e| AppError::io(&a.input, e))?;
    let (records, report) = parse_records(std::io::BufReader::new(file), &mapping, &mapping.scheme(charges))?;
    let groups = &mapping.ethnicity.groups;
    let records = match a.preset {
        Some(p) => p.apply(records, groups, seed)?,
        None => records,
    };
    let output = a.output.clone().unwrap_or_else(|| a.out_dir.join("dataset.csv"));
    let mut buf = Vec::new();
    write_canonical(&mut buf, &records, groups)?;
    write_file(&output, &buf)?;
    manifest.add_output(&output);
    let text = report.render();
    let report_path = a.out_dir.join("ingest_report.txt");
    write_file(&report_path, text.as_bytes())?;
    manifest.add_output(&report_path);
    print!("{text}");
    if a.preset.is_some() {
        println!("after preset: {} records", records.len());
    }
    finish(manifest, &a.out_dir, start, 0)
}

fn fit_config(a: &FitArgs) -> Result<ModelConfig, AppError> {
    let prior: PriorKind = a.prior.into();
    let anchoring = match a.anchoring {
        Some(s) => s == Switch::On,
        None => prior.default_anchoring(),
    };
    let draw = match a.draw {
        DrawArg::PerRecord => DrawMode::PerRecord,
        DrawArg::SingleDraw => DrawMode::SingleDraw,
    };
    let config = ModelConfig::new(prior, a.seed)
        .with_sweeps(a.sweeps, a.burn_in)
        .with_anchoring(anchoring)
        .with_noise(a.alpha, a.gamma)
        .with_draw(draw);
    config.validate().map_err(|e| AppError::Config(e.to_string()))?;
    if a.chains == 0 {
        return Err(AppError::Config("--chains must be at least 1".into()));
    }
    Ok(config)
}

/// Outcome of one chain: its trace and the error that stopped it, if any.
type ChainResult = (GibbsTrace, Option<CoreError>);

fn run_chain(records: &[StopRecord], groups: &Groups, config: &ModelConfig) -> Result<ChainResult, AppError> {
    let prior = default_prior(config.prior, groups.len())?;
    let mut chain = GibbsChain::new(prior, records, config)?;
    let start = Instant::now();
    while !chain.is_finished() {
        if let Err(e) = chain.step(start.elapsed().as_secs_f64()) {
            if e.is_divergence() {
                return Ok((chain.into_trace(), Some(e)));
            }
            return Err(e.into());
        }
    }
    Ok((chain.into_trace(), None))
}

fn cmd_fit(a: &FitArgs) -> Result<u8, AppError> {
    let start = Instant::now();
    let config = fit_config(a)?;
    let mut manifest = RunManifest::new(
        "fit",
        json!({
            "prior": config.prior.name(),
            "alpha": config.alpha,
            "gamma": config.gamma,
            "sweeps": config.sweeps,
            "burn_in": config.burn_in,
            "seed": config.seed,
            "anchoring": config.anchoring,
            "draw": format!("{:?}", config.draw),
            "chains": a.chains,
            "preset": a.data.preset.map(|p| format!("{p:?}")),
            "mapping": a.data.mapping,
            "test_fraction": a.test_fraction,
        }),
    );
    let (records, groups) = load_data(&a.data, a.seed, &mut manifest)?;
    let records = match a.test_fraction {
        Some(f) => {
            let (train, test) = split(&records, f, &mut stream(a.seed, "split", 0))?;
            for (name, part) in [("train.csv", &train), ("test.csv", &test)] {
                let mut buf = Vec::new();
                write_canonical(&mut buf, part, &groups)?;
                let p = a.out_dir.join(name);
                write_file(&p, &buf)?;
                manifest.add_output(&p);
            }
            train
        }
        None => records,
    };
    if records.is_empty() {
        return Err(AppError::Input("dataset is empty".into()));
    }

    let configs: Vec<ModelConfig> = (0..a.chains)
        .map(|i| {
            let mut c = config.clone();
            if a.chains > 1 {
                c.seed = derive_seed(config.seed, "chain", i as u64);
            }
            c
        })
        .collect();
    let sampling = Instant::now();
    let results: Vec<Result<ChainResult, AppError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(|| run_chain(&records, &groups, c))).collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let elapsed = sampling.elapsed().as_secs_f64();
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut divergence = Divergence::default();
    for (i, (trace, err)) in results.iter().enumerate() {
        let name = if a.chains == 1 { "trace.csv".to_string() } else { format!("trace_chain_{i}.csv") };
        let mut buf = Vec::new();
        formats::write_trace(&mut buf, trace)?;
        let p = a.out_dir.join(name);
        write_file(&p, &buf)?;
        manifest.add_output(&p);
        if let Some(fit) = trace.criminality_drift(config.burn_in) {
            divergence.drift_slope.push(fit.slope);
            divergence.drift_t_stat.push(fit.t_stat);
            if !config.anchoring && fit.slope > 0.0 && fit.t_stat > 3.0 {
                divergence.drift_detected = true;
            }
        }
        if let (Some(e), false) = (err, divergence.diverged) {
            divergence.diverged = true;
            if let CoreError::Diverged { sweep, .. } | CoreError::SweepConditioning { sweep, .. } = e {
                divergence.sweep = Some(*sweep);
            }
            divergence.reason = Some(e.to_string());
        }
    }
    let total_sweeps: usize = results.iter().map(|(t, _)| t.len()).sum();
    manifest.sweeps_per_second = Some(total_sweeps as f64 / elapsed.max(1e-9) / a.chains as f64);
    let diverged = divergence.diverged;
    let reason = divergence.reason.clone();
    manifest.divergence = Some(divergence);
    if diverged {
        eprintln!("error: {}", reason.unwrap_or_default());
        return finish(manifest, &a.out_dir, start, 3);
    }

    let traces: Vec<GibbsTrace> = results.into_iter().map(|(t, _)| t).collect();
    let summary = summarise_traces(&traces, &groups, &config)?;
    let mut buf = Vec::new();
    formats::write_summary_csv(&mut buf, &summary)?;
    let p = a.out_dir.join("summary.csv");
    write_file(&p, &buf)?;
    manifest.add_output(&p);
    let p = a.out_dir.join("summary.json");
    write_file(&p, formats::summary_json(&summary).as_bytes())?;
    manifest.add_output(&p);
    print!("{}", String::from_utf8(buf).expect("csv is utf-8"));
    if manifest.divergence.as_ref().is_some_and(|d| d.drift_detected) {
        eprintln!("warning: criminality mean drifts upward; consider --anchoring on");
    }
    finish(manifest, &a.out_dir, start, 0)
}

fn cmd_rank(a: &RankArgs) -> Result<u8, AppError> {
    let start = Instant::now();
    let mut config = TrueSkillConfig::new(a.iterations, a.seed);
    if let Some(b) = a.burn_in {
        config.burn_in = b;
    }
    config.anchor = a.anchor;
    if config.iterations == 0 || config.burn_in >= config.iterations {
        return Err(AppError::Config("--iterations must exceed --burn-in".into()));
    }
    let mut manifest = RunManifest::new(
        "rank",
        json!({
            "iterations": config.iterations,
            "burn_in": config.burn_in,
            "seed": config.seed,
            "anchor": config.anchor,
            "performance_variance": config.performance_variance,
            "preset": a.data.preset.map(|p| format!("{p:?}")),
            "mapping": a.data.mapping,
        }),
    );
    let (records, groups) = load_data(&a.data, a.seed, &mut manifest)?;
    if records.is_empty() {
        return Err(AppError::Input("dataset is empty".into()));
    }
    let matches = matches_from_dataset(&records)?;
    let skills = trueskill_gibbs(&matches, &players_for(&groups), &config)?;
    let ranked = rank(&skills);
    let mut buf = Vec::new();
    formats::write_ranking(&mut buf, &ranked)?;
    let output = a.output.clone().unwrap_or_else(|| a.out_dir.join("ranking.csv"));
    write_file(&output, &buf)?;
    manifest.add_output(&output);
    print!("{}", String::from_utf8(buf).expect("csv is utf-8"));
    finish(manifest, &a.out_dir, start, 0)
}

fn cmd_score(a: &ScoreArgs) -> Result<u8, AppError> {
    let start = Instant::now();
    let rule = match a.rule {
        RuleArg::Accuracy => ScoringRule::Accuracy,
        RuleArg::Likelihood => ScoringRule::PredictiveLikelihood,
    };
    let mut manifest = RunManifest::new(
        "score",
        json!({ "rule": format!("{rule:?}"), "alpha": a.alpha, "gamma": a.gamma }),
    );
    manifest.add_input(&a.summary)?;
    manifest.add_input(&a.input)?;
    let (test, groups) = read_canonical_file(&a.input, None)?;
    if test.is_empty() {
        return Err(AppError::Input("test dataset is empty".into()));
    }
    let text = std::fs::read_to_string(&a.summary).map_err(|e| AppError::io(&a.summary, e))?;
    let summary = if text.trim_start().starts_with('{') {
        formats::read_summary_json(&text, &groups)?
    } else {
        formats::read_summary_csv(text.as_bytes(), &groups)?
    };
    let score = predictive_score_with(&summary, &test, a.alpha, a.gamma, rule)?;
    let guilty = test.iter().filter(|r| r.outcome == Some(true)).count() as f64 / test.len() as f64;
    let majority = guilty.max(1.0 - guilty);
    match rule {
        ScoringRule::Accuracy => println!("accuracy: {:.1}%", 100.0 * score),
        ScoringRule::PredictiveLikelihood => println!("mean predictive likelihood: {:.1}%", 100.0 * score),
    }
    println!("majority baseline: {:.1}%", 100.0 * majority);
    manifest.score = Some(score);
    finish(manifest, &a.out_dir, start, 0)
}

fn cmd_plot(a: &PlotArgs) -> Result<u8, AppError> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("plot", json!({ "labels": a.labels }));
    manifest.add_input(&a.trace)?;
    let file = std::fs::File::open(&a.trace).map_err(|e| AppError::io(&a.trace, e))?;
    let trace = formats::read_trace(std::io::BufReader::new(file))?;
    let labels: Vec<String> = match &a.labels {
        Some(l) => l.split(',').map(|s| s.trim().to_string()).collect(),
        None => (0..trace.group_count).map(|i| format!("beta_{i}")).collect(),
    };
    let svg = formats::plot_svg(&trace, &labels);
    let output = a.output.clone().unwrap_or_else(|| a.out_dir.join("trace.svg"));
    write_file(&output, svg.as_bytes())?;
    manifest.add_output(&output);
    finish(manifest, &a.out_dir, start, 0)
}
