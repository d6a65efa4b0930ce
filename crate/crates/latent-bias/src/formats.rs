//! Trace, summary and ranking tables, and the SVG trace plot.

use std::fmt::Write as _;
use std::io::{Read, Write};

use latent_bias_core::inference::GroupSummary;
use latent_bias_core::{GibbsTrace, Gaussian1D, Groups, Player, PosteriorSummary, PriorKind};

use crate::error::AppError;

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn write_err(e: impl std::fmt::Display) -> AppError {
    AppError::Input(format!("write failed: {e}"))
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn trace_header(k: usize) -> Vec<String> {
    let mut h = vec!["sweep".to_string()];
    h.extend((0..k).map(|i| format!("beta_{i}_mean")));
    h.push("C_mean".into());
    h.extend((0..k).map(|i| format!("beta_{i}_var")));
    h.push("C_var".into());
    h.extend((0..k).map(|i| format!("cov_C_beta_{i}")));
    h
}

/// One row per sweep, zero-based sweep index, 13 significant digits.
pub fn write_trace<W: Write>(out: W, trace: &GibbsTrace) -> Result<(), AppError> {
    let mut w = csv_writer(out);
    w.write_record(trace_header(trace.group_count)).map_err(write_err)?;
    for (i, ((m, v), c)) in trace.means.iter().zip(&trace.variances).zip(&trace.cov_c_beta).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(m.iter().chain(v).chain(c).map(|&x| num(x)));
        w.write_record(row).map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn read_trace<R: Read>(input: R) -> Result<GibbsTrace, AppError> {
    let bad = |msg: String| AppError::Input(format!("trace: {msg}"));
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let n = headers.len();
    // sweep, K + 1 means, K + 1 variances, K covariances
    if n < 6 || n % 3 != 0 {
        return Err(bad(format!("unexpected column count {n}")));
    }
    let k = n / 3 - 1;
    if headers.iter().ne(trace_header(k).iter().map(String::as_str)) {
        return Err(bad("header does not match the trace layout".into()));
    }
    let mut trace = GibbsTrace::new(k);
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let vals = row
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        if row[0].trim().parse::<usize>().ok() != Some(line) {
            return Err(bad(format!("row {} has sweep {:?}", line + 1, &row[0])));
        }
        trace.means.push(vals[..=k].to_vec());
        trace.variances.push(vals[k + 1..2 * k + 2].to_vec());
        trace.cov_c_beta.push(vals[2 * k + 2..].to_vec());
        trace.wall_seconds.push(0.0);
    }
    if trace.is_empty() {
        return Err(bad("no sweeps".into()));
    }
    Ok(trace)
}

/// `rank,label,bias_mean,bias_variance`, best rank first.
pub fn write_summary_csv<W: Write>(out: W, summary: &PosteriorSummary) -> Result<(), AppError> {
    let mut w = csv_writer(out);
    w.write_record(["rank", "label", "bias_mean", "bias_variance"]).map_err(write_err)?;
    for g in summary.ranked() {
        w.write_record([g.rank.to_string(), g.label.clone(), num(g.bias_mean), num(g.bias_variance)])
            .map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

/// Reads a summary table against `groups`. The table carries no criminality
/// or cross-covariance columns, so those are taken as `C ~ N(0, 1)` with zero
/// covariance, which is what an anchored run reports for `C`.
pub fn read_summary_csv<R: Read>(input: R, groups: &Groups) -> Result<PosteriorSummary, AppError> {
    let bad = |msg: String| AppError::Input(format!("summary: {msg}"));
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().ne(["rank", "label", "bias_mean", "bias_variance"]) {
        return Err(bad("header must be rank,label,bias_mean,bias_variance".into()));
    }
    let mut rows = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let p = |i: usize| row[i].trim().parse::<f64>().map_err(|e| bad(format!("{e}")));
        rows.push((row[1].to_string(), p(0)? as usize, p(2)?, p(3)?));
    }
    summary_from_rows(rows, groups, 0.0, 1.0)
}

fn summary_from_rows(
    rows: Vec<(String, usize, f64, f64)>,
    groups: &Groups,
    c_mean: f64,
    c_var: f64,
) -> Result<PosteriorSummary, AppError> {
    let mut out = Vec::with_capacity(groups.len());
    for g in groups.iter() {
        let (_, rank, mean, var) = rows
            .iter()
            .find(|r| r.0 == g.label)
            .ok_or_else(|| AppError::Input(format!("summary has no row for group {:?}", g.label)))?;
        out.push(GroupSummary {
            id: g.id.0,
            label: g.label.clone(),
            bias_mean: *mean,
            bias_variance: *var,
            cov_c_bias: 0.0,
            rank: *rank,
        });
    }
    Ok(PosteriorSummary {
        groups: out,
        criminality_mean: c_mean,
        criminality_variance: c_var,
        prior: PriorKind::Dependent,
        anchoring: true,
        sweeps_used: 0,
    })
}

pub fn summary_json(summary: &PosteriorSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serialises");
    s.push('\n');
    s
}

/// Reads a JSON summary and re-indexes it to `groups` by label.
pub fn read_summary_json(text: &str, groups: &Groups) -> Result<PosteriorSummary, AppError> {
    let mut s: PosteriorSummary =
        serde_json::from_str(text).map_err(|e| AppError::Input(format!("summary: {e}")))?;
    let mut out = Vec::with_capacity(groups.len());
    for g in groups.iter() {
        let mut found = s
            .groups
            .iter()
            .find(|x| x.label == g.label)
            .cloned()
            .ok_or_else(|| AppError::Input(format!("summary has no entry for group {:?}", g.label)))?;
        found.id = g.id.0;
        out.push(found);
    }
    s.groups = out;
    Ok(s)
}

/// `rank,label,mean,variance`.
pub fn write_ranking<W: Write>(out: W, ranked: &[(Player, Gaussian1D)]) -> Result<(), AppError> {
    let mut w = csv_writer(out);
    w.write_record(["rank", "label", "mean", "variance"]).map_err(write_err)?;
    for (i, (p, g)) in ranked.iter().enumerate() {
        w.write_record([(i + 1).to_string(), p.label.clone(), num(g.mean), num(g.variance)])
            .map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];
const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

/// Line chart of each bias mean against sweep with a one-sd band.
pub fn plot_svg(trace: &GibbsTrace, labels: &[String]) -> String {
    let k = trace.group_count;
    let n = trace.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (m, v) in trace.means.iter().zip(&trace.variances) {
        for i in 0..k {
            let sd = v[i].max(0.0).sqrt();
            lo = lo.min(m[i] - sd);
            hi = hi.max(m[i] + sd);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        lo = -1.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |s: usize| if n > 1 { MARGIN + plot_w * s as f64 / (n - 1) as f64 } else { MARGIN + plot_w / 2.0 };
    let y = |v: f64| MARGIN + plot_h * (hi - v) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">sweep</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.2}" text-anchor="end">{:.3}</text>"#, y(hi) + 4.0, hi);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.2}" text-anchor="end">{:.3}</text>"#, y(lo) + 4.0, lo);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.2}" text-anchor="middle">0</text>"#, HEIGHT - MARGIN + 16.0);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        n.saturating_sub(1)
    );
    for i in 0..k {
        let colour = PALETTE[i % PALETTE.len()];
        let label = labels.get(i).cloned().unwrap_or_else(|| format!("beta_{i}"));
        let upper: Vec<String> = (0..n)
            .map(|t| format!("{:.2},{:.2}", x(t), y(trace.means[t][i] + trace.variances[t][i].max(0.0).sqrt())))
            .collect();
        let lower: Vec<String> = (0..n)
            .rev()
            .map(|t| format!("{:.2},{:.2}", x(t), y(trace.means[t][i] - trace.variances[t][i].max(0.0).sqrt())))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        if n == 1 {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                x(0),
                y(trace.means[0][i])
            );
        } else {
            let pts: Vec<String> = (0..n).map(|t| format!("{:.2},{:.2}", x(t), y(trace.means[t][i]))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        let ly = MARGIN + 16.0 * i as f64 + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{colour}">{}</text>"#,
            MARGIN + 8.0,
            escape(&label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
