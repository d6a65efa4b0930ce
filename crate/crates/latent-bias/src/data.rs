//! Ingestion of stop-and-search CSV exports and the canonical dataset
//! format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use latent_bias_core::dataset::{tally, GroupTally};
use latent_bias_core::{GroupId, Groups, StopRecord};
use serde::Deserialize;

use crate::error::AppError;

/// Outcomes that count as lenient under the charges scheme.
pub const DEFAULT_LENIENT: [&str; 5] = [
    "Khat or Cannabis Warning",
    "Local resolution",
    "Community resolution",
    "A no further action disposal",
    "Suspected substances seized - No further action",
];

/// Outcomes that mean nothing was found.
pub const DEFAULT_NO_ACTION: [&str; 1] = ["Nothing found - no further action"];

/// One source row, all text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawRecord {
    pub date: String,
    pub force: String,
    pub self_ethnicity: String,
    pub officer_ethnicity: String,
    pub legislation: String,
    pub object_of_search: String,
    /// Verbatim, untrimmed.
    pub outcome: String,
    pub extras: Vec<(String, String)>,
}

/// How an outcome string decides guilt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuiltRule {
    /// Guilty iff the outcome is in the set.
    Positive(BTreeSet<String>),
    /// Guilty iff the outcome is non-empty and not in the set.
    AllExcept(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutcomeScheme {
    GuiltyNotGuilty(GuiltRule),
    /// Only guilty records (under `guilty`) enter; positive means severe,
    /// that is anything outside `lenient`.
    LenientSevere { lenient: BTreeSet<String>, guilty: GuiltRule },
}

impl OutcomeScheme {
    pub fn name(&self) -> &'static str {
        match self {
            OutcomeScheme::GuiltyNotGuilty(_) => "guilty",
            OutcomeScheme::LenientSevere { .. } => "charges",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precedence {
    Officer,
    #[serde(rename = "self")]
    SelfDefined,
}

/// Raw ethnicity string to group label.
#[derive(Debug, Clone, PartialEq)]
pub struct EthnicityMapping {
    pub groups: Groups,
    pub exact: BTreeMap<String, String>,
    /// Tried longest first when no exact entry matches.
    pub prefixes: Vec<(String, String)>,
    /// Group for strings matching nothing.
    pub fallback: String,
    pub precedence: Precedence,
}

impl EthnicityMapping {
    /// Group for a non-empty raw label, and whether the fallback was used.
    pub fn resolve(&self, raw: &str) -> (GroupId, bool) {
        let raw = raw.trim();
        let label = self.exact.get(raw).map(String::as_str).or_else(|| {
            self.prefixes.iter().find(|(p, _)| raw.starts_with(p.as_str())).map(|(_, g)| g.as_str())
        });
        match label.and_then(|l| self.groups.id_of(l)) {
            Some(id) => (id, false),
            None => (self.groups.id_of(&self.fallback).expect("fallback validated at load"), true),
        }
    }
}

/// Source column names.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Columns {
    #[serde(default = "col_force")]
    pub force: String,
    #[serde(default = "col_officer")]
    pub officer_ethnicity: String,
    #[serde(default = "col_self")]
    pub self_ethnicity: String,
    #[serde(default = "col_outcome")]
    pub outcome: String,
    #[serde(default = "col_date")]
    pub date: String,
    #[serde(default = "col_legislation")]
    pub legislation: String,
    #[serde(default = "col_object")]
    pub object_of_search: String,
}

fn col_force() -> String {
    "Force".into()
}
fn col_officer() -> String {
    "Officer-defined ethnicity".into()
}
fn col_self() -> String {
    "Self-defined ethnicity".into()
}
fn col_outcome() -> String {
    "Outcome".into()
}
fn col_date() -> String {
    "Date".into()
}
fn col_legislation() -> String {
    "Legislation".into()
}
fn col_object() -> String {
    "Object of search".into()
}

impl Default for Columns {
    fn default() -> Self {
        toml::from_str("").expect("all column names have defaults")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingFile {
    #[serde(default)]
    columns: Option<Columns>,
    ethnicity: EthnicitySection,
    #[serde(default)]
    outcomes: OutcomeSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EthnicitySection {
    groups: Vec<String>,
    fallback: String,
    #[serde(default = "default_precedence")]
    precedence: Precedence,
    #[serde(default)]
    exact: BTreeMap<String, String>,
    #[serde(default)]
    prefix: BTreeMap<String, String>,
}

fn default_precedence() -> Precedence {
    Precedence::Officer
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeSection {
    /// Explicit guilty set; when absent, guilt is "anything but no_action".
    guilty: Option<Vec<String>>,
    no_action: Option<Vec<String>>,
    lenient: Option<Vec<String>>,
}

/// A loaded mapping file.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingConfig {
    pub columns: Columns,
    pub ethnicity: EthnicityMapping,
    pub guilty: GuiltRule,
    pub lenient: BTreeSet<String>,
}

impl MappingConfig {
    pub fn parse(text: &str) -> Result<Self, AppError> {
        let file: MappingFile = toml::from_str(text).map_err(|e| AppError::Config(format!("mapping file: {e}")))?;
        let groups = Groups::new(file.ethnicity.groups.iter().cloned()).map_err(|e| AppError::Config(e.to_string()))?;
        let check = |label: &str| -> Result<(), AppError> {
            if groups.id_of(label).is_none() {
                return Err(AppError::Config(format!("mapping targets unknown group {label:?}")));
            }
            Ok(())
        };
        check(&file.ethnicity.fallback)?;
        for g in file.ethnicity.exact.values().chain(file.ethnicity.prefix.values()) {
            check(g)?;
        }
        let mut prefixes: Vec<(String, String)> = file.ethnicity.prefix.into_iter().collect();
        prefixes.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        let trimmed = |v: Vec<String>| -> BTreeSet<String> { v.into_iter().map(|s| s.trim().to_string()).collect() };
        let guilty = match (file.outcomes.guilty, file.outcomes.no_action) {
            (Some(_), Some(_)) => {
                return Err(AppError::Config("give either outcomes.guilty or outcomes.no_action, not both".into()))
            }
            (Some(g), None) => GuiltRule::Positive(trimmed(g)),
            (None, Some(n)) => GuiltRule::AllExcept(trimmed(n)),
            (None, None) => GuiltRule::AllExcept(DEFAULT_NO_ACTION.iter().map(|s| s.to_string()).collect()),
        };
        let lenient = match file.outcomes.lenient {
            Some(l) => trimmed(l),
            None => DEFAULT_LENIENT.iter().map(|s| s.to_string()).collect(),
        };
        if lenient.is_empty() {
            return Err(AppError::Config("the lenient outcome set must not be empty".into()));
        }
        Ok(Self {
            columns: file.columns.unwrap_or_default(),
            ethnicity: EthnicityMapping {
                groups,
                exact: file.ethnicity.exact,
                prefixes,
                fallback: file.ethnicity.fallback,
                precedence: file.ethnicity.precedence,
            },
            guilty,
            lenient,
        })
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::parse(&text)
    }

    /// The mapping shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MAPPING).expect("shipped mapping is valid")
    }

    pub fn scheme(&self, charges: bool) -> OutcomeScheme {
        if charges {
            OutcomeScheme::LenientSevere { lenient: self.lenient.clone(), guilty: self.guilty.clone() }
        } else {
            OutcomeScheme::GuiltyNotGuilty(self.guilty.clone())
        }
    }
}

pub const BUILTIN_MAPPING: &str = include_str!("../data/default_mapping.toml");

/// Why an outcome string needed attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeWarning {
    Empty,
    Unknown,
}

fn is_guilty(outcome: &str, rule: &GuiltRule) -> (bool, Option<OutcomeWarning>) {
    if outcome.is_empty() {
        return (false, Some(OutcomeWarning::Empty));
    }
    match rule {
        GuiltRule::Positive(set) => {
            let hit = set.contains(outcome);
            (hit, (!hit).then_some(OutcomeWarning::Unknown))
        }
        GuiltRule::AllExcept(set) => (!set.contains(outcome), None),
    }
}

/// Coarsens an outcome and reports whether it was unrecognised.
pub fn coarsen_outcome_checked(raw: &str, scheme: &OutcomeScheme) -> (bool, Option<OutcomeWarning>) {
    let outcome = raw.trim();
    match scheme {
        OutcomeScheme::GuiltyNotGuilty(rule) => is_guilty(outcome, rule),
        OutcomeScheme::LenientSevere { lenient, .. } => {
            let warning = outcome.is_empty().then_some(OutcomeWarning::Empty);
            (!lenient.contains(outcome), warning)
        }
    }
}

/// Positive means guilty, or severe under the charges scheme. Never fails.
pub fn coarsen_outcome(raw: &str, scheme: &OutcomeScheme) -> bool {
    coarsen_outcome_checked(raw, scheme).0
}

/// Counts from one ingestion pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestReport {
    pub total_rows: usize,
    pub kept: usize,
    pub dropped_missing_ethnicity: usize,
    pub dropped_missing_outcome: usize,
    /// Charges scheme only: records that were not guilty to begin with.
    pub dropped_not_guilty: usize,
    /// `(line, message)` for rows the CSV reader rejected.
    pub malformed: Vec<(u64, String)>,
    pub groups: Vec<String>,
    pub per_group: Vec<GroupTally>,
    /// Raw ethnicity strings routed to the fallback group, with counts.
    pub unmapped_ethnicity: BTreeMap<String, usize>,
    /// Outcome strings that needed a default decision, with counts.
    pub unknown_outcomes: BTreeMap<String, usize>,
    pub scheme: String,
}

impl IngestReport {
    pub fn dropped(&self) -> usize {
        self.dropped_missing_ethnicity + self.dropped_missing_outcome + self.dropped_not_guilty + self.malformed.len()
    }

    /// Plain-text summary. The percentage column is "guilty" for the guilty
    /// scheme and "lenient" for the charges scheme.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let charges = self.scheme == "charges";
        let _ = writeln!(s, "scheme: {}", self.scheme);
        let _ = writeln!(s, "rows: {}", self.total_rows);
        let _ = writeln!(s, "kept: {}", self.kept);
        let _ = writeln!(s, "dropped: {}", self.dropped());
        let _ = writeln!(s, "  missing ethnicity: {}", self.dropped_missing_ethnicity);
        let _ = writeln!(s, "  missing outcome: {}", self.dropped_missing_outcome);
        if charges {
            let _ = writeln!(s, "  not guilty: {}", self.dropped_not_guilty);
        }
        let _ = writeln!(s, "  malformed: {}", self.malformed.len());
        let _ = writeln!(s, "group,total,{}", if charges { "lenient_pct" } else { "guilty_pct" });
        for (label, t) in self.groups.iter().zip(&self.per_group) {
            let _ = writeln!(s, "{label},{},{:.2}", t.total, self.percent(t));
        }
        for (raw, n) in &self.unmapped_ethnicity {
            let _ = writeln!(s, "warning: ethnicity {raw:?} mapped to fallback ({n} rows)");
        }
        for (raw, n) in &self.unknown_outcomes {
            let _ = writeln!(s, "warning: outcome {raw:?} treated by default rule ({n} rows)");
        }
        for (line, msg) in &self.malformed {
            let _ = writeln!(s, "warning: line {line} skipped: {msg}");
        }
        s
    }

    /// The table percentage for one group.
    pub fn percent(&self, t: &GroupTally) -> f64 {
        if self.scheme == "charges" {
            if t.total == 0 {
                0.0
            } else {
                100.0 * (t.total - t.positive) as f64 / t.total as f64
            }
        } else {
            t.percent_positive()
        }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, AppError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| AppError::Input(format!("missing required column {name:?}")))
}

/// Reads raw rows, maps groups and coarsens outcomes. Malformed rows are
/// counted and skipped; a missing required column is an error.
pub fn parse_records<R: Read>(
    input: R,
    mapping: &MappingConfig,
    scheme: &OutcomeScheme,
) -> Result<(Vec<StopRecord>, IngestReport), AppError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input);
    let headers = reader.headers().map_err(|e| AppError::Input(format!("cannot read header: {e}")))?.clone();
    let cols = &mapping.columns;
    let i_force = column_index(&headers, &cols.force)?;
    let i_officer = column_index(&headers, &cols.officer_ethnicity)?;
    let i_self = column_index(&headers, &cols.self_ethnicity)?;
    let i_outcome = column_index(&headers, &cols.outcome)?;
    let optional = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (i_date, i_leg, i_obj) = (optional(&cols.date), optional(&cols.legislation), optional(&cols.object_of_search));
    let known: BTreeSet<usize> = [Some(i_force), Some(i_officer), Some(i_self), Some(i_outcome), i_date, i_leg, i_obj]
        .into_iter()
        .flatten()
        .collect();

    let mut report = IngestReport {
        groups: mapping.ethnicity.groups.labels(),
        scheme: scheme.name().to_string(),
        ..IngestReport::default()
    };
    let mut records = Vec::new();
    for row in reader.records() {
        report.total_rows += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.malformed.push((line, e.to_string()));
                continue;
            }
        };
        let get = |i: Option<usize>| i.and_then(|i| row.get(i)).unwrap_or("").to_string();
        let raw = RawRecord {
            date: get(i_date),
            force: get(Some(i_force)),
            self_ethnicity: get(Some(i_self)),
            officer_ethnicity: get(Some(i_officer)),
            legislation: get(i_leg),
            object_of_search: get(i_obj),
            outcome: get(Some(i_outcome)),
            extras: headers
                .iter()
                .zip(row.iter())
                .enumerate()
                .filter(|(i, _)| !known.contains(i))
                .map(|(_, (h, v))| (h.to_string(), v.to_string()))
                .collect(),
        };
        if let Some(r) = map_record(&raw, mapping, scheme, &mut report) {
            records.push(r);
        }
    }
    report.kept = records.len();
    report.per_group = tally(&records, mapping.ethnicity.groups.len());
    Ok((records, report))
}

fn map_record(
    raw: &RawRecord,
    mapping: &MappingConfig,
    scheme: &OutcomeScheme,
    report: &mut IngestReport,
) -> Option<StopRecord> {
    let (first, second) = match mapping.ethnicity.precedence {
        Precedence::Officer => (&raw.officer_ethnicity, &raw.self_ethnicity),
        Precedence::SelfDefined => (&raw.self_ethnicity, &raw.officer_ethnicity),
    };
    let label = [first, second].into_iter().map(|s| s.trim()).find(|s| !s.is_empty());
    let Some(label) = label else {
        report.dropped_missing_ethnicity += 1;
        return None;
    };
    let outcome = raw.outcome.trim();
    if outcome.is_empty() {
        report.dropped_missing_outcome += 1;
        return None;
    }
    if let OutcomeScheme::LenientSevere { guilty, .. } = scheme {
        if !is_guilty(outcome, guilty).0 {
            report.dropped_not_guilty += 1;
            return None;
        }
    }
    let (group, fell_back) = mapping.ethnicity.resolve(label);
    if fell_back {
        *report.unmapped_ethnicity.entry(label.to_string()).or_default() += 1;
    }
    let (positive, warning) = coarsen_outcome_checked(outcome, scheme);
    if warning.is_some() {
        *report.unknown_outcomes.entry(outcome.to_string()).or_default() += 1;
    }
    Some(
        StopRecord::stopped(group, positive)
            .with_force(raw.force.trim())
            .with_raw_outcome(raw.outcome.clone()),
    )
}

/// Writes `group,stopped,outcome,force` with group labels and 0/1 flags.
pub fn write_canonical<W: Write>(out: W, records: &[StopRecord], groups: &Groups) -> Result<(), AppError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let wrap = |e: csv::Error| AppError::Input(format!("writing dataset: {e}"));
    w.write_record(["group", "stopped", "outcome", "force"]).map_err(wrap)?;
    for r in records {
        let label = groups
            .label(r.group)
            .ok_or_else(|| AppError::Input(format!("record group {} has no label", r.group)))?;
        let outcome = match r.outcome {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        w.write_record([label, if r.stopped { "1" } else { "0" }, outcome, r.force.as_str()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| AppError::Input(format!("writing dataset: {e}")))?;
    Ok(())
}

fn flag(text: &str, what: &str, line: u64) -> Result<bool, AppError> {
    match text.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(AppError::Input(format!("line {line}: {what} must be 0 or 1, got {other:?}"))),
    }
}

/// Group set for a canonical file: standard labels present, in standard
/// order, then any others in order of first appearance.
pub fn infer_groups(labels: &[String]) -> Result<Groups, AppError> {
    let standard = Groups::standard();
    let mut out: Vec<String> = standard.labels().into_iter().filter(|l| labels.contains(l)).collect();
    for l in labels {
        if !out.contains(l) {
            out.push(l.clone());
        }
    }
    Groups::new(out).map_err(|e| AppError::Input(e.to_string()))
}

/// Reads a canonical dataset. With `groups` absent the group set is
/// inferred by [`infer_groups`].
pub fn read_canonical<R: Read>(input: R, groups: Option<&Groups>) -> Result<(Vec<StopRecord>, Groups), AppError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers().map_err(|e| AppError::Input(format!("dataset header: {e}")))?.clone();
    let expected = ["group", "stopped", "outcome", "force"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(AppError::Input(format!("dataset header must be {}", expected.join(","))));
    }
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| AppError::Input(format!("dataset: {e}")))?;
        let line = row.position().map_or(0, |p| p.line());
        rows.push((line, row));
    }
    let groups = match groups {
        Some(g) => g.clone(),
        None => {
            let mut labels: Vec<String> = Vec::new();
            for (_, r) in &rows {
                if !labels.iter().any(|l| l == &r[0]) {
                    labels.push(r[0].to_string());
                }
            }
            infer_groups(&labels)?
        }
    };
    let mut records = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let group = groups
            .id_of(&r[0])
            .ok_or_else(|| AppError::Input(format!("line {line}: unknown group {:?}", &r[0])))?;
        let stopped = flag(&r[1], "stopped", line)?;
        let outcome = if r[2].trim().is_empty() { None } else { Some(flag(&r[2], "outcome", line)?) };
        let rec = StopRecord { group, stopped, outcome, force: r[3].to_string(), raw_outcome: String::new() };
        rec.validate(groups.len()).map_err(|e| AppError::Input(format!("line {line}: {e}")))?;
        records.push(rec);
    }
    Ok((records, groups))
}

pub fn read_canonical_file(path: &Path, groups: Option<&Groups>) -> Result<(Vec<StopRecord>, Groups), AppError> {
    let f = std::fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    read_canonical(std::io::BufReader::new(f), groups)
}
