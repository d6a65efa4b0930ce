//! Raw-export fixtures built from published group totals and percentages.
#![allow(dead_code)]

use std::fmt::Write as _;

pub const HEADER: &str =
    "Type,Date,Force,Officer-defined ethnicity,Self-defined ethnicity,Legislation,Object of search,Outcome";

pub const LABELS: [&str; 4] = ["White", "Black", "Asian", "Other/Mixed"];
pub const MET: &str = "Metropolitan Police Service";

pub const NATIONAL_TOTALS: [usize; 4] = [9374, 4168, 2146, 536];
pub const NATIONAL_PCT: [&str; 4] = ["44.89", "35.09", "39.80", "40.88"];
pub const LONDON_TOTALS: [usize; 4] = [3679, 3657, 1536, 351];
pub const LONDON_PCT: [&str; 4] = ["32.62", "31.42", "30.33", "36.46"];
pub const CHARGES_TOTALS: [usize; 4] = [4183, 1466, 860, 220];
pub const CHARGES_PCT: [&str; 4] = ["50.29", "31.50", "47.21", "38.46"];

pub const NO_ACTION: &str = "Nothing found - no further action";
pub const LENIENT: [&str; 5] = [
    "Khat or Cannabis Warning",
    "Local resolution",
    "Community resolution",
    "A no further action disposal",
    "Suspected substances seized - No further action",
];
const SEVERE: [&str; 3] = ["Arrest", "Summons / charged by post", "Penalty Notice for Disorder"];
const OTHER_FORCES: [&str; 3] = ["West Midlands Police", "Greater Manchester Police", "Merseyside Police"];

/// Nearest-integer count for a table percentage.
pub fn count(total: usize, pct: &str) -> usize {
    (total as f64 * pct.parse::<f64>().unwrap() / 100.0).round() as usize
}

/// Raw ethnicity columns for group `k`, varied so the mapping's exact,
/// prefix and fallback-field paths all get exercised.
fn ethnicity(k: usize, i: usize) -> (&'static str, &'static str) {
    match (k, i % 3) {
        (0, 0) => ("White", "White - English/Welsh/Scottish/Northern Irish/British"),
        (0, _) => ("White", ""),
        (1, 0) => ("", "Black/African/Caribbean/Black British - African"),
        (1, _) => ("Black", "Black/African/Caribbean/Black British - Caribbean"),
        (2, 0) => ("Asian", "Asian/Asian British - Pakistani"),
        (2, _) => ("Asian", ""),
        (_, 0) => ("Other", "Other ethnic group - Not stated"),
        (_, 1) => ("", "Mixed/Multiple ethnic groups - White and Black Caribbean"),
        _ => ("Mixed", ""),
    }
}

fn row(s: &mut String, force: &str, k: usize, i: usize, outcome: &str) {
    let (officer, self_defined) = ethnicity(k, i);
    let _ = writeln!(
        s,
        "Person search,2019-0{}-1{}T12:00:00+00:00,{force},{officer},\"{self_defined}\",Misuse of Drugs Act 1971 (section 23),Controlled drugs,{outcome}",
        1 + i % 9,
        i % 10
    );
}

/// National export whose Met rows reproduce the London table and whose
/// totals reproduce the national one.
pub fn national_csv() -> String {
    let mut s = format!("{HEADER}\n");
    for k in 0..4 {
        let (n_l, g_l) = (LONDON_TOTALS[k], count(LONDON_TOTALS[k], LONDON_PCT[k]));
        let (n, g) = (NATIONAL_TOTALS[k], count(NATIONAL_TOTALS[k], NATIONAL_PCT[k]));
        for i in 0..n {
            let london = i < n_l;
            let guilty = if london { i < g_l } else { i - n_l < g - g_l };
            let force = if london { MET } else { OTHER_FORCES[i % 3] };
            let outcome = if guilty { if i % 2 == 0 { SEVERE[i % 3] } else { LENIENT[i % 5] } } else { NO_ACTION };
            row(&mut s, force, k, i, outcome);
        }
    }
    s
}

/// Charges export: guilty rows split lenient/severe per the table, plus
/// not-guilty rows that the charges scheme must drop.
pub fn charges_csv() -> String {
    let mut s = format!("{HEADER}\n");
    for k in 0..4 {
        let n = CHARGES_TOTALS[k];
        let lenient = count(n, CHARGES_PCT[k]);
        for i in 0..n {
            let outcome = if i < lenient { LENIENT[i % 5] } else { SEVERE[i % 3] };
            row(&mut s, OTHER_FORCES[i % 3], k, i, outcome);
        }
        for i in 0..n / 10 {
            row(&mut s, OTHER_FORCES[0], k, i, NO_ACTION);
        }
    }
    s
}

/// A small export for CLI tests: `n` rows per group.
pub fn small_csv(n: usize) -> String {
    let mut s = format!("{HEADER}\n");
    for k in 0..4 {
        for i in 0..n {
            let outcome = if (i + k) % 3 == 0 { SEVERE[i % 3] } else { NO_ACTION };
            let force = if i % 2 == 0 { MET } else { OTHER_FORCES[i % 3] };
            row(&mut s, force, k, i, outcome);
        }
    }
    s
}

/// Rendered `label,total,pct` rows from an ingest report.
pub fn table_rows(report: &str) -> Vec<String> {
    report
        .lines()
        .filter(|l| LABELS.iter().any(|g| l.starts_with(&format!("{g},"))))
        .map(str::to_string)
        .collect()
}

pub fn expected_rows(totals: &[usize; 4], pct: &[&str; 4]) -> Vec<String> {
    (0..4).map(|k| format!("{},{},{}", LABELS[k], totals[k], pct[k])).collect()
}
