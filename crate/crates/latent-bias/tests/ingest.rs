mod common;

use common::*;
use latent_bias::data::{parse_records, read_canonical, write_canonical, MappingConfig};
use latent_bias_core::dataset::{filter_force, synthesize, tally, TrueParams};
use latent_bias_core::seed::stream;
use latent_bias_core::Groups;

#[test]
fn national_fixture_totals() {
    let mapping = MappingConfig::builtin();
    let (records, report) = parse_records(national_csv().as_bytes(), &mapping, &mapping.scheme(false)).unwrap();
    assert_eq!(records.len(), 16224);
    assert_eq!(report.dropped(), 0);
    assert!(report.unmapped_ethnicity.is_empty(), "{:?}", report.unmapped_ethnicity);
    let totals: Vec<usize> = report.per_group.iter().map(|t| t.total).collect();
    assert_eq!(totals, NATIONAL_TOTALS);
    // White is reproducible at two decimals; the table rounding of the
    // others is checked (and reported) by the acceptance suite.
    assert_eq!(format!("{:.2}", report.percent(&report.per_group[0])), "44.89");
}

#[test]
fn london_subset_totals() {
    let mapping = MappingConfig::builtin();
    let (records, _) = parse_records(national_csv().as_bytes(), &mapping, &mapping.scheme(false)).unwrap();
    let met = filter_force(&records, MET);
    let totals: Vec<usize> = tally(&met, 4).iter().map(|t| t.total).collect();
    assert_eq!(totals, LONDON_TOTALS);
    assert!(filter_force(&records, "Nowhere Constabulary").is_empty());
}

#[test]
fn charges_scheme_keeps_guilty_only() {
    let mapping = MappingConfig::builtin();
    let (records, report) = parse_records(charges_csv().as_bytes(), &mapping, &mapping.scheme(true)).unwrap();
    let totals: Vec<usize> = report.per_group.iter().map(|t| t.total).collect();
    assert_eq!(totals, CHARGES_TOTALS);
    assert_eq!(report.dropped_not_guilty, CHARGES_TOTALS.iter().map(|n| n / 10).sum::<usize>());
    assert_eq!(records.len(), CHARGES_TOTALS.iter().sum::<usize>());
    assert!(report.render().contains("group,total,lenient_pct"));
    assert!(records.iter().all(|r| r.outcome.is_some()));
}

#[test]
fn empty_file_gives_empty_report() {
    let mapping = MappingConfig::builtin();
    let (records, report) = parse_records(format!("{HEADER}\n").as_bytes(), &mapping, &mapping.scheme(false)).unwrap();
    assert!(records.is_empty());
    assert_eq!(report.total_rows, 0);
    assert!(report.per_group.iter().all(|t| t.total == 0 && t.positive == 0));
}

#[test]
fn missing_outcome_column_is_named() {
    let mapping = MappingConfig::builtin();
    let csv = "Force,Officer-defined ethnicity,Self-defined ethnicity\nX,White,\n";
    let err = parse_records(csv.as_bytes(), &mapping, &mapping.scheme(false)).unwrap_err();
    assert!(err.to_string().contains("\"Outcome\""), "{err}");
}

#[test]
fn ragged_rows_are_skipped_not_fatal() {
    let mapping = MappingConfig::builtin();
    let mut csv = small_csv(3);
    csv.push_str("Person search,2019-01-01,Too,Few\n");
    let (records, report) = parse_records(csv.as_bytes(), &mapping, &mapping.scheme(false)).unwrap();
    assert_eq!(records.len(), 12);
    assert_eq!(report.malformed.len(), 1);
}

#[test]
fn synthetic_round_trip() {
    let groups = Groups::standard();
    let params = TrueParams { beta: vec![0.0, 0.5, 1.0, 1.5], alpha: 1.0, gamma: 1.0, population: vec![500; 4] };
    let synth = synthesize(&params, &mut stream(3, "synth", 0)).unwrap();
    let mut buf = Vec::new();
    write_canonical(&mut buf, &synth.records, &groups).unwrap();
    let (back, back_groups) = read_canonical(buf.as_slice(), Some(&groups)).unwrap();
    assert_eq!(back_groups, groups);
    assert_eq!(back.len(), synth.records.len());
    for (a, b) in back.iter().zip(&synth.records) {
        assert_eq!((a.group, a.stopped, a.outcome, &a.force), (b.group, b.stopped, b.outcome, &b.force));
    }
    let mut again = Vec::new();
    write_canonical(&mut again, &back, &groups).unwrap();
    assert_eq!(again, buf);
}
