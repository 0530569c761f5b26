use std::process::Command;

use tl_lab::report::{self, OutputFormat, RunConfig, SpectrumReport};
use tl_lab::transfer::ChainKind;
use tl_lab::Spin;

fn tl_lab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tl-lab"));
    cmd.env_remove(report::SEED_ENV);
    cmd
}

fn status(args: &[&str]) -> i32 {
    tl_lab().args(args).output().unwrap().status.code().unwrap()
}

fn strip_run_details(mut r: SpectrumReport) -> SpectrumReport {
    r.timings.clear();
    r.config.output = None;
    r
}

#[test]
fn json_round_trip_is_exact() {
    let cfg = RunConfig::solve(ChainKind::Open, 3, Spin::ONE);
    let rep = report::run(&cfg).unwrap();
    let text = report::render_report(&rep, OutputFormat::Json).unwrap();
    let back: SpectrumReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn table_three_csv_has_six_rows_and_totals() {
    let out = tl_lab().args(["reproduce", "--table", "3", "--format", "csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(&rows[6][0], "total");
    assert_eq!(&rows[6][3], "16");
    assert_eq!(&rows[6][4], "81");
    assert_eq!(&rows[6][5], "256");
}

#[test]
fn table_eight_kappa_column_is_symbolic() {
    let out = tl_lab().args(["reproduce", "--table", "8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let kappas: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with(|c: char| c.is_ascii_digit()))
        .filter_map(|l| l.split_whitespace().nth(2))
        .collect();
    for want in ["i", "-i", "-1"] {
        assert!(kappas.contains(&want), "{want} missing from {kappas:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(status(&["verify", "--suite", "ybe", "--N", "2", "--spin", "1"]), 0);
    assert_eq!(status(&["verify", "--suite", "ybe", "--N", "2", "--spin", "1", "--tol", "1e-300"]), 1);
    assert_eq!(status(&["verify", "--suite", "no-such-suite", "--N", "2"]), 2);
    assert_eq!(status(&["solve", "--N", "2", "--spin", "7/3"]), 2);
    assert_eq!(status(&["reproduce", "--table", "9"]), 2);
}

#[test]
fn seed_from_environment_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let code = tl_lab()
            .env(report::SEED_ENV, seed)
            .args(["solve", "--N", "3", "--spin", "1/2", "--format", "json", "--out"])
            .arg(&path)
            .status()
            .unwrap()
            .code();
        assert_eq!(code, Some(0));
        let rep: SpectrumReport = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        strip_run_details(rep)
    };
    let a = run("a.json", "17");
    let b = run("b.json", "17");
    assert_eq!(a.config.search.rng_seed, 17);
    assert_eq!(a, b);
    assert_eq!(status(&["solve", "--N", "2"]), 0);
    let bad = tl_lab().env(report::SEED_ENV, "seventeen").args(["solve", "--N", "2"]).status().unwrap();
    assert_eq!(bad.code(), Some(2));
}
