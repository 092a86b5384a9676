use std::process::{Command, Output};

use ranklab::harness::parse_report;
use ranklab::tournament::Tournament;

fn ranklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ranklab")).args(args).output().unwrap()
}

#[test]
fn gen_writes_a_parsable_tournament() {
    let out = ranklab(&["gen", "--kind", "random", "--n", "9", "--seed", "4"]);
    assert!(out.status.success());
    let t = Tournament::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(t, Tournament::random(9, 4));
}

#[test]
fn random_tournament_without_seed_is_a_usage_error() {
    assert_eq!(ranklab(&["gen", "--kind", "random", "--n", "5"]).status.code(), Some(2));
    assert_eq!(ranklab(&["replay", "--tournament", "random:5"]).status.code(), Some(2));
}

#[test]
fn epsilon_out_of_range_is_a_usage_error() {
    assert_eq!(ranklab(&["maxent", "--epsilon", "0.7"]).status.code(), Some(2));
}

#[test]
fn infeasible_system_exits_with_three() {
    let out = ranklab(&["maxent", "--tournament", "rotational:3", "--epsilon", "0.2"]);
    assert_eq!(out.status.code(), Some(3));
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(report.records.len() > 1);
}

#[test]
fn report_round_trips_and_converts() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("run.jsonl");
    let csv = dir.path().join("run.csv");
    let jsonl_s = jsonl.to_str().unwrap();
    let out = ranklab(&["replay", "--tournament", "transitive:4", "--seed", "1", "--samples", "500", "--out", jsonl_s]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("VACUOUS"));

    let again = ranklab(&["report", "--input", jsonl_s]);
    assert!(again.status.success());
    assert_eq!(again.stdout, std::fs::read(&jsonl).unwrap());

    let direct = ranklab(&[
        "replay", "--tournament", "transitive:4", "--seed", "1", "--samples", "500", "--format", "csv",
    ]);
    let converted = ranklab(&["report", "--input", jsonl_s, "--format", "csv", "--out", csv.to_str().unwrap()]);
    assert!(converted.status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), direct.stdout);
    assert!(String::from_utf8(direct.stdout).unwrap().starts_with("line,kind,field,value"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "tournament = transitive:4\nepsilon = 0.45\nsamples = 0\n").unwrap();
    let out = ranklab(&["transitive", "--config", config.to_str().unwrap(), "--epsilon", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let ranklab::harness::Record::Header(h) = &report.records[0] else {
        panic!("first record is not the header")
    };
    assert_eq!(h.config.epsilon, 0.1);
    assert_eq!(h.config.samples, 0);
}
