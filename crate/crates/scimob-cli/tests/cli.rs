//! End-to-end tests of the `scimob` binary: exit codes, stage composition,
//! artifact determinism, and the provenance records.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scimob() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scimob"))
}

fn run(args: &[&str]) -> Output {
    scimob().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Tiny handwritten corpus: three authors, one of them mobile ES→US.
fn write_fixture_corpus(path: &Path) {
    let lines = [
        r#"{"pub_id":"P1","year":2004,"field":"PHY","citations":3,"authors":[{"author_id":"a1","affiliations":[{"org":"CSIC","city":"MADRID","country":"ES"}]}]}"#,
        r#"{"pub_id":"P2","year":2005,"field":"PHY","citations":1,"authors":[{"author_id":"a1","affiliations":[{"org":"MIT","city":"BOSTON","country":"US"}]}]}"#,
        r#"{"pub_id":"P3","year":2004,"field":"PHY","citations":0,"authors":[{"author_id":"a2","affiliations":[{"org":"MIT","city":"BOSTON","country":"US"}]}]}"#,
        r#"{"pub_id":"P4","year":2005,"field":"PHY","citations":2,"authors":[{"author_id":"a2","affiliations":[{"org":"MIT","city":"BOSTON","country":"US"}]},{"author_id":"a3","affiliations":[{"org":"UCL","city":"LONDON","country":"UK"}]}]}"#,
        r#"{"pub_id":"P5","year":2006,"field":"PHY","citations":5,"authors":[{"author_id":"a3","affiliations":[{"org":"UCL","city":"LONDON","country":"UK"}]}]}"#,
    ];
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

fn synth_corpus(dir: &Path, authors: u32, seed: u64) -> PathBuf {
    let output = run(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--authors",
        &authors.to_string(),
        "--seed",
        &seed.to_string(),
        "--window",
        "2003:2010",
    ]);
    assert_exit(&output, 0);
    dir.join("synth_corpus.jsonl")
}

/// Map of artifact name → bytes, with provenance timestamps stripped so
/// that two runs of the same configuration compare equal.
fn artifact_snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut snapshot = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if !entry.file_type().unwrap().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let mut bytes = fs::read(entry.path()).unwrap();
        if name.starts_with("run_") && name.ends_with(".json") {
            let mut record: serde_json::Value =
                serde_json::from_slice(&bytes).expect("provenance is valid JSON");
            record["created_utc"] = serde_json::Value::Null;
            bytes = serde_json::to_vec(&record).unwrap();
        }
        snapshot.insert(name, bytes);
    }
    snapshot
}

#[test]
fn full_pipeline_runs_and_writes_all_artifacts() {
    let tmp = TempDir::new().unwrap();
    let corpus = synth_corpus(tmp.path(), 60, 11);
    let out = tmp.path().join("run");
    let output = run(&[
        "all",
        "--input",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--window",
        "2003:2010",
    ]);
    assert_exit(&output, 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.lines().count(), 6, "one summary line per stage");

    for name in [
        "corpus.jsonl",
        "validation.csv",
        "baselines.csv",
        "events.csv",
        "profiles.csv",
        "mobility_summary.csv",
        "network.graphml",
        "network_nodes.csv",
        "network_edges.csv",
        "network_summary.csv",
        "centrality.csv",
        "flow_matrix.csv",
        "shares_sending.csv",
        "shares_receiving.csv",
        "shares_long.csv",
        "impact_by_class.csv",
        "run_ingest.json",
        "run_classify.json",
        "run_network.json",
        "run_centrality.json",
        "run_flows.json",
        "run_impact.json",
    ] {
        assert!(out.join(name).is_file(), "missing artifact {name}");
    }
}

#[test]
fn all_matches_stage_by_stage_runs() {
    let tmp = TempDir::new().unwrap();
    let corpus = synth_corpus(tmp.path(), 50, 3);
    let corpus = corpus.to_str().unwrap();
    let combined = tmp.path().join("combined");
    let staged = tmp.path().join("staged");

    assert_exit(
        &run(&[
            "all",
            "--input",
            corpus,
            "--out",
            combined.to_str().unwrap(),
            "--window",
            "2003:2010",
        ]),
        0,
    );

    let staged_dir = staged.to_str().unwrap();
    for args in [
        vec!["ingest", "--input", corpus, "--out", staged_dir],
        vec!["classify", "--out", staged_dir, "--window", "2003:2010"],
        vec!["network", "--out", staged_dir, "--window", "2003:2010"],
        vec!["centrality", "--out", staged_dir],
        vec!["flows", "--out", staged_dir, "--window", "2003:2010"],
        vec!["impact", "--out", staged_dir],
    ] {
        assert_exit(&run(&args), 0);
    }

    assert_eq!(artifact_snapshot(&combined), artifact_snapshot(&staged));
}

#[test]
fn repeated_runs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let corpus = synth_corpus(tmp.path(), 40, 5);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        assert_exit(
            &run(&[
                "all",
                "--input",
                corpus.to_str().unwrap(),
                "--out",
                dir.to_str().unwrap(),
                "--window",
                "2003:2010",
            ]),
            0,
        );
    }
    assert_eq!(artifact_snapshot(&a), artifact_snapshot(&b));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    // malformed window
    let output = run(&["classify", "--out", tmp.path().to_str().unwrap(), "--window", "2003-2015"]);
    assert_exit(&output, 1);
    // unknown level
    let output = run(&["classify", "--out", tmp.path().to_str().unwrap(), "--level", "planet"]);
    assert_exit(&output, 1);
    // network scope must be a single country
    write_fixture_corpus(&tmp.path().join("in.jsonl"));
    assert_exit(
        &run(&[
            "ingest",
            "--input",
            tmp.path().join("in.jsonl").to_str().unwrap(),
            "--out",
            tmp.path().to_str().unwrap(),
        ]),
        0,
    );
    let output = run(&[
        "network",
        "--out",
        tmp.path().to_str().unwrap(),
        "--scope",
        "ES,US",
    ]);
    assert_exit(&output, 1);
    assert!(stderr_of(&output).contains("exactly one country"));
    // top-k must be positive
    let output = run(&["centrality", "--out", tmp.path().to_str().unwrap(), "--top-k", "0"]);
    assert_exit(&output, 1);
}

#[test]
fn data_errors_exit_two_and_name_the_missing_stage() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();

    let output = run(&["ingest", "--input", "/nonexistent.jsonl", "--out", dir]);
    assert_exit(&output, 2);

    let output = run(&["classify", "--out", dir]);
    assert_exit(&output, 2);
    assert!(stderr_of(&output).contains("run `scimob ingest` first"));

    let output = run(&["centrality", "--out", dir]);
    assert_exit(&output, 2);
    assert!(stderr_of(&output).contains("run `scimob network` first"));

    let output = run(&["flows", "--out", dir]);
    assert_exit(&output, 2);
    assert!(stderr_of(&output).contains("run `scimob classify` first"));
}

#[test]
fn city_level_events_are_rejected_by_flows() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    write_fixture_corpus(&tmp.path().join("in.jsonl"));
    assert_exit(
        &run(&["ingest", "--input", tmp.path().join("in.jsonl").to_str().unwrap(), "--out", dir]),
        0,
    );
    assert_exit(
        &run(&["classify", "--out", dir, "--window", "2003:2015", "--level", "city"]),
        0,
    );
    let output = run(&["flows", "--out", dir, "--window", "2003:2015"]);
    assert_exit(&output, 1);
    assert!(stderr_of(&output).contains("--level country"));
}

#[test]
fn classify_summary_reflects_fixture_mobility() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    write_fixture_corpus(&tmp.path().join("in.jsonl"));
    assert_exit(
        &run(&["ingest", "--input", tmp.path().join("in.jsonl").to_str().unwrap(), "--out", dir]),
        0,
    );
    assert_exit(&run(&["classify", "--out", dir, "--window", "2003:2015"]), 0);

    let events = fs::read_to_string(tmp.path().join("events.csv")).unwrap();
    assert!(events.contains("a1,2005,MOBILE,ES,US,US,false"));
    let profiles = fs::read_to_string(tmp.path().join("profiles.csv")).unwrap();
    assert!(profiles.contains("a1,ES,true,false,false,2"));
}

#[test]
fn aliases_canonicalize_organizations() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    write_fixture_corpus(&tmp.path().join("in.jsonl"));
    fs::write(
        tmp.path().join("aliases.csv"),
        "raw,canonical\nMIT,MASSACHUSETTS INSTITUTE OF TECHNOLOGY\n",
    )
    .unwrap();
    assert_exit(
        &run(&[
            "ingest",
            "--input",
            tmp.path().join("in.jsonl").to_str().unwrap(),
            "--aliases",
            tmp.path().join("aliases.csv").to_str().unwrap(),
            "--out",
            dir,
        ]),
        0,
    );
    let corpus = fs::read_to_string(tmp.path().join("corpus.jsonl")).unwrap();
    assert!(corpus.contains("MASSACHUSETTS INSTITUTE OF TECHNOLOGY"));
    assert!(!corpus.contains(r#""MIT""#));
}

#[test]
fn out_dir_defaults_to_environment_variable() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("envdir");
    let output = scimob()
        .args(["synth", "--authors", "10", "--seed", "1"])
        .env("SCIMOB_OUT", &out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    assert!(out.join("synth_corpus.jsonl").is_file());
}

#[test]
fn scope_accepts_lists_and_files() {
    let tmp = TempDir::new().unwrap();
    let corpus = synth_corpus(tmp.path(), 60, 9);
    let dir = tmp.path().join("run");
    let dir_str = dir.to_str().unwrap();
    assert_exit(
        &run(&[
            "all",
            "--input",
            corpus.to_str().unwrap(),
            "--out",
            dir_str,
            "--window",
            "2003:2010",
        ]),
        0,
    );

    assert_exit(&run(&["flows", "--out", dir_str, "--window", "2003:2010", "--scope", "alpha,bravo,charlie"]), 0);
    let from_list = fs::read_to_string(dir.join("shares_long.csv")).unwrap();

    let scope_file = tmp.path().join("region.txt");
    fs::write(&scope_file, "ALPHA\nBRAVO\nCHARLIE\n").unwrap();
    assert_exit(
        &run(&["flows", "--out", dir_str, "--window", "2003:2010", "--scope", scope_file.to_str().unwrap()]),
        0,
    );
    let from_file = fs::read_to_string(dir.join("shares_long.csv")).unwrap();
    assert_eq!(from_list, from_file);
}

#[test]
fn provenance_records_inputs_and_outputs() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    write_fixture_corpus(&tmp.path().join("in.jsonl"));
    assert_exit(
        &run(&["ingest", "--input", tmp.path().join("in.jsonl").to_str().unwrap(), "--out", dir]),
        0,
    );
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run_ingest.json")).unwrap())
            .unwrap();
    assert_eq!(record["stage"], "ingest");
    assert!(record["created_utc"].as_str().unwrap().contains('T'));
    let digest = record["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
    let outputs: Vec<&str> = record["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["corpus.jsonl", "validation.csv", "baselines.csv"]);
}

#[test]
fn help_and_version_exit_zero() {
    assert_exit(&run(&["--help"]), 0);
    assert_exit(&run(&["--version"]), 0);
    // a missing subcommand is a usage error
    assert_exit(&run(&[]), 1);
}
