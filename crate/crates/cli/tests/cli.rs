use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_collatz-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn manifest_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn validator(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(manifest_path(&format!("schemas/{name}.v1.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(name: &str, doc: &Value) {
    let v = validator(name);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{doc}");
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("single JSON document")
}

fn json_lines(out: &Output) -> Vec<Value> {
    stdout(out)
        .lines()
        .map(|l| serde_json::from_str(l).expect("JSON line"))
        .collect()
}

#[test]
fn odd_trajectory_from_seven() {
    let out = run(&["trajectory", "7", "--map", "odd", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let lines = json_lines(&out);
    for l in &lines {
        assert_valid("trajectory", l);
    }
    let rows = &lines[1..lines.len() - 1];
    let values: Vec<&str> = std::iter::once(rows[0]["from"].as_str().unwrap())
        .chain(rows.iter().map(|r| r["to"].as_str().unwrap()))
        .collect();
    assert_eq!(values, ["7", "11", "17", "13", "5", "1"]);
    let ks: Vec<u64> = rows.iter().map(|r| r["k"].as_u64().unwrap()).collect();
    assert_eq!(ks, [1, 1, 2, 3, 4]);
    assert_eq!(lines.last().unwrap()["terminated"], "reached_one");
}

#[test]
fn anb_trajectory_enters_cycle() {
    let out = run(&["trajectory", "13", "--map", "anb", "--a", "5", "--b", "1", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let footer = json_lines(&out).pop().unwrap();
    assert_eq!(footer["terminated"], "reached_cycle");
    assert_eq!(footer["cycle"], serde_json::json!(["13", "33", "83"]));
}

#[test]
fn anb_trajectory_step_limit() {
    let out = run(&["trajectory", "7", "--map", "anb", "--a", "5", "--b", "1", "--max-steps", "40", "--format", "json"]);
    assert_eq!(code(&out), 2);
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 42);
    assert_eq!(lines[40]["step"], 40);
    assert_eq!(lines[41]["terminated"], "step_limit");
    for l in &lines {
        assert_valid("trajectory", l);
    }
}

#[test]
fn general_trajectory_csv_and_text() {
    let out = run(&["trajectory", "27", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# collatz-lab "));
    assert_eq!(lines.next().unwrap(), "step,from,to,kind,k");
    assert_eq!(lines.count(), 70);

    let out = run(&["trajectory", "27"]);
    assert!(stdout(&out).contains("27 -> 41  increase"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["bogus"][..],
        &["trajectory"],
        &["trajectory", "-3"],
        &["trajectory", "4", "--map", "odd"],
        &["trajectory", "0"],
        &["montecarlo", "--level", "90"],
        &["montecarlo", "--samples", "0"],
        &["sweep", "--limit", "0"],
        &["sweep", "--limit", "10", "--threads", "0"],
        &["anb-cycles", "--a", "4"],
        &["verify", "halfsplit", "--M", "0"],
    ] {
        let out = run(args);
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn verify_examples_pass() {
    for args in [
        &["verify", "lemma7", "--k", "12"][..],
        &["verify", "eq2", "--max-x0", "9999"],
        &["verify", "bohm"],
        &["verify", "geom"],
        &["verify", "anb-eq"],
        &["verify", "anb-eq", "--a", "7"],
    ] {
        let mut full = args.to_vec();
        full.extend(["--format", "json"]);
        let out = run(&full);
        assert_eq!(code(&out), 0, "{args:?}");
        let doc = json(&out);
        assert_valid("verify", &doc);
        assert_eq!(doc["passed"], true);
        assert_eq!(doc["failures"], 0);
        assert!(doc["checks"].as_u64().unwrap() > 0);
    }
}

#[test]
fn verify_halfsplit_exact_below_m() {
    let out = run(&["verify", "halfsplit", "--M", "10", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("verify", &doc);
    let steps = doc["summary"]["steps"].as_array().unwrap();
    for s in steps.iter().filter(|s| s["step"].as_u64().unwrap() <= 9) {
        assert_eq!((s["increases"].as_u64(), s["decreases"].as_u64()), (Some(512), Some(512)));
    }

    // Both routes agree.
    let residue = run(&["verify", "halfsplit", "--M", "10", "--route", "residue", "--format", "json"]);
    assert_eq!(code(&residue), 0);
    assert_eq!(json(&residue)["summary"]["steps"], doc["summary"]["steps"]);
}

#[test]
fn verify_halfsplit_resource_limit() {
    let out = run(&["verify", "halfsplit", "--M", "40", "--direct-max-log2", "12", "--residue-max-m", "12", "--format", "json"]);
    assert_eq!(code(&out), 3);
    let doc = json(&out);
    assert_valid("verify", &doc);
    assert_eq!(doc["complete"], false);
    assert!(doc["summary"]["resource_limit"].is_string());
}

#[test]
fn montecarlo_golden() {
    for (args, golden) in [
        (&["--length", "100", "--samples", "14", "--seed", "7", "--format", "json"][..], "montecarlo-seed7.json"),
        (&["--length", "100", "--samples", "14", "--seed", "7", "--format", "csv"], "montecarlo-seed7.csv"),
        (&["--fixture", "paper14", "--format", "json"], "paper14.json"),
        (&["--fixture", "paper14", "--format", "csv"], "paper14.csv"),
    ] {
        let mut full = vec!["montecarlo"];
        full.extend(args);
        let out = run(&full);
        assert_eq!(code(&out), 0, "{golden}");
        let expected = std::fs::read_to_string(manifest_path(&format!("tests/golden/{golden}"))).unwrap();
        assert_eq!(stdout(&out), expected, "{golden}");
    }
}

#[test]
fn montecarlo_documents_validate() {
    let doc = json(&run(&["montecarlo", "--length", "100", "--samples", "14", "--seed", "7", "--format", "json"]));
    assert_valid("montecarlo", &doc);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 14);
    assert_eq!(doc["config"]["params"]["seed"], 7);

    let doc = json(&run(&["montecarlo", "--fixture", "paper14", "--format", "json", "--interval", "t", "--level", "99"]));
    assert_valid("montecarlo", &doc);
    let mean = doc["summary"]["mean_one_plus_xi"].as_f64().unwrap();
    assert!((mean - 2.0789).abs() < 1e-4);
    assert_eq!(doc["fixture"]["published_contains_mean_one_plus_xi"], false);
}

#[test]
fn montecarlo_large_batch_mean() {
    let out = run(&["montecarlo", "--length", "10000", "--samples", "1000", "--seed", "1", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let mean = doc["summary"]["mean_xi"].as_f64().unwrap();
    assert!((0.98..=1.02).contains(&mean), "{mean}");
}

#[test]
fn montecarlo_output_file_matches_stdout_rows() {
    let dir = std::env::temp_dir().join(format!("collatz-lab-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mc.json");
    let out = run(&["montecarlo", "--seed", "3", "--format", "json", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let piped = json(&run(&["montecarlo", "--seed", "3", "--format", "json"]));
    assert_eq!(file["rows"], piped["rows"]);
    assert_eq!(file["config"]["output"], path.to_str().unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_trivial_and_schema() {
    let out = run(&["sweep", "--limit", "1", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("sweep", &doc);
    assert_eq!(doc["summary"]["verified"], 1);

    let out = run(&["sweep", "--limit", "1000000", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("sweep", &doc);
    assert_eq!(doc["summary"]["verified"], 1_000_000);
    assert_eq!(doc["summary"]["max_total_stopping_time"]["at"], 837_799);
}

#[test]
fn sweep_ten_million() {
    let out = run(&["sweep", "--limit", "10000000"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("verified 10000000 of 10000000"));
}

#[test]
fn sweep_step_limit_exit_two() {
    let out = run(&["sweep", "--limit", "30", "--max-steps", "10", "--format", "json"]);
    assert_eq!(code(&out), 2);
    let doc = json(&out);
    assert_valid("sweep", &doc);
    let slow: Vec<u64> = (1..=30u64)
        .filter(|&x| {
            let (mut v, mut steps) = (x, 0);
            while v != 1 {
                v = if v % 2 == 0 { v / 2 } else { (3 * v + 1) / 2 };
                steps += 1;
            }
            steps > 10
        })
        .collect();
    assert!(slow.contains(&27));
    assert_eq!(doc["summary"]["failures"], serde_json::json!(slow));
    assert_eq!(doc["summary"]["verified"], 30 - slow.len());
}

#[test]
fn sweep_rows_validate() {
    let out = run(&["sweep", "--limit", "200", "--emit-rows", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 202);
    for l in &lines {
        assert_valid("sweep-rows", l);
    }
    assert_eq!(lines[27]["x"], 27);
    assert_eq!(lines[27]["total_stopping_time"], 70);
}

#[test]
fn output_identical_across_runs_and_threads() {
    let cases: [&[&str]; 4] = [
        &["sweep", "--limit", "300000", "--format", "json"],
        &["sweep", "--limit", "70000", "--emit-rows", "--format", "csv"],
        &["montecarlo", "--length", "500", "--samples", "40", "--seed", "11", "--format", "json"],
        &["anb-cycles", "--max-start", "99", "--max-steps", "300", "--format", "json"],
    ];
    for args in cases {
        let reference = run(args);
        for threads in ["1", "3"] {
            let out = bin().args(args).env("RAYON_NUM_THREADS", threads).output().unwrap();
            assert_eq!(out.stdout, reference.stdout, "{args:?} with {threads} threads");
            assert_eq!(out.status.code(), reference.status.code());
        }
        if args[0] == "sweep" {
            for threads in ["1", "2", "5"] {
                let mut full = args.to_vec();
                full.extend(["--threads", threads]);
                assert_eq!(run(&full).stdout, reference.stdout, "{args:?} --threads {threads}");
            }
        }
    }
}

#[test]
fn anb_cycles_catalog() {
    let out = run(&["anb-cycles", "--a", "5", "--b", "1", "--max-start", "99", "--format", "json"]);
    assert_eq!(code(&out), 2, "most 5n+1 starts stay unresolved within the budget");
    let doc = json(&out);
    assert_valid("anb-cycles", &doc);
    let members: Vec<Value> = doc["cycles"].as_array().unwrap().iter().map(|c| c["members"].clone()).collect();
    assert_eq!(
        members,
        [
            serde_json::json!(["1", "3"]),
            serde_json::json!(["13", "33", "83"]),
            serde_json::json!(["17", "43", "27"]),
        ]
    );
    for c in doc["cycles"].as_array().unwrap() {
        assert_eq!(c["verified"], true);
        assert_eq!(c["product_residue"], "0");
        assert_eq!(c["product_lhs"], c["product_rhs"]);
    }

    let out = run(&["anb-cycles", "--a", "3", "--b", "1", "--max-start", "99", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("anb-cycles", &doc);
    assert_eq!(doc["cycles"].as_array().unwrap().len(), 1);
    assert_eq!(doc["cycles"][0]["basin"], 50);
}
