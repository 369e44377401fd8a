use std::path::{Path, PathBuf};
use std::process::Command;

use stratcert::circuit::{Circuit, CircuitBuilder, Lit};
use stratcert::family::{counter, counter_fixture, free_running_counter};
use stratcert::format::{print_aiger, print_extended};
use stratcert::mutation::{mutate, Mutation};
use stratcert::witness::build_witness;
use stratcert_cli::run;

const GOLDEN_WITNESS: &str = include_str!("../../core/tests/fixtures/counter_fixture_k2.aag");

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn stratcert(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("stratcert").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &Path, name: &str, c: &Circuit) -> String {
    let path = dir.join(name);
    std::fs::write(&path, print_extended(c)).unwrap();
    path.to_str().unwrap().to_owned()
}

fn status_lines<'a>(text: &'a str, status: &str) -> Vec<&'a str> {
    text.lines()
        .filter(|l| l.starts_with("check=") && l.contains(&format!("status={status} ")))
        .collect()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(stratcert(&[]).code, 2);
    assert_eq!(stratcert(&["check"]).code, 2);
    assert_eq!(stratcert(&["check", "x.aag", "--bogus"]).code, 2);
    assert_eq!(stratcert(&["witness", "x.aag", "-k", "0"]).code, 2);
    let missing = stratcert(&["check", "/nonexistent/model.aag"]);
    assert_eq!(missing.code, 2);
    assert!(missing.err.contains("cannot read"));
    assert_eq!(stratcert(&["--help"]).code, 0);
}

#[test]
fn malformed_model_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.aag");
    std::fs::write(&path, "aag 1 0 0 0 0\n").unwrap();
    let r = stratcert(&["check", path.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("cannot parse"), "{}", r.err);
}

#[test]
fn check_reports_k_and_counterexamples() {
    let dir = tempfile::tempdir().unwrap();
    let counter_path = write(dir.path(), "counter.aag", &counter(4, 3, 6));
    let r = stratcert(&["check", &counter_path]);
    assert_eq!(r.code, 0);
    assert!(r.out.lines().any(|l| l == "proved k=4"), "{}", r.out);

    let r = stratcert(&["check", &counter_path, "--kmax", "3"]);
    assert_eq!(r.code, 3);
    assert!(r.out.contains("bound reached kmax=3"));

    let free = write(dir.path(), "free.aag", &free_running_counter());
    let r = stratcert(&["check", &free]);
    assert_eq!(r.code, 1);
    assert!(r.out.lines().any(|l| l == "counterexample length 4"));
    assert!(r.out.contains("frame 3: latches=11"));

    let mut b = CircuitBuilder::new();
    b.latch(None);
    let trivial = write(dir.path(), "true.aag", &b.finish(Lit::TRUE));
    let r = stratcert(&["check", &trivial]);
    assert_eq!(r.code, 0);
    assert!(r.out.lines().any(|l| l == "proved k=1"));

    let r = stratcert(&["check", &counter_path, "--report", "json"]);
    let json: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(json["verdict"], "proved");
    assert_eq!(json["k"], 4);
}

#[test]
fn witness_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "fixture.aag", &counter_fixture());
    let r = stratcert(&["witness", &model, "-k", "2"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out, GOLDEN_WITNESS);
    assert!(r.err.contains("latches=6"));

    let out = dir.path().join("w.aag");
    let r = stratcert(&["witness", &model, "-k", "2", "-o", out.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert_eq!(std::fs::read_to_string(out).unwrap(), GOLDEN_WITNESS);
}

#[test]
fn witness_k1_can_be_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "fixture.aag", &counter_fixture());
    let r = stratcert(&["witness", &model, "-k", "1", "--skip-k1"]);
    assert_eq!(r.code, 0);
    assert!(r.out.is_empty());
    assert!(r.err.contains("no witness"));
    let r = stratcert(&["witness", &model, "-k", "1"]);
    assert_eq!(r.code, 0);
    assert!(r.out.starts_with("aag "));
}

#[test]
fn non_stratified_model_exits_2_with_cycle() {
    let mut b = CircuitBuilder::new();
    let x = b.latch(Some("x"));
    let y = b.latch(Some("y"));
    b.set_reset(x, y);
    b.set_reset(y, !x);
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "cyclic.aag", &b.finish(Lit::TRUE));
    let r = stratcert(&["witness", &model, "-k", "2"]);
    assert_eq!(r.code, 2);
    assert!(
        r.err.contains("x -> y -> x") || r.err.contains("y -> x -> y"),
        "{}",
        r.err
    );
}

#[test]
fn certify_fixture_passes_all_checks() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "fixture.aag", &counter_fixture());
    let witness = dir.path().join("w.aag");
    std::fs::write(&witness, GOLDEN_WITNESS).unwrap();
    let r = stratcert(&["certify", &model, witness.to_str().unwrap(), "-k", "2"]);
    assert_eq!(r.code, 0, "{}{}", r.out, r.err);
    assert_eq!(status_lines(&r.out, "PASS").len(), 7, "{}", r.out);
    assert!(r.out.lines().any(|l| l == "verdict=CERTIFIED"));
    assert!(r
        .out
        .lines()
        .filter(|l| l.starts_with("check="))
        .all(|l| l.contains("seconds=")));
}

#[test]
fn mutated_witness_is_rejected() {
    let c = counter_fixture();
    let w = build_witness(&c, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "fixture.aag", &c);
    let mutant = write(dir.path(), "mutant.aag", &mutate(&c, &w, Mutation::DropPart(4)));
    let r = stratcert(&["certify", &model, &mutant, "-k", "2"]);
    assert_eq!(r.code, 1);
    let failed = status_lines(&r.out, "FAIL");
    assert!(
        failed
            .iter()
            .any(|l| l.starts_with("check=prop ") || l.starts_with("check=consec ")),
        "{}",
        r.out
    );
    assert!(r.out.contains("  counterexample "));
}

#[test]
fn pipeline_matches_stepwise_run() {
    let dir = tempfile::tempdir().unwrap();
    for (name, c) in [
        ("a", counter(4, 3, 6)),
        ("b", counter_fixture()),
        ("c", counter(5, 7, 9)),
    ] {
        let model = write(dir.path(), &format!("{name}.aag"), &c);
        let check = stratcert(&["check", &model]);
        let k = check
            .out
            .lines()
            .find_map(|l| l.strip_prefix("proved k="))
            .unwrap()
            .to_owned();
        let witness = dir.path().join(format!("{name}.w.aag"));
        assert_eq!(
            stratcert(&["witness", &model, "-k", &k, "-o", witness.to_str().unwrap()]).code,
            0
        );
        let stepwise = stratcert(&[
            "certify",
            &model,
            witness.to_str().unwrap(),
            "-k",
            &k,
            "--report",
            "json",
        ]);
        let piped = stratcert(&["certify", &model, "--pipeline", "--report", "json"]);
        assert_eq!(stepwise.code, piped.code);
        let a: serde_json::Value = serde_json::from_str(&stepwise.out).unwrap();
        let b: serde_json::Value = serde_json::from_str(&piped.out).unwrap();
        assert_eq!(a["verdict"], b["verdict"]);
        assert_eq!(a["k"], b["k"]);
        let statuses = |v: &serde_json::Value| -> Vec<String> {
            v["checks"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| c["status"].to_string())
                .collect()
        };
        assert_eq!(statuses(&a), statuses(&b));
    }
}

#[test]
fn pipeline_on_unsafe_model_reports_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "free.aag", &free_running_counter());
    let r = stratcert(&["certify", &model, "--pipeline"]);
    assert_eq!(r.code, 1);
    assert!(r.out.contains("counterexample length 4"));
}

#[test]
fn skip_k1_certifies_the_model_itself() {
    let mut b = CircuitBuilder::new();
    let l = b.latch(Some("l"));
    b.set_next(l, Lit::FALSE);
    let c = b.finish(!l);
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "k1.aag", &c);
    let r = stratcert(&["certify", &model, "--pipeline", "--skip-k1", "--report", "json"]);
    assert_eq!(r.code, 0, "{}", r.out);
    let json: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(json["k"], 1);
    assert_eq!(json["verdict"], "CERTIFIED");
}

#[test]
fn dump_cnf_writes_one_file_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "fixture.aag", &counter_fixture());
    let dump = dir.path().join("cnf");
    let r = stratcert(&[
        "certify",
        &model,
        "--pipeline",
        "--dump-cnf",
        dump.to_str().unwrap(),
        "--jobs",
        "3",
    ]);
    assert_eq!(r.code, 0);
    let mut names: Vec<String> = std::fs::read_dir(&dump)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "consec.cnf",
            "consist.cnf",
            "init.cnf",
            "prop.cnf",
            "reset.cnf",
            "trans.cnf"
        ]
    );
    for name in names {
        let text = std::fs::read_to_string(dump.join(&name)).unwrap();
        let f = stratcert::encode::parse_dimacs(&text).unwrap();
        let outcome = stratcert::sat::solve(&f, stratcert::sat::Budget::unlimited()).unwrap();
        assert_eq!(outcome.status, stratcert::sat::SatStatus::Unsat, "{name}");
    }
}

#[test]
fn mapping_file_is_required_for_stripped_witness() {
    let c = counter_fixture();
    let w = build_witness(&c, 2).unwrap();
    let mut stripped = print_aiger(&w.circuit).unwrap();
    stripped.truncate(stripped.find("\nl0 ").unwrap() + 1);
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "fixture.aag", &c);
    let witness = dir.path().join("stripped.aag");
    std::fs::write(&witness, stripped).unwrap();
    let r = stratcert(&["certify", &model, witness.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("mapping"), "{}", r.err);

    let mapping = dir.path().join("map.txt");
    std::fs::write(&mapping, "# model witness\n0 0\n1 1\n").unwrap();
    let r = stratcert(&[
        "certify",
        &model,
        witness.to_str().unwrap(),
        "--mapping",
        mapping.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.out);

    std::fs::write(&mapping, "0 1\n1 0\n").unwrap();
    let r = stratcert(&[
        "certify",
        &model,
        witness.to_str().unwrap(),
        "--mapping",
        mapping.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 1);
}

#[test]
fn exhausted_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let c = counter(6, 3, 40);
    let model = write(dir.path(), "big.aag", &c);
    let witness = write(dir.path(), "big.w.aag", &build_witness(&c, 38).unwrap().circuit);
    let r = stratcert(&["certify", &model, &witness, "--max-conflicts", "1"]);
    assert_eq!(r.code, 3, "{}", r.out);
    assert!(r.out.contains("status=INDETERMINATE"));
    assert!(r.out.contains("verdict=INDETERMINATE"));
}

#[test]
fn json_report_conforms_to_schema() {
    let schema = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/cert-report.schema.json");
    let schema_json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&schema).unwrap()).unwrap();
    let required: Vec<&str> = schema_json["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();

    let dir = tempfile::tempdir().unwrap();
    let c = counter(4, 3, 6);
    let model = write(dir.path(), "counter.aag", &c);
    let mut reports: Vec<PathBuf> = Vec::new();
    for (k, name) in [(4, "ok"), (3, "fail")] {
        let witness = write(
            dir.path(),
            &format!("{name}.w.aag"),
            &build_witness(&c, k).unwrap().circuit,
        );
        let r = stratcert(&["certify", &model, &witness, "--report", "json"]);
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, &r.out).unwrap();
        let value: serde_json::Value = serde_json::from_str(&r.out).unwrap();
        for field in &required {
            assert!(value.get(field).is_some(), "missing {field}");
        }
        reports.push(path);
    }

    let probe = Command::new("python3").args(["-c", "import jsonschema"]).status();
    if !probe.is_ok_and(|s| s.success()) {
        eprintln!("python3 jsonschema not available; validated required fields only");
        return;
    }
    for report in reports {
        let script = "import json,sys,jsonschema; jsonschema.validate(json.load(open(sys.argv[2])), json.load(open(sys.argv[1])))";
        let status = Command::new("python3")
            .args(["-c", script, schema.to_str().unwrap(), report.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success(), "{} does not match the schema", report.display());
    }
}

#[test]
fn fuzz_finds_no_discrepancies() {
    let r = stratcert(&["fuzz", "--count", "60", "--jobs", "2", "--seed", "1000"]);
    assert_eq!(r.code, 0, "{}", r.out);
    let summary = r.out.lines().last().unwrap();
    assert!(
        summary.starts_with("seeds=60 ") && summary.ends_with("discrepancies=0"),
        "{summary}"
    );
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_stratcert");
    let dir = tempfile::tempdir().unwrap();
    let safe = write(dir.path(), "fixture.aag", &counter_fixture());
    let free = write(dir.path(), "free.aag", &free_running_counter());
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["certify", &safe, "--pipeline"]), 0);
    assert_eq!(code(&["check", &free]), 1);
    assert_eq!(code(&["check", "--kmax", "1", &safe]), 3);
    assert_eq!(code(&["certify"]), 2);
}
