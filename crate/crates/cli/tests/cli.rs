use std::path::PathBuf;
use std::process::{Command, Output};

use brdg::formula::{Class, QFFormula, Signature};
use brdg::io::{ModelDoc, StructureDoc};
use brdg::oracle::{is_member, Oracle};
use brdg::structure::check_certificate;
use serde_json::Value;

fn fixture(rel: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    p.to_str().unwrap().to_string()
}

fn brdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brdg")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    let text = stdout(o);
    assert_eq!(text.lines().count(), 1, "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], 1);
    v
}

#[test]
fn residuation_is_valid() {
    let o = brdg(&["valid", "--class", "brdg", "--file", &fixture("formulas/dlrg1.fml")]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("valid"));
}

#[test]
fn n5_is_refused_at_separation() {
    let o = brdg(&["certify", "--class", "brdg", "--structure", &fixture("structures/n5.json")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("separation (D) fails: (c,a)"), "{}", stdout(&o));
    let o = brdg(&["--json", "certify", "--structure", &fixture("structures/n5.json")]);
    let v = json(&o);
    assert_eq!(v["result"], "refused");
    assert_eq!(v["stage"], "separation");
    assert_eq!(v["reason"], "separation (D) fails: (c,a)");
}

#[test]
fn contradiction_is_unsat() {
    let o = brdg(&["sat", "--class", "brdg", "--file", &fixture("formulas/contradiction.fml")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("unsat"));
}

#[test]
fn witness_file_replays() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    let o = brdg(&[
        "sat",
        "--class",
        "brdg",
        "--file",
        &fixture("formulas/noncommutative.fml"),
        "--witness",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let doc = ModelDoc::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc.schema, 1);
    let (s, _) = doc.structure.to_structure().unwrap();
    let cert = doc.certificate.to_certificate().unwrap();
    assert!(check_certificate(&s, &cert));
    let sig = Signature::of_class(Class::Brdg);
    let phi = QFFormula::parse("!(x * y = y * x)", sig).unwrap();
    let v: Vec<usize> = phi.var_names().iter().map(|n| doc.valuation[n]).collect();
    assert_eq!(phi.evaluate(&s, &v), brdg::formula::Evaluation::Satisfied);
}

#[test]
fn invalid_sentence_has_a_countermodel() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let args = ["valid", "--class", "brdg", "--file", &fixture("formulas/square_increasing.fml")];
    let o = brdg(&[&args[..], &["--witness", path.to_str().unwrap(), "--json"]].concat());
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["result"], "invalid");
    assert!(v["countermodel"]["structure"]["carrier"].as_u64().unwrap() >= 2);
    assert!(path.exists());
    let o = brdg(&[&args[..], &["--prop", "P3"]].concat());
    assert_eq!(code(&o), 0);
}

#[test]
fn json_is_independent_of_jobs() {
    let formulas = [
        "!(x * y = y * x)",
        "(x <= y) & !(y <= x) & !(x * y = x)",
        "!(x \\ (y * z) <= (x \\ y) * z) & !(x = 0)",
        "!(x * (y * z) = (x * y) * z)",
    ];
    for f in formulas {
        let run = |jobs: &str| stdout(&brdg(&["--json", "--jobs", jobs, "sat", "--class", "brdg", "--formula", f]));
        let one = run("1");
        assert!(one.contains("\"schema\":1"), "{one}");
        assert_eq!(one, run("4"), "{f}");
        assert_eq!(one, run("2"), "{f}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&brdg(&[])), 2);
    assert_eq!(code(&brdg(&["sat", "--class", "brdg"])), 2);
    assert_eq!(code(&brdg(&["sat", "--class", "nope", "--formula", "x <= y"])), 2);
    assert_eq!(code(&brdg(&["sat", "--class", "brdg", "--formula", "x <= "])), 2);
    assert_eq!(code(&brdg(&["sat", "--class", "bdo", "--formula", "x * y <= x"])), 2);
    assert_eq!(code(&brdg(&["sat", "--class", "brdg", "--prop", "P9", "--formula", "x <= y"])), 2);
    assert_eq!(code(&brdg(&["sat", "--class", "brdg", "--file", "/nonexistent.fml"])), 2);
    assert_eq!(code(&brdg(&["--jobs", "0", "sat", "--class", "brdg", "--formula", "x <= y"])), 2);
    let o = brdg(&["certify", "--class", "bdo", "--structure", &fixture("structures/n5.json")]);
    assert_eq!(code(&o), 2);
    assert_eq!(String::from_utf8(o.stderr).unwrap().lines().count(), 1);
}

#[test]
fn resource_caps_exit_3() {
    let o = brdg(&["sat", "--class", "brdg", "--formula", "x * y <= z", "--naive"]);
    assert_eq!(code(&o), 3);
    let o = brdg(&["sat", "--class", "brdg", "--formula", "x * y <= z", "--max-size", "4"]);
    assert_eq!(code(&o), 3);
    let o = brdg(&["oracle", "enumerate", "--class", "brdg", "--max-size", "9"]);
    assert_eq!(code(&o), 3);
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.json");
    let tiles: Vec<Value> = (0..5).map(|_| serde_json::json!({"left":0,"right":0,"up":0,"down":0})).collect();
    let inst = serde_json::json!({"colors": 1, "tiles": tiles, "n": 6, "firstRow": [1, 1, 1, 1, 1, 1]});
    std::fs::write(&big, inst.to_string()).unwrap();
    let o = brdg(&["tiling", "solve", "-i", big.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn naive_agrees_on_a_small_formula() {
    for f in ["!(x = 0)", "0 * 1 = 1", "!(1 * 1 = 0)"] {
        let a = brdg(&["sat", "--class", "brdg", "--formula", f, "--naive"]);
        let b = brdg(&["sat", "--class", "brdg", "--formula", f]);
        assert_eq!(code(&a), code(&b), "{f}");
    }
}

#[test]
fn certify_writes_certificates_and_checks_shuffles() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let s = fixture("structures/two_chain_prod.json");
    let o = brdg(&["certify", "--structure", &s, "--certificate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["certificate"]["family"], serde_json::json!([[1]]));
    let with_seed = |seed: &str| stdout(&brdg(&["--json", "certify", "--structure", &s, "--seed", seed]));
    let a = with_seed("1");
    let b = with_seed("2");
    assert_eq!(a.replace("\"shuffle_seed\":1", ""), b.replace("\"shuffle_seed\":2", ""));
    let o = brdg(&["certify", "--structure", &fixture("structures/under_eliminates.json")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("filter elimination"));
}

#[test]
fn oracle_streams_members() {
    let o = brdg(&["oracle", "enumerate", "--class", "brdg", "--max-size", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let expected = Oracle::new(Signature::of_class(Class::Brdg), 3).unwrap().algebras().len();
    assert_eq!(text.lines().count(), expected);
    for line in text.lines() {
        let a = StructureDoc::parse(line).unwrap().to_algebra().unwrap();
        assert!(is_member(&a, Class::Brdg, a.signature().props()), "{line}");
    }
    let o = brdg(&["oracle", "check", "--algebra", &fixture("algebras/two_chain_brdg.json")]);
    assert_eq!(code(&o), 0);
    let o = brdg(&["oracle", "sat", "--class", "brdg", "--formula", "!(x * y = y * x)", "--max-size", "2"]);
    assert_eq!(code(&o), 1);
    let o = brdg(&["oracle", "sat", "--class", "brdg", "--formula", "!(x * y = y * x)", "--max-size", "3"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn tiling_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phi.fml");
    let t = fixture("tiling/eloise_first_move_n1.json");
    let o = brdg(&["tiling", "gen", "-i", &t, "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    QFFormula::parse(&text, Signature::of_class(Class::Bdo)).unwrap();
    assert_eq!(code(&brdg(&["tiling", "solve", "-i", &t])), 0);
    let v = json(&brdg(&["--json", "tiling", "solve", "-i", &fixture("tiling/endless_play_n1.json")]));
    assert_eq!(v["result"], "abelard_wins");
    for name in ["eloise_first_move_n1", "eloise_stuck_n1"] {
        let o = brdg(&["--json", "tiling", "roundtrip", "-i", &fixture(&format!("tiling/{name}.json"))]);
        assert_eq!(code(&o), 0, "{name}");
        assert_eq!(json(&o)["consistent"], true);
    }
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"colors":1,"tiles":[{"left":0,"right":0,"up":0,"down":0}],"n":1,"firstRow":[1]}"#).unwrap();
    assert_eq!(code(&brdg(&["tiling", "solve", "-i", bad.to_str().unwrap()])), 2);
}
