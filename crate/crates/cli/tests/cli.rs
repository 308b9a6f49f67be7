use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const PB: &str = r#"{"issues":[{"id":"E1","amount":"10"},{"id":"E2","amount":"4"}],
"claimants":[{"id":"C1","claim":"8","issues":["E1"]},{"id":"C2","claim":"6","issues":["E1","E2"]}]}"#;

struct Run {
    code: i32,
    stdout: Value,
    stderr: Value,
}

fn cpa(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } =
        Command::new(env!("CARGO_BIN_EXE_cpa")).args(args).output().expect("binary runs");
    let parse = |b: &[u8]| serde_json::from_slice(b).unwrap_or(Value::Null);
    Run { code: status.code().unwrap(), stdout: parse(&stdout), stderr: parse(&stderr) }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_with_trace() {
    let dir = TempDir::new().unwrap();
    let pb = write(&dir, "pb.json", PB);
    let r = cpa(&["solve", "--rule", "cpa", "-i", s(&pb), "--trace"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout["allocation"], json!({"C1": "6", "C2": "4"}));
    let steps = r.stdout["trace"]["steps"].as_array().unwrap();
    let lambdas: Vec<&str> = steps.iter().map(|s| s["lambda"].as_str().unwrap()).collect();
    assert_eq!(lambdas, ["2/3", "1/4"]);
    assert_eq!(r.stdout["trace"]["rho"], json!(["2/3", "3/4"]));
    assert_eq!(steps[0]["deactivated_claimants"][0]["cause"], "issue_exhausted");
    assert_eq!(steps[1]["deactivated_claimants"][0]["cause"], "issue_exhausted");
    assert!(r.stdout["input_digest"].as_str().unwrap().starts_with("sha256:"));
    assert_eq!(r.stdout["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn allocation_keeps_declaration_order() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "p.json",
        r#"{"issues":[{"id":"E","amount":"3"}],"claimants":[
            {"id":"Z","claim":"2","issues":["E"]},{"id":"A","claim":"4","issues":["E"]}]}"#,
    );
    let text = Command::new(env!("CARGO_BIN_EXE_cpa")).args(["solve", "-i", s(&p)]).output().unwrap().stdout;
    let text = String::from_utf8(text).unwrap();
    assert!(text.find("\"Z\"").unwrap() < text.find("\"A\"").unwrap());
}

#[test]
fn rationals_are_canonical() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "p.json",
        r#"{"issues":[{"id":"E","amount":"4/6"}],"claimants":[
            {"id":"A","claim":"2","issues":["E"]},{"id":"B","claim":"2","issues":["E"]}]}"#,
    );
    let r = cpa(&["solve", "--rule", "prop", "-i", s(&p)]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout["allocation"], json!({"A": "1/3", "B": "1/3"}));
}

#[test]
fn priority_order_flag() {
    let dir = TempDir::new().unwrap();
    let pb = write(&dir, "pb.json", PB);
    let r = cpa(&["solve", "--rule", "priority", "--order", "C2,C1", "-i", s(&pb)]);
    assert_eq!(r.stdout["allocation"], json!({"C1": "6", "C2": "4"}));
    let r = cpa(&["solve", "--rule", "priority", "-i", s(&pb)]);
    assert_eq!(r.stdout["allocation"], json!({"C1": "8", "C2": "2"}));
    let r = cpa(&["solve", "--rule", "cpa", "--order", "C2,C1", "-i", s(&pb)]);
    assert_eq!((r.code, r.stderr["error"]["code"].as_str()), (2, Some("USAGE")));
}

#[test]
fn violation_exits_one_and_replays() {
    let dir = TempDir::new().unwrap();
    let pb = write(&dir, "pb.json", PB);
    let out = dir.path().join("w.json");
    let r = cpa(&["check", "--rule", "null", "--axiom", "peff", "-i", s(&pb), "-o", s(&out)]);
    assert_eq!(r.code, 1);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["verdict"]["holds"], false);
    assert_eq!(doc["verdict"]["witness"]["claimant"], "C1");

    let r = cpa(&["check", "--replay", s(&out)]);
    assert_eq!(r.code, 1);
    assert_eq!(r.stdout["replayed"], true);

    let tampered = doc.to_string().replace(r#""expected":"8""#, r#""expected":"7""#);
    let bad = write(&dir, "bad.json", &tampered);
    let r = cpa(&["check", "--replay", s(&bad)]);
    assert_eq!((r.code, r.stderr["error"]["code"].as_str()), (2, Some("DIGEST_MISMATCH")));
}

#[test]
fn holding_axiom_exits_zero() {
    let dir = TempDir::new().unwrap();
    let pb = write(&dir, "pb.json", PB);
    for axiom in ["peff", "ete", "gma", "cons", "nms", "nmrm"] {
        let r = cpa(&["check", "--rule", "cpa", "--axiom", axiom, "-i", s(&pb)]);
        assert_eq!(r.code, 0, "{axiom}");
        assert_eq!(r.stdout["verdict"]["holds"], true);
    }
}

#[test]
fn fuzzing_is_deterministic() {
    let args = ["check", "--rule", "two-phase", "--axiom", "gma", "--budget", "300", "--seed", "3"];
    let a = Command::new(env!("CARGO_BIN_EXE_cpa")).args(args).output().unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_cpa")).args(args).output().unwrap();
    assert_eq!(a.status.code(), Some(1));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn input_errors_exit_two_with_codes() {
    let dir = TempDir::new().unwrap();
    let missing = write(&dir, "m.json", r#"{"claimants":[]}"#);
    let r = cpa(&["solve", "-i", s(&missing)]);
    assert_eq!((r.code, r.stderr["error"]["code"].as_str()), (2, Some("SCHEMA_ERROR")));

    let r = cpa(&["solve", "-i", s(&dir.path().join("absent.json"))]);
    assert_eq!(r.stderr["error"]["code"], "IO_ERROR");

    let dup = write(
        &dir,
        "d.json",
        r#"{"issues":[{"id":"E","amount":"1/0"}],"claimants":[{"id":"A","claim":"2","issues":["E","F"]}]}"#,
    );
    let r = cpa(&["solve", "-i", s(&dup)]);
    assert_eq!(r.stderr["error"]["code"], "INVALID_PROBLEM");
    let codes: Vec<&str> = r.stderr["error"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["code"].as_str().unwrap())
        .collect();
    assert!(codes.contains(&"BAD_RATIONAL") && codes.contains(&"UNKNOWN_ISSUE"), "{codes:?}");

    let r = cpa(&["solve", "--bogus"]);
    assert_eq!((r.code, r.stderr["error"]["code"].as_str()), (2, Some("USAGE")));
    let r = cpa(&["solve", "--rule", "null", "--trace", "-i", s(&missing)]);
    assert_eq!(r.code, 2);
}

#[test]
fn non_binding_needs_normalize() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "p.json",
        r#"{"issues":[{"id":"E1","amount":"10"},{"id":"E2","amount":"100"}],"claimants":[
            {"id":"C1","claim":"8","issues":["E1"]},{"id":"C2","claim":"6","issues":["E1","E2"]},
            {"id":"C3","claim":"5","issues":["E2"]}]}"#,
    );
    let r = cpa(&["solve", "-i", s(&p)]);
    assert_eq!(r.code, 2);
    assert_eq!(r.stderr["error"]["violations"][0]["code"], "NON_BINDING_ISSUE");
    let r = cpa(&["solve", "-i", s(&p), "--normalize"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout["normalization"]["removed_issues"], json!(["E2"]));
    assert_eq!(r.stdout["allocation"], json!({"C1": "40/7", "C2": "30/7", "C3": "5"}));
}

#[test]
fn split_merge_round_trip() {
    let dir = TempDir::new().unwrap();
    let pb = write(&dir, "pb.json", PB);
    let split = dir.path().join("split.json");
    let r = cpa(&["split", "-i", s(&pb), "--target", "C2", "--parts", "C2a=1/2,C2b=11/2", "-o", s(&split)]);
    assert_eq!(r.code, 0);
    let r = cpa(&["solve", "-i", s(&split)]);
    assert_eq!(r.stdout["allocation"]["C1"], "6");
    let r = cpa(&["merge", "-i", s(&split), "--sources", "C2a,C2b", "--id", "C2"]);
    assert_eq!(r.stdout["problem"], serde_json::from_str::<Value>(PB).unwrap());

    let r = cpa(&["split", "-i", s(&pb), "--target", "C2", "--parts", "C2a=1,C2b=1"]);
    assert_eq!(r.stderr["error"]["code"], "TRANSFORM_ERROR");
    let r = cpa(&["merge", "-i", s(&pb), "--sources", "C1,C2"]);
    assert_eq!(r.stderr["error"]["code"], "TRANSFORM_ERROR");
}

#[test]
fn reduce_charges_the_dropped_awards() {
    let dir = TempDir::new().unwrap();
    let pb = write(&dir, "pb.json", PB);
    let r = cpa(&["reduce", "-i", s(&pb), "--keep", "C2"]);
    assert_eq!(r.code, 0);
    assert_eq!(
        r.stdout["problem"]["issues"],
        json!([{"id": "E1", "amount": "4"}, {"id": "E2", "amount": "4"}])
    );
    assert!(r.stdout.get("non_binding_issues").is_none());
    let x = write(&dir, "x.json", r#"{"C1":"2","C2":"0"}"#);
    let r = cpa(&["reduce", "-i", s(&pb), "--keep", "C2", "--allocation", s(&x)]);
    assert_eq!(r.stdout["problem"]["issues"][0], json!({"id": "E1", "amount": "8"}));
    assert_eq!(r.stdout["non_binding_issues"], json!(["E1"]));
}

#[test]
fn decompose_components() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "p.json",
        r#"{"issues":[{"id":"E1","amount":"1"},{"id":"E2","amount":"1"}],"claimants":[
            {"id":"A","claim":"2","issues":["E1"]},{"id":"B","claim":"2","issues":["E2"]}]}"#,
    );
    let r = cpa(&["decompose", "-i", s(&p)]);
    assert_eq!(r.stdout["components"].as_array().unwrap().len(), 2);
    assert_eq!(r.stdout["components"][1]["claimants"][0]["id"], "B");
}

#[test]
fn gen_output_feeds_solve() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("g.json");
    let args = ["gen", "--claimants", "3..8", "--issues", "1..3", "--density", "0.4", "--seed", "7"];
    let r = cpa(&[&args[..], &["-o", s(&out)]].concat());
    assert_eq!(r.code, 0);
    let first = std::fs::read(&out).unwrap();
    cpa(&[&args[..], &["-o", s(&out)]].concat());
    assert_eq!(first, std::fs::read(&out).unwrap());
    let r = cpa(&["solve", "-i", s(&out)]);
    assert_eq!(r.code, 0);

    let r = cpa(&["gen", "--density", "0"]);
    assert_eq!((r.code, r.stderr["error"]["code"].as_str()), (2, Some("USAGE")));
}
