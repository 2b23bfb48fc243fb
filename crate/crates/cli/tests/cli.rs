use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hallflag")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).to_string()
}

fn temp_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hallflag-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn mgv_and_witt() {
    let o = run(&["mgv", "--rank", "3", "--dim", "14"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "(3, 6, 14) step=3 free_type=true");
    let o = run(&["witt", "--generators", "3", "--length", "3"]);
    assert_eq!(stdout(&o), "8");
    let o = run(&["mgv", "--rank", "4", "--dim", "11", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["growth_vector"], serde_json::json!([4, 10, 11]));
    assert_eq!(v["free_type"], serde_json::json!(false));
}

#[test]
fn hall_listing() {
    let o = run(&["hall", "--generators", "3", "--max-length", "3"]);
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("length 3 (8): "), "{last}");
}

#[test]
fn engel_generic_table() {
    let o = run(&["ampleness", "--rank", "2", "--dim", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("i=3 m_i=3 n_i=4 verdict=NotAmpleHyperplane"), "{text}");
    let o = run(&["ampleness", "--rank", "3", "--dim", "14", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(rows.as_array().unwrap().iter().all(|r| r["verdict"] != "NotAmpleHyperplane"));
}

#[test]
fn growth_and_slice_on_heisenberg() {
    let f = temp_file("h.frame", "dim 3\nX1 = d1\nX2 = d2 + x1*d3\n");
    let fs = f.to_str().unwrap();
    let o = run(&["growth", "--frame", fs, "--point", "0,1/2,-3", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["base_point", "dims", "step", "maximal", "free_type", "stabilized", "regular"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["dims"], serde_json::json!([2, 3]));
    assert_eq!(v["base_point"], serde_json::json!(["0", "1/2", "-3"]));
    let o = run(&["slice", "--frame", fs, "--point", "0,0,0", "--direction", "1,2,3", "--step", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[1]["verdict"], "NotAmpleHyperplane");
    for key in ["order", "m_i", "n_i", "verdict", "normal"] {
        assert!(v[0].get(key).is_some(), "missing {key}");
    }
    let o = run(&["slice", "--frame", fs, "--point", "0,0,0", "--direction", "0,0,1", "--step", "2", "--cross-check"]);
    assert!(stdout(&o).lines().all(|l| l.ends_with("verdict=TriviallyAmpleFull normal")));
}

#[test]
fn nilpotentize_round_trip() {
    let a = temp_file("engel.alg", "layers 2 1 1\nbracket e1 e2 = e3\nbracket e1 e3 = e4\n");
    let out = a.with_file_name("engel.frame");
    let o = run(&["nilpotentize", "--algebra", a.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["growth", "--frame", out.to_str().unwrap(), "--point", "0,0,0,0"]);
    assert!(stdout(&o).contains("dims (2, 3, 4)"), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    let o = run(&["mgv", "--rank", "3", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[freelie]: DomainError"), "{}", stderr(&o));
    let o = run(&["mgv", "--rank", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["mgv", "--rank", "3", "--dim", "14", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let f = temp_file("bad.frame", "dim 3\nX1 = d4\n");
    let o = run(&["growth", "--frame", f.to_str().unwrap(), "--point", "0,0,0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("IndexError") && stderr(&o).contains("line 2, column 6"), "{}", stderr(&o));
    let o = run(&["growth", "--frame", f.to_str().unwrap(), "--point", "0,1/0,0"]);
    assert_eq!(o.status.code(), Some(2));
    let m = temp_file("m.frame", "dim 3\nX1 = d1\nX2 = d2 + x1^2*d3\n");
    let o = run(&["slice", "--frame", m.to_str().unwrap(), "--point", "0,0,0", "--direction", "1,0,0", "--step", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[ampleness]: NotFormalSolution"), "{}", stderr(&o));
}

#[test]
fn check_suites() {
    let o = run(&["check", "--suite", "hall", "--seed", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("4 passed, 0 failed"));
    let o = run(&["check", "--suite", "all", "--seed", "11", "--format", "json"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().iter().all(|c| c["passed"] == true));
    // same seed, same output
    assert_eq!(stdout(&run(&["check", "--seed", "2"])), stdout(&run(&["check", "--seed", "2"])));
}
