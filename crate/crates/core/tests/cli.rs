use std::process::{Command, Output};

fn hmtrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmtrace")).args(args).output().expect("spawn hmtrace")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn table_csv_is_byte_exact() {
    let o = hmtrace(&["table", "--p", "5", "--d-max", "50", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), include_str!("fixtures/table_p5.csv"));
}

#[test]
fn thm1_single_coefficient() {
    let o = hmtrace(&["verify", "thm1", "--p", "3", "--n-max", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("n=1: 54 = 54"));
}

#[test]
fn starred_coefficients() {
    let o = hmtrace(&["coeffs", "--p", "2", "--star", "--n-max", "3", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "n,coefficient\n-1,1\n0,0\n1,4372\n2,96256\n3,1240002\n");
}

#[test]
fn json_is_versioned_and_deterministic() {
    let run = |threads: &str| {
        let o = hmtrace(&["--threads", threads, "table", "--p", "2", "--d-max", "30", "--format", "json"]);
        assert!(o.status.success());
        stdout(&o)
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    let v: serde_json::Value = serde_json::from_str(&one).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "table");

    let o = hmtrace(&["verify", "star", "--p", "3", "--window", "60", "--format", "json"]);
    assert_eq!(stdout(&o), stdout(&hmtrace(&["verify", "star", "--p", "3", "--window", "60", "--format", "json"])));
}

#[test]
fn exit_codes() {
    assert_eq!(hmtrace(&["coeffs", "--p", "7", "--n-max", "3"]).status.code(), Some(2));
    assert_eq!(hmtrace(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hmtrace(&["--prec-ceiling", "64", "faber", "--p", "2", "--m", "1"]).status.code(), Some(2));
    let o = hmtrace(&["--prec-ceiling", "128", "trace", "--p", "2", "--star", "--m", "2", "--d", "2000"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn remaining_commands() {
    let o = hmtrace(&["trace", "--p", "2", "--star", "--m", "2", "--d", "47"]);
    assert!(stdout(&o).contains("-4515675925"));
    let o = hmtrace(&["faber", "--p", "3", "--m", "3"]);
    assert_eq!(stdout(&o), "phi_3 = J^3 - 2349*J - 26016\n");
    let o = hmtrace(&["eval-cm", "--p", "2", "--form", "2,0,1", "--prec", "128", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["re"].as_str().unwrap().starts_with("1.52e+2"));
    let o = hmtrace(&["verify", "sectors", "--p", "5", "--window", "40"]);
    assert!(o.status.success());
    let o = hmtrace(&["asym", "--p", "3", "--grid", "30,31,32", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn seed_tables_and_output_file() {
    let dir = std::env::temp_dir().join(format!("hmtrace-seed-{}", std::process::id()));
    let o = hmtrace(&["table", "--seed-tables", dir.to_str().unwrap()]);
    assert!(o.status.success());
    for p in [2, 3, 5] {
        let written = std::fs::read_to_string(dir.join(format!("table_p{p}.csv"))).unwrap();
        let fixture = std::fs::read_to_string(format!("{}/tests/fixtures/table_p{p}.csv", env!("CARGO_MANIFEST_DIR"))).unwrap();
        assert_eq!(written, fixture);
    }
    let out = dir.join("faber.csv");
    let o = hmtrace(&["--output", out.to_str().unwrap(), "--format", "csv", "faber", "--p", "2", "--m", "2"]);
    assert!(o.status.success() && o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("power,coefficient\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}
