use std::io::Write;
use std::process::{Command, Output};

use fpsym::catalog::{commutator_table, diff_tables, load_point_generators, CommutatorTable, TableExport};
use fpsym::fpe::{FormalRule, FpeParams};
use fpsym::report::{Outcome, Report, CONFIG_ENV};

fn fpsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpsym")).args(args).env_remove(CONFIG_ENV).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn structured(args: &[&str]) -> (i32, Report) {
    let mut all = args.to_vec();
    all.extend(["--format", "structured"]);
    let o = fpsym(&all);
    let r = Report::from_structured(&String::from_utf8_lossy(&o.stdout)).unwrap();
    (code(&o), r)
}

#[test]
fn exit_codes() {
    assert_eq!(code(&fpsym(&["verify"])), 0);
    assert_eq!(code(&fpsym(&["check", "--claim", "g1"])), 0);
    assert_eq!(code(&fpsym(&["check", "--claim", "y1-final-solution"])), 1);
    assert_eq!(code(&fpsym(&["determining", "--system", "auxiliary", "--strict"])), 1);
    // overflows on the grid and escapes the canonical class
    assert_eq!(code(&fpsym(&["check", "--expr", "exp(exp(exp(10*t+10)))/(x^2+1)"])), 3);
    assert_eq!(code(&fpsym(&["check", "--expr", "u"])), 2);
    assert_eq!(code(&fpsym(&["check", "--claim", "nope"])), 2);
    assert_eq!(code(&fpsym(&["--a2", "0", "verify"])), 2);
    assert_eq!(code(&fpsym(&["determining", "--system", "heat"])), 2);
    assert_eq!(code(&fpsym(&["bogus"])), 2);
    assert_eq!(code(&fpsym(&["generate", "--seed", "exp(-a2*t)", "--ops", "F9"])), 2);
}

#[test]
fn generate_reports_the_chain() {
    let (c, r) = structured(&["generate", "--seed", "exp(-a2*t)", "--ops", "F1,F1"]);
    assert_eq!(c, 0);
    let ids: Vec<_> = r.items.iter().map(|i| i.id.as_str()).collect();
    assert_eq!(ids, ["seed.F1", "seed.F1.F1"]);
}

#[test]
fn config_file_is_read_and_flags_win() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "a1 = \"0\"\na2 = \"2\"\nformat = \"structured\"\nseed = 42").unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["check", "--expr", "exp(-a2*t)*x"];
        args.extend(extra);
        Command::new(env!("CARGO_BIN_EXE_fpsym")).args(&args).env(CONFIG_ENV, f.path()).output().unwrap()
    };
    let o = run(&[]);
    let r = Report::from_structured(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert_eq!(r.inputs["config"]["seed"], 42);
    assert!(r.inputs["config"]["a2"].to_string().contains('2'), "{}", r.inputs);
    let o = run(&["--seed-rng", "7"]);
    let r = Report::from_structured(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert_eq!(r.inputs["config"]["seed"], 7);

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "colour = \"blue\"").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fpsym")).arg("verify").env(CONFIG_ENV, bad.path()).output().unwrap();
    assert_eq!(code(&o), 2);
}

fn strip_timing(s: &str) -> String {
    s.lines().filter(|l| !l.trim_start().starts_with("\"timing_ms\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn structured_reports_are_reproducible() {
    for args in [
        vec!["check", "--expr", "(x^2+3)/(x^2+3)*exp(-a2*t)", "--seed-rng", "9", "--format", "structured"],
        vec!["table", "--format", "structured"],
    ] {
        let a = fpsym(&args);
        let b = fpsym(&args);
        assert_eq!(strip_timing(&String::from_utf8_lossy(&a.stdout)), strip_timing(&String::from_utf8_lossy(&b.stdout)));
    }
}

#[test]
fn table_export_round_trips() {
    let (c, r) = structured(&["table"]);
    assert_eq!(c, 0);
    assert_eq!(r.items.iter().filter(|i| i.outcome == Outcome::Pass).count(), 21);
    let item = r.items.iter().find(|i| i.id == "table-export").unwrap();
    let export: TableExport = serde_json::from_value(item.detail["table"].clone()).unwrap();
    let imported = CommutatorTable::import(&export).unwrap();
    let p = FpeParams::symbolic();
    let computed = commutator_table(&load_point_generators(&p).unwrap()).unwrap();
    assert!(diff_tables(&imported, &computed, Some(&FormalRule::fpe("alpha", &p))).is_empty());
    assert_eq!(imported.export(), computed.export());
}
