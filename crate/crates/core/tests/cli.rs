//! Black-box tests of the `coinf` binary: exit codes, text output, and the
//! JSON format.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coinf::gen::{example_omega2_witness, mumall_step_exemplar, nu_cut_example};
use coinf::mumall::{print_mumall, RootStepKind};
use coinf::text::print_witness;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coinf"))
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SYSTEM: &str = "sig f/1 g/1 a/0 ;\nrule1 : a -> f(g(a)) ;\nrule2 : g(f(x)) -> f(x) ;\n";

#[test]
fn truncate_and_reduce() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.trs", SYSTEM);
    let cyc = write(dir.path(), "cyc.term", "rec t. f(t)");
    let o = run(&["truncate", "-s", sys.to_str().unwrap(), "-d", "3", cyc.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "f(f(f(*)))\n");

    let start = write(dir.path(), "a.term", "a");
    let o = run(&[
        "reduce",
        "-s",
        sys.to_str().unwrap(),
        "--fuel",
        "20",
        "-d",
        "3",
        start.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("rule1@ε (depth 0)"), "{out}");
    assert!(out.contains("rule2@"), "{out}");
    assert!(out.ends_with("f(f(f(*)))\n"), "{out}");
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.trs", SYSTEM);
    let bad = write(dir.path(), "bad.term", "f(");
    let o = run(&["truncate", "-s", sys.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let bad_sys = write(dir.path(), "bad.trs", "sig f/1 ;\nf(x) ->\n");
    let term = write(dir.path(), "t.term", "f(f(x))");
    let o = run(&["truncate", "-s", bad_sys.to_str().unwrap(), term.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn witness_validation_and_compression() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.trs", SYSTEM);

    let ok = write(dir.path(), "refl.wit", "split @(1) { src a ; steps [] ; final lift a }");
    let o = run(&["witness-validate", "-s", sys.to_str().unwrap(), ok.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "ok\n");

    // the hat still claims `a` after a rule1 step
    let bad = write(
        dir.path(),
        "bad.wit",
        "split @(1) { src a ; steps [rule1@[]] ; final lift a }",
    );
    let o = run(&["witness-validate", "-s", sys.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("violation"), "{}", stdout(&o));

    // compressing rejects invalid witnesses up front, with the violations
    let unguarded = write(dir.path(), "loop.wit", "rec w. w");
    let o = run(&["compress", "-s", sys.to_str().unwrap(), unguarded.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("violation"), "{}", stderr(&o));

    // the ω·2 witness observes to f-towers after compression
    let (_, w) = example_omega2_witness().unwrap();
    let wit = write(dir.path(), "omega2.wit", &print_witness(&w).unwrap());
    let o = run(&["compress", "-s", sys.to_str().unwrap(), "-d", "3", wit.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("rule1@"), "{out}");
    assert!(out.ends_with("f(f(f(*)))\n"), "{out}");
}

#[test]
fn lam_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cyc = write(dir.path(), "cyc.lam", "rec t. x t");
    let o = run(&["lam", "truncate", "-d", "2", cyc.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let redex = write(dir.path(), "redex.lam", r"(\x. \y. x) a b");
    let o = run(&["lam", "reduce", redex.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("beta@"), "{out}");
    assert!(out.ends_with("a\n"), "{out}");

    let omega = write(dir.path(), "omega.lam", r"(\x. x x) (\x. x x)");
    let o = run(&["lam", "reduce", "--fuel", "50", omega.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn mumall_commands() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "one.mumall", "goal |- 1 ; one");
    let o = run(&["mumall", "check", ok.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ok"), "{}", stdout(&o));

    // c cut against c instead of ~c
    let bad = write(
        dir.path(),
        "bad.mumall",
        "goal |- ; mcut[|- c ; |- c | 1.1 ~ 2.1](*, *)",
    );
    let o = run(&["mumall", "check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let all = format!("{}{}", stdout(&o), stderr(&o));
    assert!(all.contains("uality"), "{all}");

    let ex = mumall_step_exemplar(&RootStepKind::BotOne).unwrap();
    let f = write(dir.path(), "botone.mumall", &print_mumall(&ex).unwrap());
    let o = run(&["mumall", "step", f.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l == "bot-one"), "{}", stdout(&o));

    let nu = write(dir.path(), "nucut.mumall", &print_mumall(&nu_cut_example().unwrap()).unwrap());
    let o = run(&["mumall", "elim", "-d", "3", nu.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("nu(nu(nu("), "{}", stdout(&o));

    // nothing fires on a multicut over truncation leaves
    let stuck = write(
        dir.path(),
        "stuck.mumall",
        "goal |- p ; mcut[|- p, c ; |- ~c | 1.2 ~ 2.1](*, *)",
    );
    let o = run(&["mumall", "elim", "-d", "3", stuck.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stdout(&o).contains("stuck"), "{}", stdout(&o));
}

#[test]
fn json_output_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.trs", SYSTEM);
    let cyc = write(dir.path(), "cyc.term", "rec t. f(t)");
    let o = run(&[
        "--format",
        "json",
        "truncate",
        "-s",
        sys.to_str().unwrap(),
        "-d",
        "2",
        cyc.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["truncation"], "f(f(*))");

    let a = write(dir.path(), "a.term", "a");
    let b = write(dir.path(), "b.term", "f(g(a))");
    let o = run(&[
        "--jobs",
        "2",
        "reduce",
        "-s",
        sys.to_str().unwrap(),
        "--fuel",
        "3",
        "-d",
        "2",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let truncations = out.lines().filter(|l| !l.contains('@')).count();
    assert_eq!(truncations, 2, "{out}");
}
