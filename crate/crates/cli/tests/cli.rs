use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn corpus(path: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    root.join(path).to_string_lossy().into_owned()
}

fn stipula(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stipula"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_input(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_stipula"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const CONTRACTS: [&str; 6] = [
    "subscription",
    "licence",
    "bet",
    "purchase",
    "bike_rental",
    "rescindable",
];

#[test]
fn corpus_parses_and_checks() {
    for name in CONTRACTS {
        let path = corpus(&format!("contracts/{name}.stipula"));
        assert_eq!(code(&stipula(&["parse", &path])), 0, "{name}");
        let check = stipula(&["check", &path]);
        assert_eq!(code(&check), 0, "{name}: {}", stdout(&check));
    }
}

#[test]
fn happy_subscription_ends_with_the_refund() {
    let o = stipula(&[
        "run",
        &corpus("contracts/subscription.stipula"),
        &corpus("scenarios/subscription.happy.json"),
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    assert!(
        last.contains("asset-send") && last.contains("\"50\"") && last.contains("Buyer"),
        "{last}"
    );
}

#[test]
fn fee_before_subscribing_is_rejected_at_step_two() {
    let o = stipula(&[
        "run",
        &corpus("contracts/subscription.stipula"),
        &corpus("scenarios/subscription.fee_in_inactive.json"),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("NotEnabled at step 2"), "{}", stderr(&o));
}

#[test]
fn late_bet_is_refunded() {
    let o = stipula(&[
        "run",
        &corpus("contracts/bet.stipula"),
        &corpus("scenarios/bet.late_bet.json"),
        "--final",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("\"kind\":\"tau\""));
    assert!(out.lines().last().unwrap().contains("\"state\":\"Fail\""));
}

#[test]
fn every_golden_trace_reproduces() {
    let dir = corpus("golden");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let golden = entry.unwrap().path();
        let stem = golden
            .file_name()
            .unwrap()
            .to_string_lossy()
            .replace(".jsonl", "");
        let contract = stem.split('.').next().unwrap().to_string();
        let o = stipula(&[
            "run",
            &corpus(&format!("contracts/{contract}.stipula")),
            &corpus(&format!("scenarios/{stem}.json")),
        ]);
        assert_eq!(code(&o), 0, "{stem}: {}", stderr(&o));
        assert_eq!(stdout(&o), std::fs::read_to_string(&golden).unwrap(), "{stem}");
    }
}

#[test]
fn repl_sessions_replay_identically() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("session.json");
    let export = export.to_str().unwrap();
    let env = corpus("envs/subscription.json");
    let contract = corpus("contracts/subscription.stipula");
    let o = with_input(
        &["repl", &contract, "--env", &env, "--export", export],
        "agree\ncall Buyer annualFee 120\ncall Buyer subscribe 50\ntick 30\ncall Buyer annualFee 120\ntick 9000\ntrace\nquit\n",
    );
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("rejected: NotEnabled at step 2"), "{out}");
    assert!(out.contains("@To_Pay"), "{out}");
    let lines: Vec<&str> = out
        .lines()
        .map(|l| l.trim_start_matches("> "))
        .filter(|l| l.starts_with("{\"clock\""))
        .collect();
    let half = lines.len() / 2;
    assert_eq!(lines[..half], lines[half..]);
    let replay = stipula(&["run", &contract, export, "--env", &env]);
    assert_eq!(code(&replay), 0, "{}", stderr(&replay));
    let replayed: Vec<&str> = std::str::from_utf8(&replay.stdout).unwrap().lines().collect();
    assert_eq!(replayed, lines[half..]);
}

#[test]
fn equivalence_exit_codes() {
    let original = corpus("contracts/subscription.stipula");
    let renamed = stipula(&[
        "equiv",
        &original,
        &corpus("mutants/subscription_renamed.stipula"),
        "--env",
        &corpus("envs/subscription_renamed.json"),
        "--horizon",
        "2",
    ]);
    assert_eq!(code(&renamed), 0, "{}", stdout(&renamed));
    assert!(stdout(&renamed).starts_with("bisimilar up to horizon 2"));

    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("witness.jsonl");
    let mutant = stipula(&[
        "equiv",
        &original,
        &corpus("mutants/subscription_no_precondition.stipula"),
        "--env",
        &corpus("envs/subscription.json"),
        "--horizon",
        "2",
        "--witness-json",
        witness.to_str().unwrap(),
    ]);
    assert_eq!(code(&mutant), 1);
    let lines = std::fs::read_to_string(&witness).unwrap();
    assert!(lines
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(lines.contains("divergence"));

    let tight = stipula(&[
        "equiv",
        &original,
        &original,
        "--env",
        &corpus("envs/subscription.json"),
        "--horizon",
        "2",
        "--budget",
        "3",
    ]);
    assert_eq!(code(&tight), 3);
}

#[test]
fn incomparable_environments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("env.json");
    std::fs::write(
        &env,
        r#"{"parties": {"Editor": "e", "Buyer": "b", "Client": "c", "Provider": "p"},
            "fields": {"cost": [1], "deposit": [1], "price": [1]},
            "args": {"subscribe.h": [1], "annualFee.h": [1], "pay.h": [1]},
            "horizon": 1}"#,
    )
    .unwrap();
    let o = stipula(&[
        "equiv",
        &corpus("contracts/subscription.stipula"),
        &corpus("mutants/pay_then_serve.stipula"),
        "--env",
        env.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("not comparable"));
}

#[test]
fn analysis_exit_codes() {
    let overdraw = stipula(&[
        "analyze",
        &corpus("mutants/overdraw.stipula"),
        "--env",
        &corpus("envs/overdraw.json"),
        "--property",
        "asset-safety",
    ]);
    assert_eq!(code(&overdraw), 1);
    assert!(
        stdout(&overdraw).contains("stuck in @Full"),
        "{}",
        stdout(&overdraw)
    );

    let licence = stipula(&[
        "analyze",
        &corpus("contracts/licence.stipula"),
        "--env",
        &corpus("envs/licence.json"),
        "--json",
    ]);
    assert_eq!(code(&licence), 0);
    let reports: serde_json::Value = serde_json::from_slice(&licence.stdout).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 3);
    assert!(reports
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["verdict"] == "holds-within-bounds"));

    let starved = stipula(&[
        "analyze",
        &corpus("contracts/subscription.stipula"),
        "--env",
        &corpus("envs/subscription.json"),
        "--budget",
        "5",
    ]);
    assert_eq!(code(&starved), 3);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&stipula(&["frobnicate"])), 2);
    assert_eq!(code(&stipula(&["parse"])), 2);
    let seedless = stipula(&["--seedless", "parse", &corpus("contracts/bet.stipula")]);
    assert_eq!(code(&seedless), 2);
    let missing = stipula(&["parse", "/nonexistent/contract.stipula"]);
    assert_eq!(code(&missing), 2);
    assert_eq!(code(&stipula(&["--help"])), 0);
}

#[test]
fn outputs_are_byte_stable() {
    let env = corpus("envs/bet.json");
    let bet = corpus("contracts/bet.stipula");
    let sequential = stipula(&["explore", &bet, "--env", &env, "--horizon", "21", "--json"]);
    let parallel = stipula(&[
        "explore",
        &bet,
        "--env",
        &env,
        "--horizon",
        "21",
        "--json",
        "--parallel",
    ]);
    assert_eq!(code(&sequential), 0);
    assert_eq!(sequential.stdout, parallel.stdout);
    let again = stipula(&[
        "explore",
        &bet,
        "--env",
        &env,
        "--horizon",
        "21",
        "--json",
        "--parallel",
    ]);
    assert_eq!(parallel.stdout, again.stdout);

    let purchase = corpus("mutants/purchase_no_refund.stipula");
    let penv = corpus("envs/purchase.json");
    let a = stipula(&["analyze", &purchase, "--env", &penv, "--json", "--parallel"]);
    let b = stipula(&["analyze", &purchase, "--env", &penv, "--json"]);
    assert_eq!(a.stdout, b.stdout);
}
