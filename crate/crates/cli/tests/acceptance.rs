//! End-to-end acceptance: one PASS or FAIL line per criterion. Runs without
//! the test harness so the lines are always shown.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stipula::analysis::{check_asset_safety, check_liquidity, AnalysisOptions, FindingKind, Verdict};
use stipula::check::{check_all, has_errors};
use stipula::equivalence::{batch_trace, bisimilar, observable_lts, ObsLts, ObsOptions, Side, Witness};
use stipula::semantics::{
    random_walk, run_scenario, Bindings, Contract, Environment, Holder, Label, Scenario, ScenarioError,
    Trace, Walk,
};
use stipula::{parse_source, pretty_print, AssetValue, Rational};

#[path = "../../core/tests/census.rs"]
mod census;

const CONTRACTS: [&str; 6] = [
    "subscription",
    "licence",
    "bet",
    "purchase",
    "bike_rental",
    "rescindable",
];
const WALKS: u64 = 1000;
const WALK_DECISIONS: usize = 80;
const LIQUIDITY_LIMIT: Duration = Duration::from_secs(60);
const GOLDEN_COUNT: usize = 13;
const REPEATS: usize = 3;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn path(rel: &str) -> String {
    root().join(rel).to_string_lossy().into_owned()
}

fn text(rel: &str) -> String {
    std::fs::read_to_string(path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn contract(rel: &str) -> Contract {
    Contract::new(parse_source(&text(rel)).unwrap())
}

fn env(name: &str) -> Environment {
    Environment::parse(&text(&format!("envs/{name}.json"))).unwrap()
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn golden_stems() -> Vec<String> {
    let mut stems: Vec<String> = std::fs::read_dir(root().join("golden"))
        .unwrap()
        .map(|e| {
            e.unwrap()
                .path()
                .file_stem()
                .unwrap()
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    stems.sort();
    stems
}

fn golden_run(stem: &str) -> Result<Trace, ScenarioError> {
    let name = stem.split('.').next().unwrap();
    let scenario = Scenario::parse(&text(&format!("scenarios/{stem}.json"))).unwrap();
    run_scenario(
        &contract(&format!("contracts/{name}.stipula")),
        &Bindings::new(),
        &scenario,
    )
}

fn round_trip() -> Outcome {
    for name in CONTRACTS {
        let ast =
            parse_source(&text(&format!("contracts/{name}.stipula"))).map_err(|e| format!("{name}: {e}"))?;
        let printed = pretty_print(&ast);
        let again = parse_source(&printed).map_err(|e| format!("{name} reprinted: {e}"))?;
        ensure(again == ast, || format!("{name}: reparsed tree differs"))?;
        ensure(pretty_print(&again) == printed, || {
            format!("{name}: printing not idempotent")
        })?;
        let errors = check_all(&ast).iter().filter(|d| d.is_error()).count();
        ensure(!has_errors(&check_all(&ast)), || {
            format!("{name}: {errors} check errors")
        })?;
    }
    Ok(format!("{} contracts, 0 errors", CONTRACTS.len()))
}

fn goldens() -> Outcome {
    let stems = golden_stems();
    ensure(stems.len() == GOLDEN_COUNT, || {
        format!("{} golden files", stems.len())
    })?;
    for stem in &stems {
        let expected = text(&format!("golden/{stem}.jsonl"));
        let trace = golden_run(stem).map_err(|e| format!("{stem}: {e}"))?;
        ensure(trace.to_jsonl() == expected, || format!("{stem}: trace differs"))?;
    }
    Ok(format!("{} traces byte-exact", stems.len()))
}

fn conserved(walk: &Walk) -> Result<(), String> {
    let mut balance = Rational::zero();
    for (i, step) in walk.steps.iter().enumerate() {
        for label in &step.labels {
            match label {
                Label::Call { assets, .. } => {
                    for a in assets {
                        if let AssetValue::Fungible(q) = a {
                            balance = balance.add(q);
                        }
                    }
                }
                Label::AssetSend {
                    asset: AssetValue::Fungible(q),
                    ..
                } => balance = balance.sub(q),
                _ => {}
            }
        }
        let mut held = Rational::zero();
        for a in &step.config.assets {
            match a {
                AssetValue::Fungible(q) if q.is_negative() => return Err(format!("step {i}: negative")),
                AssetValue::Fungible(q) => held = held.add(q),
                AssetValue::NonFungible(t) => {
                    let slots = step
                        .config
                        .assets
                        .iter()
                        .filter(|b| matches!(b, AssetValue::NonFungible(u) if u == t))
                        .count();
                    ensure(
                        slots == 1 && step.config.tokens.get(t) == Some(&Holder::Contract),
                        || format!("step {i}: token {t:?} held {slots} times"),
                    )?;
                }
            }
        }
        for (t, h) in &step.config.tokens {
            let stored = step
                .config
                .assets
                .iter()
                .any(|a| matches!(a, AssetValue::NonFungible(u) if u == t));
            ensure(stored == (*h == Holder::Contract), || {
                format!("step {i}: token {t:?} has two holders")
            })?;
        }
        ensure(held == balance, || {
            format!("step {i}: holds {held}, expected {balance}")
        })?;
    }
    Ok(())
}

fn conservation() -> Outcome {
    let mut steps = 0;
    for name in CONTRACTS {
        let c = contract(&format!("contracts/{name}.stipula"));
        let e = env(name);
        let domains = e.domains(&c).unwrap();
        let horizon = e.horizon.unwrap();
        for seed in 0..WALKS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let walk = random_walk(&c, &domains, horizon, WALK_DECISIONS, |n| rng.gen_range(0..n));
            ensure(walk.stuck.is_none(), || format!("{name} seed {seed}: stuck"))?;
            conserved(&walk).map_err(|e| format!("{name} seed {seed}: {e}"))?;
            steps += walk.steps.len();
        }
    }
    Ok(format!(
        "{WALKS} walks x {} contracts, {steps} steps, exact",
        CONTRACTS.len()
    ))
}

fn safety() -> Outcome {
    let c = contract("mutants/overdraw.stipula");
    let e = env("overdraw");
    let report = check_asset_safety(&c, &e, &AnalysisOptions::new(e.horizon.unwrap(), 10_000)).unwrap();
    ensure(report.verdict == Verdict::Violated, || {
        format!("verdict {:?}", report.verdict)
    })?;
    let f = report.witnesses().next().ok_or("no witness")?;
    ensure(f.kind == FindingKind::Stuck, || format!("finding {:?}", f.kind))?;
    match run_scenario(&c, &e.parties, &f.scenario) {
        Err(ScenarioError::Rejected { step, error, .. })
            if error.is_stuck() && step == f.scenario.entries.len() =>
        {
            Ok(format!("stuck in @{} at step {step}: {error}", f.state))
        }
        other => Err(format!("witness replayed to {other:?}")),
    }
}

fn liquidity() -> Outcome {
    let start = Instant::now();
    let mut sizes = Vec::new();
    for name in ["licence", "purchase"] {
        let c = contract(&format!("contracts/{name}.stipula"));
        let e = env(name);
        let r = check_liquidity(&c, &e, &AnalysisOptions::new(e.horizon.unwrap(), 1_000_000)).unwrap();
        ensure(r.verdict == Verdict::HoldsWithinBounds, || format!("{name}: {r}"))?;
        sizes.push(format!("{name} holds at {}", e.horizon.unwrap()));
    }
    let c = contract("mutants/purchase_no_refund.stipula");
    let e = env("purchase");
    let r = check_liquidity(&c, &e, &AnalysisOptions::new(e.horizon.unwrap(), 1_000_000)).unwrap();
    ensure(r.verdict == Verdict::Violated, || format!("mutant: {r}"))?;
    let f = r
        .witnesses()
        .find(|f| f.kind == FindingKind::Locked && f.state == "Dispute")
        .ok_or("no locked Dispute witness")?;
    let trace = run_scenario(&c, &e.parties, &f.scenario).map_err(|e| format!("witness rejected: {e}"))?;
    ensure(
        trace.last.state_name(&c) == "Dispute" && !trace.last.assets_empty(),
        || format!("witness ends in @{}", trace.last.state_name(&c)),
    )?;
    let elapsed = start.elapsed();
    ensure(elapsed <= LIQUIDITY_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{}; mutant locked in @Dispute; {:.2?}",
        sizes.join(", "),
        elapsed
    ))
}

fn obs(c: &Contract, e: &Environment, horizon: i64) -> ObsLts {
    observable_lts(c, e, &ObsOptions::new(horizon, 200_000)).unwrap()
}

fn inequivalent(left: &str, right: &str, env_name: &str, horizon: i64) -> Result<(), String> {
    let e = env(env_name);
    let (a, b) = (
        obs(&contract(left), &e, horizon),
        obs(&contract(right), &e, horizon),
    );
    let v = bisimilar(&a, &b).unwrap();
    let w: &Witness = v
        .witness
        .as_ref()
        .ok_or_else(|| format!("{left} vs {right}: {:?}", v.verdict))?;
    let (own, other) = match w.side {
        Side::Left => (&a, &b),
        Side::Right => (&b, &a),
    };
    ensure(w.replays_on(own) && !w.replays_on(other), || {
        format!("{right}: witness does not discriminate")
    })
}

/// Reorders the labels of each tick of a trace; the agreement stays first.
fn shuffled(trace: &Trace, rng: &mut ChaCha8Rng) -> Trace {
    let agreement = |l: &Label| matches!(l, Label::Agreement { .. });
    let mut entries = Vec::new();
    for group in trace
        .entries
        .chunk_by(|a, b| a.clock == b.clock && !agreement(&a.label) && !agreement(&b.label))
    {
        let mut group = group.to_vec();
        group.shuffle(rng);
        entries.extend(group);
    }
    Trace {
        entries,
        last: trace.last.clone(),
    }
}

fn equivalence() -> Outcome {
    for (name, horizon) in [
        ("subscription", 3),
        ("licence", 2),
        ("bet", 12),
        ("purchase", 2),
        ("bike_rental", 6),
        ("rescindable", 3),
    ] {
        let c = contract(&format!("contracts/{name}.stipula"));
        let e = env(name);
        let v = bisimilar(&obs(&c, &e, horizon), &obs(&c, &e, horizon)).unwrap();
        ensure(v.bisimilar(), || format!("{name} not reflexive"))?;
    }
    let e = env("subscription_renamed");
    let twin = bisimilar(
        &obs(&contract("contracts/subscription.stipula"), &e, 3),
        &obs(&contract("mutants/subscription_renamed.stipula"), &e, 3),
    )
    .unwrap();
    ensure(twin.bisimilar(), || "renamed twin distinguished".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for stem in golden_stems() {
        let trace = golden_run(&stem).unwrap();
        let batches = batch_trace(&trace);
        for _ in 0..20 {
            ensure(batch_trace(&shuffled(&trace, &mut rng)) == batches, || {
                format!("{stem}: permutation changes the batches")
            })?;
        }
    }
    inequivalent(
        "contracts/subscription.stipula",
        "mutants/subscription_no_precondition.stipula",
        "subscription",
        2,
    )?;
    inequivalent(
        "mutants/pay_then_serve.stipula",
        "mutants/serve_then_pay.stipula",
        "payment_order",
        2,
    )?;
    Ok("reflexive on 6, twin bisimilar, batches stable, 2 pairs separated with witnesses".into())
}

fn nondeterminism() -> Outcome {
    let mut total = (0, 0);
    for h in 0..=census::HORIZON {
        let (states, moves) = census::census_matches(h)?;
        total = (states, moves);
    }
    Ok(format!(
        "horizons 0..={}: {} states, {} moves at the largest",
        census::HORIZON,
        total.0,
        total.1
    ))
}

fn cli(args: &[String]) -> (i32, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_stipula"))
        .args(args)
        .output()
        .unwrap();
    (o.status.code().unwrap_or(-1), o.stdout)
}

fn determinism() -> Outcome {
    let argv = |a: &[&str]| -> Vec<String> { a.iter().map(|s| s.to_string()).collect() };
    let bet = path("contracts/bet.stipula");
    let bet_env = path("envs/bet.json");
    let purchase = path("mutants/purchase_no_refund.stipula");
    let purchase_env = path("envs/purchase.json");
    let invocations = [
        argv(&["explore", &bet, "--env", &bet_env, "--horizon", "21", "--json"]),
        argv(&[
            "explore",
            &bet,
            "--env",
            &bet_env,
            "--horizon",
            "21",
            "--json",
            "--parallel",
        ]),
        argv(&["analyze", &purchase, "--env", &purchase_env, "--json"]),
        argv(&[
            "analyze",
            &purchase,
            "--env",
            &purchase_env,
            "--json",
            "--parallel",
        ]),
        argv(&[
            "equiv",
            &path("mutants/pay_then_serve.stipula"),
            &path("mutants/serve_then_pay.stipula"),
            "--env",
            &path("envs/payment_order.json"),
            "--json",
        ]),
        argv(&[
            "run",
            &path("contracts/bet.stipula"),
            &path("scenarios/bet.no_winner.json"),
        ]),
    ];
    for args in &invocations {
        let first = cli(args);
        for _ in 1..REPEATS {
            ensure(cli(args) == first, || format!("output of {} varies", args[0]))?;
        }
    }
    ensure(cli(&invocations[0]).1 == cli(&invocations[1]).1, || {
        "parallel explore differs".into()
    })?;
    ensure(cli(&invocations[2]).1 == cli(&invocations[3]).1, || {
        "parallel analysis differs".into()
    })?;
    Ok(format!(
        "{} invocations x {REPEATS} runs identical",
        invocations.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("corpus round-trip and checks", round_trip),
        ("golden traces", goldens),
        ("conservation", conservation),
        ("asset safety", safety),
        ("liquidity", liquidity),
        ("equivalence laws", equivalence),
        ("nondeterminism census", nondeterminism),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
