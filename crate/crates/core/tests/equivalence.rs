use std::collections::BTreeSet;

use proptest::prelude::*;
use stipula::equivalence::{
    batch_trace, bisimilar, observable_lts, Divergence, EquivError, ObsLabel, ObsLts, ObsOptions,
    Observation, ReadyEntry, Renaming, Side, StateKind, Verdict, Witness,
};
use stipula::semantics::{Contract, Environment, Label, Trace, TraceEntry};
use stipula::{parse_source, Value};

fn corpus(path: &str) -> String {
    let full = format!("{}/../../corpus/{path}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&full).unwrap_or_else(|e| panic!("{full}: {e}"))
}

fn contract(path: &str) -> Contract {
    Contract::new(parse_source(&corpus(path)).unwrap())
}

fn env(name: &str) -> Environment {
    Environment::parse(&corpus(&format!("envs/{name}.json"))).unwrap()
}

fn lts(c: &Contract, e: &Environment, horizon: i64) -> ObsLts {
    observable_lts(c, e, &ObsOptions::new(horizon, 200_000)).unwrap()
}

fn compare(
    a: &str,
    b: &str,
    env_name: &str,
    horizon: i64,
) -> (ObsLts, ObsLts, stipula::equivalence::EquivalenceVerdict) {
    let e = env(env_name);
    let la = lts(&contract(a), &e, horizon);
    let lb = lts(&contract(b), &e, horizon);
    let verdict = bisimilar(&la, &lb).unwrap();
    (la, lb, verdict)
}

/// A witness must be followable on its own side and not on the other.
fn check_witness(w: &Witness, left: &ObsLts, right: &ObsLts) {
    let (own, other) = match w.side {
        Side::Left => (left, right),
        Side::Right => (right, left),
    };
    assert!(w.replays_on(own), "witness does not replay on its side:\n{w}");
    assert!(
        !w.replays_on(other),
        "witness also replays on the other side:\n{w}"
    );
}

#[test]
fn subscription_offers_only_subscribe_after_agreement() {
    let c = contract("contracts/subscription.stipula");
    let l = lts(&c, &env("subscription"), 1);
    let after: Vec<_> = l
        .transitions_from(0)
        .filter(|t| matches!(t.label, ObsLabel::Agreement(_)))
        .map(|t| t.to)
        .collect();
    assert_eq!(after.len(), 1);
    let expected = BTreeSet::from([ReadyEntry {
        party: "Buyer".into(),
        function: "subscribe".into(),
        values: 0,
        assets: 1,
    }]);
    assert_eq!(l.states[after[0]].ready, expected);
    assert_eq!(
        expected.iter().next().unwrap().to_string(),
        "Buyer:subscribe/0v1a"
    );
}

#[test]
fn every_corpus_contract_is_bisimilar_to_itself() {
    for (file, env_name, horizon) in [
        ("subscription", "subscription", 3),
        ("licence", "licence", 2),
        ("bet", "bet", 12),
        ("purchase", "purchase", 2),
        ("bike_rental", "bike_rental", 6),
        ("rescindable", "rescindable", 3),
    ] {
        let path = format!("contracts/{file}.stipula");
        let (_, _, v) = compare(&path, &path, env_name, horizon);
        assert_eq!(v.verdict, Verdict::Bisimilar, "{file}");
        assert!(v.witness.is_none());
    }
}

/// Purchase with a two-tick dispute deadline, so that exploration covers
/// the timeout.
fn short_purchase_env() -> Environment {
    let mut e = env("purchase");
    e.fields.insert("time_limit".into(), vec![Value::num(2)]);
    e
}

#[test]
fn purchase_is_reflexive_across_its_deadline() {
    let c = contract("contracts/purchase.stipula");
    let e = short_purchase_env();
    let a = lts(&c, &e, 4);
    let v = bisimilar(&a, &lts(&c, &e, 4)).unwrap();
    assert!(v.bisimilar());
    assert!(a.transitions.iter().any(|t| match &t.label {
        ObsLabel::Batch(items) => items
            .iter()
            .any(|o| matches!(o, Observation::ValueSend { party, .. } if party == "Seller")),
        _ => false,
    }));
}

#[test]
fn renamed_twin_is_bisimilar() {
    let (_, _, v) = compare(
        "contracts/subscription.stipula",
        "mutants/subscription_renamed.stipula",
        "subscription_renamed",
        3,
    );
    assert!(v.bisimilar(), "{:?}", v.witness);
}

#[test]
fn programmatic_renaming_is_bisimilar() {
    let original = contract("contracts/subscription.stipula");
    let renaming = Renaming {
        states: [("Inactive", "A"), ("To_Pay", "B"), ("Payed", "C"), ("End", "D")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        assets: [("wallet".to_string(), "box".to_string())].into(),
        fields: [("cost", "c1"), ("deposit", "d1")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    };
    let renamed = Contract::new(renaming.apply(&original.ast));
    let e = renaming.extend_environment(&env("subscription"));
    let v = bisimilar(&lts(&original, &e, 2), &lts(&renamed, &e, 2)).unwrap();
    assert!(v.bisimilar());
}

#[test]
fn dropping_the_deposit_check_is_observable() {
    let (la, lb, v) = compare(
        "contracts/subscription.stipula",
        "mutants/subscription_no_precondition.stipula",
        "subscription",
        2,
    );
    assert_eq!(v.verdict, Verdict::NotBisimilar);
    let w = v.witness.expect("witness");
    check_witness(&w, &la, &lb);
    assert_eq!(w.side, Side::Right);
    let text = w.to_jsonl();
    assert!(text.lines().count() >= 2);
}

#[test]
fn early_termination_shows_in_the_ready_set() {
    let (la, lb, v) = compare(
        "contracts/subscription.stipula",
        "mutants/subscription_terminate_early.stipula",
        "subscription",
        2,
    );
    assert_eq!(v.verdict, Verdict::NotBisimilar);
    let w = v.witness.expect("witness");
    check_witness(&w, &la, &lb);
    let terminate =
        |r: &BTreeSet<ReadyEntry>| r.iter().any(|e| e.function == "terminate" && e.party == "Buyer");
    match &w.divergence {
        Divergence::ReadySet { kind, ready, other } => {
            assert_eq!(*kind, StateKind::Idle);
            let with_terminate = match w.side {
                Side::Right => terminate(ready),
                Side::Left => !terminate(ready) && other.iter().all(|(_, r)| terminate(r)),
            };
            assert!(with_terminate, "{w}");
        }
        other => panic!("unexpected divergence {other:?}"),
    }
}

#[test]
fn payment_order_matters() {
    let (la, lb, v) = compare(
        "mutants/pay_then_serve.stipula",
        "mutants/serve_then_pay.stipula",
        "payment_order",
        2,
    );
    assert_eq!(v.verdict, Verdict::NotBisimilar);
    let w = v.witness.expect("witness");
    check_witness(&w, &la, &lb);
    assert!(!w.to_string().is_empty());
}

#[test]
fn different_domains_are_incomparable() {
    let c = contract("contracts/subscription.stipula");
    let mut other = env("subscription");
    other.fields.insert("cost".into(), vec![Value::num(99)]);
    let a = lts(&c, &env("subscription"), 1);
    let b = lts(&c, &other, 1);
    assert!(matches!(
        bisimilar(&a, &b),
        Err(EquivError::IncomparableEnvironments(_))
    ));
    let shorter = lts(&c, &env("subscription"), 0);
    assert!(bisimilar(&a, &shorter).is_err());
}

#[test]
fn truncated_systems_are_inconclusive() {
    let c = contract("contracts/subscription.stipula");
    let e = env("subscription");
    let small = observable_lts(&c, &e, &ObsOptions::new(3, 4)).unwrap();
    assert!(!small.complete);
    let v = bisimilar(&small, &small).unwrap();
    assert_eq!(v.verdict, Verdict::Inconclusive);
}

#[test]
fn functionless_contract_has_a_single_stable_state() {
    let c = Contract::new(parse_source("stipula Idle { agreement (A) { } => @S }").unwrap());
    let e = Environment::parse(r#"{"parties": {"A": "a"}, "fields": {}, "args": {}}"#).unwrap();
    let l = lts(&c, &e, 0);
    let idle: Vec<_> = l.states.iter().filter(|s| s.kind == StateKind::Idle).collect();
    assert_eq!(idle.len(), 1);
    assert!(idle[0].ready.is_empty());
}

#[test]
fn collecting_unreachable_events_preserves_behaviour() {
    for (file, env_name, horizon) in [
        ("subscription", "subscription", 3),
        ("purchase", "purchase", 4),
        ("bike_rental", "bike_rental", 6),
        ("bet", "bet", 21),
    ] {
        let c = contract(&format!("contracts/{file}.stipula"));
        let e = if file == "purchase" {
            short_purchase_env()
        } else {
            env(env_name)
        };
        let plain = lts(&c, &e, horizon);
        let mut options = ObsOptions::new(horizon, 200_000);
        options.prune_unreachable = true;
        let pruned = observable_lts(&c, &e, &options).unwrap();
        assert!(pruned.states.len() <= plain.states.len(), "{file}");
        assert!(bisimilar(&plain, &pruned).unwrap().bisimilar(), "{file}");
    }
}

fn observation() -> impl Strategy<Value = Label> {
    let party = prop::sample::select(vec!["A", "B", "C"]);
    prop_oneof![
        (party.clone(), prop::sample::select(vec!["f", "g"])).prop_map(|(p, f)| Label::Call {
            party: p.into(),
            function: f.into(),
            args: vec![],
            assets: vec![],
        }),
        (party, 0i64..4).prop_map(|(p, n)| Label::ValueSend {
            value: Value::num(n),
            party: p.into(),
        }),
    ]
}

proptest! {
    #[test]
    fn reordering_within_a_tick_is_invisible(
        groups in prop::collection::vec(prop::collection::vec(observation(), 0..4), 1..5),
        gaps in prop::collection::vec(1i64..3, 5),
        seed in any::<u64>(),
    ) {
        let mut clock = 0;
        let mut entries = Vec::new();
        let mut shuffled = Vec::new();
        let mut rng = seed;
        for (i, group) in groups.iter().enumerate() {
            let mut permuted = group.clone();
            for j in (1..permuted.len()).rev() {
                rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                permuted.swap(j, (rng >> 33) as usize % (j + 1));
            }
            for l in group {
                entries.push(TraceEntry { clock, label: l.clone() });
            }
            for l in permuted {
                shuffled.push(TraceEntry { clock, label: l });
            }
            clock += gaps[i];
        }
        let last = stipula::semantics::Configuration {
            phase: stipula::semantics::Phase::PreAgreement,
            clock,
            fields: vec![],
            assets: vec![],
            events: vec![],
            bindings: Default::default(),
            tokens: Default::default(),
            codes: 0,
        };
        let a = batch_trace(&Trace { entries, last: last.clone() });
        let b = batch_trace(&Trace { entries: shuffled, last });
        prop_assert_eq!(a, b);
    }
}
