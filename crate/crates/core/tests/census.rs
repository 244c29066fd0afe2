//! The explorer's branching on a contract with two events due at the same
//! tick and two always-permitted calls, against a direct enumeration of
//! who acts, which event fires first and whether time passes.

use std::collections::BTreeSet;

use stipula::parse_source;
use stipula::semantics::{explore, Action, Contract, Environment, ExploreOptions, Lts, Phase};

pub const HORIZON: i64 = 3;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Abstract {
    /// "pre", "Init" or "Open".
    pub phase: String,
    pub clock: i64,
    /// `(handler index, trigger)`, sorted.
    pub pending: Vec<(u32, i64)>,
}

pub type Move = (Abstract, String, Abstract);

fn at(phase: &str, clock: i64, mut pending: Vec<(u32, i64)>) -> Abstract {
    pending.sort();
    Abstract {
        phase: phase.into(),
        clock,
        pending,
    }
}

/// Every transition of the census contract up to `horizon`, enumerated by
/// hand from the rules: calls are possible only when no event is ready,
/// ready events fire in any order, and time passes below the horizon.
pub fn enumerate(horizon: i64) -> (BTreeSet<Abstract>, Vec<Move>) {
    let mut states = BTreeSet::new();
    let mut moves = Vec::new();
    let start = at("pre", 0, vec![]);
    let mut todo = vec![start];
    while let Some(s) = todo.pop() {
        if !states.insert(s.clone()) {
            continue;
        }
        let mut go = |label: String, to: Abstract| {
            moves.push((s.clone(), label, to.clone()));
            todo.push(to);
        };
        match s.phase.as_str() {
            "pre" => go("agree".into(), at("Init", s.clock, vec![])),
            "Init" => {
                go(
                    "call A.start".into(),
                    at("Open", s.clock, vec![(0, s.clock + 1), (1, s.clock + 1)]),
                );
                if s.clock < horizon {
                    go("tick".into(), at("Init", s.clock + 1, vec![]));
                }
            }
            _ => {
                let ready: Vec<_> = s.pending.iter().filter(|(_, t)| *t <= s.clock).collect();
                if ready.is_empty() {
                    go("call A.f".into(), s.clone());
                    go("call B.g".into(), s.clone());
                    if s.clock < horizon {
                        go("tick".into(), at("Open", s.clock + 1, s.pending.clone()));
                    }
                } else {
                    for &&(site, trigger) in &ready {
                        let rest = s
                            .pending
                            .iter()
                            .copied()
                            .filter(|&e| e != (site, trigger))
                            .collect();
                        go(format!("fire {site}"), at("Open", s.clock, rest));
                    }
                }
            }
        }
    }
    moves.sort();
    (states, moves)
}

pub fn contract() -> Contract {
    let path = format!(
        "{}/../../corpus/mutants/census.stipula",
        env!("CARGO_MANIFEST_DIR")
    );
    Contract::new(parse_source(&std::fs::read_to_string(path).unwrap()).unwrap())
}

pub fn explored(horizon: i64) -> (Contract, Lts) {
    let c = contract();
    let env = Environment::parse(r#"{"parties": {"A": "a", "B": "b"}, "fields": {}, "args": {}}"#).unwrap();
    let domains = env.domains(&c).unwrap();
    let lts = explore(&c, &domains, &ExploreOptions::new(horizon, 100_000));
    (c, lts)
}

pub fn abstraction(c: &Contract, lts: &Lts) -> (BTreeSet<Abstract>, Vec<Move>, usize) {
    let view = |n: u32| {
        let config = &lts.node(n).config;
        let phase = match config.phase {
            Phase::PreAgreement => "pre".to_string(),
            Phase::In(s) => c.state_name(s).to_string(),
        };
        at(
            &phase,
            config.clock,
            config.events.iter().map(|e| (e.site, e.trigger)).collect(),
        )
    };
    let states: BTreeSet<Abstract> = (0..lts.nodes.len() as u32).map(view).collect();
    let mut moves: Vec<Move> = lts
        .edges
        .iter()
        .map(|e| {
            let label = match &e.action {
                Action::Agree(_) => "agree".to_string(),
                Action::Call(call) => format!("call {}.{}", call.party, call.function),
                Action::Fire(id) => {
                    let event = lts
                        .node(e.from)
                        .config
                        .event(*id)
                        .expect("fired event is pending");
                    format!("fire {}", event.site)
                }
                Action::Tick => "tick".to_string(),
            };
            (view(e.from), label, view(e.to))
        })
        .collect();
    moves.sort();
    (states, moves, lts.nodes.len())
}

/// Compares explorer and enumeration; describes the first difference.
pub fn census_matches(horizon: i64) -> Result<(usize, usize), String> {
    let (c, lts) = explored(horizon);
    if !lts.complete {
        return Err("exploration incomplete".into());
    }
    let (states, moves, nodes) = abstraction(&c, &lts);
    let (want_states, want_moves) = enumerate(horizon);
    if nodes != states.len() {
        return Err(format!("{nodes} nodes map to {} abstract states", states.len()));
    }
    if states != want_states {
        return Err(format!(
            "states differ: explorer {} vs enumeration {}",
            states.len(),
            want_states.len()
        ));
    }
    if moves != want_moves {
        let extra: Vec<_> = moves.iter().filter(|m| !want_moves.contains(m)).take(3).collect();
        let missing: Vec<_> = want_moves.iter().filter(|m| !moves.contains(m)).take(3).collect();
        return Err(format!("moves differ; extra {extra:?}; missing {missing:?}"));
    }
    Ok((states.len(), moves.len()))
}

#[test]
fn explorer_branches_like_the_enumeration() {
    for h in 0..=HORIZON {
        census_matches(h).unwrap();
    }
}

#[test]
fn all_three_sources_of_choice_appear() {
    let (_, moves) = enumerate(HORIZON);
    let labels: BTreeSet<&str> = moves.iter().map(|(_, l, _)| l.as_str()).collect();
    for l in ["call A.f", "call B.g", "fire 0", "fire 1", "tick"] {
        assert!(labels.contains(l), "{l}");
    }
    let (c, lts) = explored(HORIZON);
    let racing = (0..lts.nodes.len() as u32)
        .filter(|&n| lts.node(n).config.ready_events(&c).len() == 2)
        .count();
    assert!(racing > 0);
}
