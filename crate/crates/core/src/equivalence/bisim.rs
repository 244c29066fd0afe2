//! Bisimilarity by partition refinement, with distinguishing witnesses.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde_json::{json, Value as Json};

use super::obs_lts::{ObsLts, ReadyEntry, StateKind, INITIAL};
use super::observe::ObsLabel;
use crate::semantics::Action;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EquivError {
    #[error("the environments are not comparable: {0}")]
    IncomparableEnvironments(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Divergence {
    /// After the prefix, `side` can reach a state offering `ready` (of the
    /// given kind) and the other side cannot.
    ReadySet {
        kind: StateKind,
        ready: BTreeSet<ReadyEntry>,
        other: Vec<(StateKind, BTreeSet<ReadyEntry>)>,
    },
    /// After the prefix, `side` can perform `label` and the other cannot.
    Unmatched { label: ObsLabel },
    /// The systems are not bisimilar but share all ready traces; the
    /// prefix leads to a pair of states that branching tells apart.
    Branching,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub prefix: Vec<ObsLabel>,
    /// The side on which the witness can be followed to the end.
    pub side: Side,
    pub divergence: Divergence,
    /// Semantic actions on `side` that realise the witness.
    pub via: Vec<Action>,
}

impl Witness {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (i, label) in self.prefix.iter().enumerate() {
            out.push_str(&json!({ "step": i + 1, "observation": label.to_json() }).to_string());
            out.push('\n');
        }
        let divergence = match &self.divergence {
            Divergence::ReadySet { kind, ready, other } => json!({
                "ready-set": {
                    "kind": format!("{kind:?}"),
                    "ready": ready.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "other": other
                        .iter()
                        .map(|(k, r)| json!({
                            "kind": format!("{k:?}"),
                            "ready": r.iter().map(ToString::to_string).collect::<Vec<_>>(),
                        }))
                        .collect::<Vec<Json>>(),
                }
            }),
            Divergence::Unmatched { label } => json!({ "unmatched": label.to_json() }),
            Divergence::Branching => json!("branching"),
        };
        out.push_str(&json!({ "divergence": divergence, "side": self.side.name() }).to_string());
        out.push('\n');
        out
    }

    /// Whether the witness can be followed to its end on `lts`.
    pub fn replays_on(&self, lts: &ObsLts) -> bool {
        let states = lts.after(&self.prefix);
        match &self.divergence {
            Divergence::ReadySet { kind, ready, .. } => states
                .iter()
                .any(|&s| lts.states[s].kind == *kind && &lts.states[s].ready == ready),
            Divergence::Unmatched { label } => states
                .iter()
                .any(|&s| lts.transitions_from(s).any(|t| &t.label == label)),
            Divergence::Branching => !states.is_empty(),
        }
    }
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, label) in self.prefix.iter().enumerate() {
            writeln!(f, "  {:>3}. {label}", i + 1)?;
        }
        match &self.divergence {
            Divergence::ReadySet { kind, ready, other } => {
                let show = |r: &BTreeSet<ReadyEntry>| {
                    let items: Vec<String> = r.iter().map(ToString::to_string).collect();
                    format!("{{{}}}", items.join(", "))
                };
                writeln!(
                    f,
                    "  then the {} contract reaches a {kind:?} state permitting {}",
                    self.side.name(),
                    show(ready)
                )?;
                let others: Vec<String> = other.iter().map(|(k, r)| format!("{k:?} {}", show(r))).collect();
                write!(
                    f,
                    "  while the {} contract only offers {}",
                    self.side.other().name(),
                    if others.is_empty() {
                        "nothing".to_string()
                    } else {
                        others.join(" or ")
                    }
                )
            }
            Divergence::Unmatched { label } => write!(
                f,
                "  then only the {} contract can observe {label}",
                self.side.name()
            ),
            Divergence::Branching => write!(
                f,
                "  then the contracts reach states that differ in their branching"
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Bisimilar,
    NotBisimilar,
    /// At least one system was cut off by the state budget.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceVerdict {
    pub verdict: Verdict,
    pub horizon: i64,
    pub witness: Option<Witness>,
    /// Number of blocks in the final partition of both systems together.
    pub blocks: usize,
}

impl EquivalenceVerdict {
    pub fn bisimilar(&self) -> bool {
        self.verdict == Verdict::Bisimilar
    }
}

/// Block assignments of the disjoint union, one vector per refinement
/// round; the last is stable.
struct Refinement {
    levels: Vec<Vec<u32>>,
    offset: usize,
}

fn refine(a: &ObsLts, b: &ObsLts) -> Refinement {
    let offset = a.states.len();
    let total = offset + b.states.len();
    let mut labels: HashMap<&ObsLabel, u32> = HashMap::new();
    let mut succ: Vec<Vec<(u32, usize)>> = Vec::with_capacity(total);
    for (lts, base) in [(a, 0), (b, offset)] {
        for s in 0..lts.states.len() {
            let mut edges = Vec::new();
            for t in lts.transitions_from(s) {
                let next = labels.len() as u32;
                let l = *labels.entry(&t.label).or_insert(next);
                edges.push((l, base + t.to));
            }
            succ.push(edges);
        }
    }
    let state = |i: usize| {
        if i < offset {
            &a.states[i]
        } else {
            &b.states[i - offset]
        }
    };
    let mut initial: HashMap<(StateKind, &BTreeSet<ReadyEntry>), u32> = HashMap::new();
    let mut level = Vec::with_capacity(total);
    for i in 0..total {
        let s = state(i);
        let next = initial.len() as u32;
        level.push(*initial.entry((s.kind, &s.ready)).or_insert(next));
    }
    let mut count = initial.len();
    let mut levels = vec![level];
    loop {
        let current = levels.last().expect("at least one level");
        let mut signatures: HashMap<(u32, Vec<(u32, u32)>), u32> = HashMap::new();
        let mut next_level = Vec::with_capacity(total);
        for i in 0..total {
            let mut sig: Vec<(u32, u32)> = succ[i].iter().map(|&(l, t)| (l, current[t])).collect();
            sig.sort_unstable();
            sig.dedup();
            let next = signatures.len() as u32;
            next_level.push(*signatures.entry((current[i], sig)).or_insert(next));
        }
        let new_count = signatures.len();
        levels.push(next_level);
        if new_count == count {
            return Refinement { levels, offset };
        }
        count = new_count;
    }
}

pub fn bisimilar(a: &ObsLts, b: &ObsLts) -> Result<EquivalenceVerdict, EquivError> {
    if a.signature != b.signature {
        let why = if a.signature.parties != b.signature.parties {
            "different parties or identities"
        } else if a.signature.horizon != b.signature.horizon {
            "different horizons"
        } else {
            "different agreed-value domains"
        };
        return Err(EquivError::IncomparableEnvironments(why.into()));
    }
    let refinement = refine(a, b);
    let stable = refinement.levels.last().expect("levels");
    let blocks = stable.iter().collect::<HashSet<_>>().len();
    let same = stable[INITIAL] == stable[refinement.offset + INITIAL];
    let horizon = a.signature.horizon;
    if !a.complete || !b.complete {
        return Ok(EquivalenceVerdict {
            verdict: Verdict::Inconclusive,
            horizon,
            witness: None,
            blocks,
        });
    }
    if same {
        return Ok(EquivalenceVerdict {
            verdict: Verdict::Bisimilar,
            horizon,
            witness: None,
            blocks,
        });
    }
    let witness = [
        ready_trace_witness(a, b, Side::Left),
        ready_trace_witness(b, a, Side::Right),
    ]
    .into_iter()
    .flatten()
    .min_by_key(|w| w.prefix.len())
    .unwrap_or_else(|| branching_witness(a, b, &refinement));
    Ok(EquivalenceVerdict {
        verdict: Verdict::NotBisimilar,
        horizon,
        witness: Some(witness),
        blocks,
    })
}

/// Shortest observation sequence that `this` can follow and `other`
/// cannot, tracking every state `other` may be in.
fn ready_trace_witness(this: &ObsLts, other: &ObsLts, side: Side) -> Option<Witness> {
    struct Visit {
        state: usize,
        others: Vec<usize>,
        parent: Option<(usize, usize)>,
    }
    let mut visits = vec![Visit {
        state: INITIAL,
        others: vec![INITIAL],
        parent: None,
    }];
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::from([(INITIAL, vec![INITIAL])]);
    let mut queue = VecDeque::from([0usize]);
    let unwind = |visits: &Vec<Visit>, mut at: usize| {
        let mut transitions = Vec::new();
        while let Some((parent, t)) = visits[at].parent {
            transitions.push(t);
            at = parent;
        }
        transitions.reverse();
        transitions
    };
    let finish = |transitions: Vec<usize>, divergence: Divergence| {
        let prefix = transitions
            .iter()
            .map(|&t| this.transitions[t].label.clone())
            .collect::<Vec<_>>();
        let mut via: Vec<Action> = Vec::new();
        for &t in &transitions {
            via.extend(this.transitions[t].via.iter().cloned());
        }
        (prefix, via, divergence)
    };
    while let Some(at) = queue.pop_front() {
        let s = visits[at].state;
        let here = &this.states[s];
        let offered: BTreeSet<(StateKind, BTreeSet<ReadyEntry>)> = visits[at]
            .others
            .iter()
            .map(|&o| (other.states[o].kind, other.states[o].ready.clone()))
            .collect();
        if !offered.contains(&(here.kind, here.ready.clone())) {
            let (prefix, via, divergence) = finish(
                unwind(&visits, at),
                Divergence::ReadySet {
                    kind: here.kind,
                    ready: here.ready.clone(),
                    other: offered.into_iter().collect(),
                },
            );
            return Some(Witness {
                prefix,
                side,
                divergence,
                via,
            });
        }
        for &t in &this.out[s] {
            let label = &this.transitions[t].label;
            let next: BTreeSet<usize> = visits[at]
                .others
                .iter()
                .flat_map(|&o| other.transitions_from(o))
                .filter(|ot| &ot.label == label)
                .map(|ot| ot.to)
                .collect();
            if next.is_empty() {
                let (prefix, mut via, _) = finish(unwind(&visits, at), Divergence::Branching);
                via.extend(this.transitions[t].via.iter().cloned());
                return Some(Witness {
                    prefix,
                    side,
                    divergence: Divergence::Unmatched { label: label.clone() },
                    via,
                });
            }
            let next: Vec<usize> = next.into_iter().collect();
            let to = this.transitions[t].to;
            if seen.insert((to, next.clone())) {
                visits.push(Visit {
                    state: to,
                    others: next,
                    parent: Some((at, t)),
                });
                queue.push_back(visits.len() - 1);
            }
        }
    }
    None
}

/// Follows a pair of states that the refinement separates for as long as
/// some matching move keeps them separated.
fn branching_witness(a: &ObsLts, b: &ObsLts, refinement: &Refinement) -> Witness {
    let stable = refinement.levels.last().expect("levels");
    let off = refinement.offset;
    let (mut x, mut y) = (INITIAL, INITIAL);
    let mut prefix = Vec::new();
    let mut via = Vec::new();
    let mut visited = HashSet::new();
    while visited.insert((x, y)) {
        let step = a.transitions_from(x).find_map(|t| {
            b.transitions_from(y)
                .find(|u| u.label == t.label && stable[t.to] != stable[off + u.to])
                .map(|u| (t, u))
        });
        let Some((t, u)) = step else {
            break;
        };
        prefix.push(t.label.clone());
        via.extend(t.via.iter().cloned());
        x = t.to;
        y = u.to;
    }
    Witness {
        prefix,
        side: Side::Left,
        divergence: Divergence::Branching,
        via,
    }
}
