//! What parties observe: agreements, interactions and the passage of time.

use std::fmt;

use serde_json::{json, Value as Json};

use crate::semantics::reduce;
use crate::semantics::{Configuration, Contract, Label, Trace};
use crate::value::{AssetValue, Value};

/// An interaction visible to the parties.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observation {
    Call {
        party: String,
        function: String,
        args: Vec<Value>,
        assets: Vec<AssetValue>,
    },
    ValueSend {
        value: Value,
        party: String,
    },
    AssetSend {
        asset: AssetValue,
        party: String,
    },
}

impl Observation {
    pub fn from_label(label: &Label) -> Option<Observation> {
        match label {
            Label::Call {
                party,
                function,
                args,
                assets,
            } => Some(Observation::Call {
                party: party.clone(),
                function: function.clone(),
                args: args.clone(),
                assets: assets.clone(),
            }),
            Label::ValueSend { value, party } => Some(Observation::ValueSend {
                value: value.clone(),
                party: party.clone(),
            }),
            Label::AssetSend { asset, party } => Some(Observation::AssetSend {
                asset: asset.clone(),
                party: party.clone(),
            }),
            Label::Tau(_) | Label::Agreement { .. } => None,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Observation::Call {
                party,
                function,
                args,
                assets,
            } => json!({
                "call": {
                    "party": party,
                    "function": function,
                    "args": args.iter().map(Value::to_json).collect::<Vec<_>>(),
                    "assets": assets.iter().map(AssetValue::to_json).collect::<Vec<_>>(),
                }
            }),
            Observation::ValueSend { value, party } => {
                json!({ "value-send": { "party": party, "value": value.to_json() } })
            }
            Observation::AssetSend { asset, party } => {
                json!({ "asset-send": { "party": party, "asset": asset.to_json() } })
            }
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Call {
                party,
                function,
                args,
                assets,
            } => {
                let args: Vec<String> = args.iter().map(Value::to_string).collect();
                let assets: Vec<String> = assets.iter().map(AssetValue::to_string).collect();
                write!(f, "{party}:{function}({})[{}]", args.join(","), assets.join(","))
            }
            Observation::ValueSend { value, party } => write!(f, "{value} -> {party}"),
            Observation::AssetSend { asset, party } => write!(f, "{asset} -o {party}"),
        }
    }
}

/// The agreement as parties see it: who signed as what, and the values
/// each clause fixed. Field names are internal and left out.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgreementObs {
    /// `(role, identity)`, sorted.
    pub parties: Vec<(String, String)>,
    /// Per clause, its sorted parties and its values in clause order.
    pub clauses: Vec<(Vec<String>, Vec<Value>)>,
}

impl AgreementObs {
    pub fn from_label(label: &Label) -> Option<AgreementObs> {
        let Label::Agreement { parties, terms } = label else {
            return None;
        };
        let mut parties = parties.clone();
        parties.sort();
        let clauses = terms
            .iter()
            .map(|clause| {
                let mut who = clause.parties.clone();
                who.sort();
                (who, clause.values.iter().map(|(_, v)| v.clone()).collect())
            })
            .collect();
        Some(AgreementObs { parties, clauses })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObsLabel {
    Agreement(AgreementObs),
    /// Interactions observed together, as a sorted multiset.
    Batch(Vec<Observation>),
    TimeAdvance,
}

impl ObsLabel {
    pub fn batch(mut items: Vec<Observation>) -> ObsLabel {
        items.sort();
        ObsLabel::Batch(items)
    }

    pub fn to_json(&self) -> Json {
        match self {
            ObsLabel::Agreement(a) => {
                let parties: serde_json::Map<String, Json> =
                    a.parties.iter().map(|(r, i)| (r.clone(), json!(i))).collect();
                let clauses: Vec<Json> = a
                    .clauses
                    .iter()
                    .map(|(who, values)| {
                        json!({
                            "parties": who,
                            "values": values.iter().map(Value::to_json).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                json!({ "agreement": { "parties": parties, "clauses": clauses } })
            }
            ObsLabel::Batch(items) => {
                json!({ "batch": items.iter().map(Observation::to_json).collect::<Vec<_>>() })
            }
            ObsLabel::TimeAdvance => json!("time-advance"),
        }
    }
}

impl fmt::Display for ObsLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsLabel::Agreement(a) => {
                let parties: Vec<String> = a.parties.iter().map(|(r, i)| format!("{r}:{i}")).collect();
                let values: Vec<String> = a
                    .clauses
                    .iter()
                    .flat_map(|(_, vs)| vs.iter().map(Value::to_string))
                    .collect();
                write!(f, "agreement({}; {})", parties.join(","), values.join(","))
            }
            ObsLabel::Batch(items) => {
                let items: Vec<String> = items.iter().map(Observation::to_string).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
            ObsLabel::TimeAdvance => f.write_str("time-advance"),
        }
    }
}

/// Collapses the labels of each clock value into one batch, with a
/// time-advance marker per elapsed tick. Silent steps disappear.
pub fn batch_trace(trace: &Trace) -> Vec<ObsLabel> {
    let mut out = Vec::new();
    let mut batch: Vec<Observation> = Vec::new();
    let mut clock: Option<i64> = None;
    for entry in &trace.entries {
        if let Some(agreement) = AgreementObs::from_label(&entry.label) {
            flush(&mut out, &mut batch);
            out.push(ObsLabel::Agreement(agreement));
            clock.get_or_insert(entry.clock);
            continue;
        }
        let Some(obs) = Observation::from_label(&entry.label) else {
            continue;
        };
        let last = *clock.get_or_insert(entry.clock);
        if entry.clock > last {
            flush(&mut out, &mut batch);
            for _ in last..entry.clock {
                out.push(ObsLabel::TimeAdvance);
            }
            clock = Some(entry.clock);
        }
        batch.push(obs);
    }
    flush(&mut out, &mut batch);
    out
}

fn flush(out: &mut Vec<ObsLabel>, batch: &mut Vec<Observation>) {
    if !batch.is_empty() {
        out.push(ObsLabel::batch(std::mem::take(batch)));
    }
}

/// Removes events whose trigger time has passed. With `prune_unreachable`,
/// also removes events whose guard state cannot be occupied by the time
/// they trigger.
pub fn garbage_collect_events(
    contract: &Contract,
    config: &Configuration,
    prune_unreachable: bool,
) -> Configuration {
    let mut out = config.clone();
    reduce::drop_elapsed_events(&mut out);
    if prune_unreachable {
        reduce::drop_dead_events(contract, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{TauCause, TraceEntry};

    fn call(name: &str) -> Label {
        Label::Call {
            party: "A".into(),
            function: name.into(),
            args: vec![],
            assets: vec![],
        }
    }

    fn trace(entries: Vec<(i64, Label)>, last: Configuration) -> Trace {
        Trace {
            entries: entries
                .into_iter()
                .map(|(clock, label)| TraceEntry { clock, label })
                .collect(),
            last,
        }
    }

    fn empty_config() -> Configuration {
        Configuration {
            phase: crate::semantics::Phase::PreAgreement,
            clock: 0,
            fields: vec![],
            assets: vec![],
            events: vec![],
            bindings: Default::default(),
            tokens: Default::default(),
            codes: 0,
        }
    }

    #[test]
    fn same_clock_labels_form_one_batch() {
        let send = Label::ValueSend {
            value: Value::num(1),
            party: "B".into(),
        };
        let t = trace(
            vec![
                (0, call("a")),
                (0, send.clone()),
                (0, Label::Tau(TauCause::Event(0))),
                (1, call("c")),
            ],
            empty_config(),
        );
        let obs = |l: &Label| Observation::from_label(l).unwrap();
        assert_eq!(
            batch_trace(&t),
            vec![
                ObsLabel::batch(vec![obs(&call("a")), obs(&send)]),
                ObsLabel::TimeAdvance,
                ObsLabel::batch(vec![obs(&call("c"))]),
            ]
        );
    }

    #[test]
    fn gaps_become_several_advances() {
        let t = trace(vec![(0, call("a")), (3, call("b"))], empty_config());
        let batched = batch_trace(&t);
        assert_eq!(batched.len(), 5);
        assert_eq!(
            batched[1..4],
            [
                ObsLabel::TimeAdvance,
                ObsLabel::TimeAdvance,
                ObsLabel::TimeAdvance
            ]
        );
    }
}
