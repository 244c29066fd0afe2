//! Scripted runs: scenario files in, label traces out.

use serde_json::{json, Map, Value as Json};

use super::config::{Bindings, Configuration};
use super::contract::Contract;
use super::label::{Action, CallAction, Label, TauCause, Terms};
use super::step::StepError;
use crate::value::{AssetValue, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioEntry {
    /// Sign the agreement. Parties given here override the bindings passed
    /// to [`run_scenario`].
    Agree {
        parties: Bindings,
        terms: Terms,
    },
    Call(CallAction),
    /// Let time pass one tick at a time until the clock reads the target.
    TickTo(i64),
    /// Fire a specific ready event.
    ExpectEvent(u32),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scenario {
    pub entries: Vec<ScenarioEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("scenario entry {index}: {message}")]
pub struct ScenarioFormatError {
    /// 1-based entry number, 0 for the document as a whole.
    pub index: usize,
    pub message: String,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioFormatError> {
        let raw: Json = serde_json::from_str(text).map_err(|e| ScenarioFormatError {
            index: 0,
            message: e.to_string(),
        })?;
        Scenario::from_json(&raw)
    }

    pub fn from_json(raw: &Json) -> Result<Scenario, ScenarioFormatError> {
        let items = raw.as_array().ok_or_else(|| ScenarioFormatError {
            index: 0,
            message: "a scenario is a JSON array of entries".into(),
        })?;
        let entries = items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                entry_from_json(item).map_err(|message| ScenarioFormatError {
                    index: i + 1,
                    message,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scenario { entries })
    }

    pub fn to_json(&self) -> Json {
        Json::Array(self.entries.iter().map(entry_to_json).collect())
    }

    /// Pretty JSON, one entry per line.
    pub fn to_text(&self) -> String {
        let lines: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("  {}", entry_to_json(e)))
            .collect();
        if lines.is_empty() {
            "[]\n".into()
        } else {
            format!("[\n{}\n]\n", lines.join(",\n"))
        }
    }

    /// The scenario that replays a path of actions from the initial
    /// configuration. Runs of ticks collapse into one `tick-to`.
    pub fn from_actions(parties: &Bindings, actions: &[Action]) -> Scenario {
        let mut entries = Vec::new();
        let mut clock = 0;
        for action in actions {
            match action {
                Action::Agree(terms) => entries.push(ScenarioEntry::Agree {
                    parties: parties.clone(),
                    terms: terms.clone(),
                }),
                Action::Call(call) => entries.push(ScenarioEntry::Call(call.clone())),
                Action::Fire(id) => entries.push(ScenarioEntry::ExpectEvent(*id)),
                Action::Tick => {
                    clock += 1;
                    if let Some(ScenarioEntry::TickTo(t)) = entries.last_mut() {
                        *t = clock;
                    } else {
                        entries.push(ScenarioEntry::TickTo(clock));
                    }
                }
            }
        }
        Scenario { entries }
    }
}

fn entry_from_json(item: &Json) -> Result<ScenarioEntry, String> {
    let obj = item.as_object().ok_or("an entry is a JSON object")?;
    let action = obj
        .get("action")
        .and_then(Json::as_str)
        .ok_or("missing \"action\"")?;
    let integer = |key: &str| -> Result<i64, String> {
        obj.get(key)
            .and_then(Json::as_i64)
            .ok_or_else(|| format!("\"{action}\" needs an integer \"{key}\""))
    };
    match action {
        "agree" => {
            let mut parties = Bindings::new();
            if let Some(raw) = obj.get("parties") {
                let map = raw
                    .as_object()
                    .ok_or("\"parties\" must map roles to identities")?;
                for (role, id) in map {
                    let id = id.as_str().ok_or("party identities are strings")?;
                    parties.insert(role.clone(), id.to_string());
                }
            }
            let mut terms = Terms::new();
            if let Some(raw) = obj.get("terms") {
                let map = raw.as_object().ok_or("\"terms\" must map fields to values")?;
                for (field, v) in map {
                    terms.insert(field.clone(), Value::from_json(v)?);
                }
            }
            Ok(ScenarioEntry::Agree { parties, terms })
        }
        "call" => {
            let text = |key: &str| -> Result<String, String> {
                obj.get(key)
                    .and_then(Json::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| format!("\"call\" needs a string \"{key}\""))
            };
            let list = |key: &str| -> Result<&[Json], String> {
                match obj.get(key) {
                    None => Ok(&[]),
                    Some(Json::Array(items)) => Ok(items),
                    Some(_) => Err(format!("\"{key}\" must be an array")),
                }
            };
            Ok(ScenarioEntry::Call(CallAction {
                party: text("party")?,
                function: text("function")?,
                args: list("args")?
                    .iter()
                    .map(Value::from_json)
                    .collect::<Result<_, _>>()?,
                assets: list("assets")?
                    .iter()
                    .map(AssetValue::from_json)
                    .collect::<Result<_, _>>()?,
            }))
        }
        "tick-to" => Ok(ScenarioEntry::TickTo(integer("clock")?)),
        "expect-event" => {
            let id = integer("event")?;
            u32::try_from(id)
                .map(ScenarioEntry::ExpectEvent)
                .map_err(|_| format!("event id {id} out of range"))
        }
        other => Err(format!("unknown action \"{other}\"")),
    }
}

fn entry_to_json(entry: &ScenarioEntry) -> Json {
    match entry {
        ScenarioEntry::Agree { parties, terms } => {
            let terms: Map<String, Json> = terms.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
            json!({ "action": "agree", "parties": parties, "terms": terms })
        }
        ScenarioEntry::Call(c) => json!({
            "action": "call",
            "party": c.party,
            "function": c.function,
            "args": c.args.iter().map(Value::to_json).collect::<Vec<_>>(),
            "assets": c.assets.iter().map(AssetValue::to_json).collect::<Vec<_>>(),
        }),
        ScenarioEntry::TickTo(t) => json!({ "action": "tick-to", "clock": t }),
        ScenarioEntry::ExpectEvent(id) => json!({ "action": "expect-event", "event": id }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub clock: i64,
    pub label: Label,
}

impl TraceEntry {
    pub fn to_json(&self) -> Json {
        json!({
            "clock": self.clock,
            "kind": self.label.kind(),
            "payload": self.label.payload(),
        })
    }
}

/// Labels produced by a run, in order, with the configuration reached.
/// Ticks are not recorded; the clock column shows where time passed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    pub last: Configuration,
}

impl Trace {
    /// JSON Lines, keys sorted, one label per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.to_json().to_string());
            out.push('\n');
        }
        out
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.entries.iter().map(|e| &e.label)
    }

    fn record(&mut self, labels: Vec<Label>) {
        let clock = self.last.clock;
        self.entries.extend(
            labels
                .into_iter()
                .filter(|l| *l != Label::Tau(TauCause::Tick))
                .map(|label| TraceEntry { clock, label }),
        );
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Format(#[from] ScenarioFormatError),
    #[error("{} at step {step}: {error}", error.kind())]
    Rejected {
        /// 1-based entry number.
        step: usize,
        error: StepError,
        /// Labels recorded before the rejection, if the run got that far.
        partial: Option<Box<Trace>>,
    },
}

/// Runs `scenario` from the initial configuration. Before each call and
/// each single tick, a lone ready event fires on its own; several ready at
/// once must be chosen with `expect-event`.
pub fn run_scenario(
    contract: &Contract,
    bindings: &Bindings,
    scenario: &Scenario,
) -> Result<Trace, ScenarioError> {
    let format = |index: usize, message: &str| {
        ScenarioError::Format(ScenarioFormatError {
            index,
            message: message.to_string(),
        })
    };
    let Some(ScenarioEntry::Agree { parties, terms }) = scenario.entries.first() else {
        return Err(format(1, "a scenario starts with an \"agree\" entry"));
    };
    let mut all = bindings.clone();
    all.extend(parties.iter().map(|(k, v)| (k.clone(), v.clone())));
    let reject = |step: usize, error: StepError, trace: Trace| ScenarioError::Rejected {
        step,
        error,
        partial: Some(Box::new(trace)),
    };
    let init = contract.init(&all).map_err(|error| ScenarioError::Rejected {
        step: 1,
        error,
        partial: None,
    })?;
    let mut trace = Trace {
        entries: Vec::new(),
        last: init,
    };
    match contract.agree(&trace.last, terms) {
        Ok((next, labels)) => {
            trace.last = next;
            trace.record(labels);
        }
        Err(e) => return Err(reject(1, e, trace)),
    }
    for (i, entry) in scenario.entries.iter().enumerate().skip(1) {
        let step = i + 1;
        let outcome = match entry {
            ScenarioEntry::Agree { .. } => Err(StepError::AlreadyAgreed),
            ScenarioEntry::Call(call) => drain(contract, &mut trace)
                .and_then(|_| apply(contract, &mut trace, &Action::Call(call.clone()))),
            ScenarioEntry::ExpectEvent(id) => apply(contract, &mut trace, &Action::Fire(*id)),
            ScenarioEntry::TickTo(target) => tick_to(contract, &mut trace, *target),
        };
        if let Err(error) = outcome {
            return Err(reject(step, error, trace));
        }
    }
    Ok(trace)
}

fn apply(contract: &Contract, trace: &mut Trace, action: &Action) -> Result<(), StepError> {
    let (next, labels) = contract.step(&trace.last, action)?;
    trace.last = next;
    trace.record(labels);
    Ok(())
}

fn drain(contract: &Contract, trace: &mut Trace) -> Result<(), StepError> {
    loop {
        let ready = trace.last.ready_events(contract);
        match ready.as_slice() {
            [] => return Ok(()),
            [id] => apply(contract, trace, &Action::Fire(*id))?,
            _ => return Err(StepError::AmbiguousEvents(ready)),
        }
    }
}

fn tick_to(contract: &Contract, trace: &mut Trace, target: i64) -> Result<(), StepError> {
    if target < trace.last.clock {
        return Err(StepError::NotEnabled(format!(
            "the clock already reads {}, past {target}",
            trace.last.clock
        )));
    }
    while trace.last.clock < target {
        drain(contract, trace)?;
        apply(contract, trace, &Action::Tick)?;
    }
    Ok(())
}
