//! Transition labels and the actions that drive steps.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::json;

use crate::value::{AssetValue, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TauCause {
    Tick,
    Event(u32),
}

/// Terms agreed by one clause of the agreement.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClauseTerms {
    pub parties: Vec<String>,
    /// `(field, value)` in clause order.
    pub values: Vec<(String, Value)>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Tau(TauCause),
    Agreement {
        /// `(role, identity)` in agreement order.
        parties: Vec<(String, String)>,
        terms: Vec<ClauseTerms>,
    },
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

impl Label {
    pub fn kind(&self) -> &'static str {
        match self {
            Label::Tau(_) => "tau",
            Label::Agreement { .. } => "agreement",
            Label::Call { .. } => "call",
            Label::ValueSend { .. } => "value-send",
            Label::AssetSend { .. } => "asset-send",
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau(_))
    }

    pub fn payload(&self) -> serde_json::Value {
        match self {
            Label::Tau(TauCause::Tick) => json!({ "tick": true }),
            Label::Tau(TauCause::Event(id)) => json!({ "event": id }),
            Label::Agreement { parties, terms } => {
                let parties: serde_json::Map<_, _> = parties
                    .iter()
                    .map(|(role, id)| (role.clone(), json!(id)))
                    .collect();
                let terms: Vec<_> = terms
                    .iter()
                    .map(|clause| {
                        let values: serde_json::Map<_, _> = clause
                            .values
                            .iter()
                            .map(|(field, v)| (field.clone(), v.to_json()))
                            .collect();
                        json!({ "parties": clause.parties, "values": values })
                    })
                    .collect();
                json!({ "parties": parties, "terms": terms })
            }
            Label::Call {
                party,
                function,
                args,
                assets,
            } => json!({
                "party": party,
                "function": function,
                "args": args.iter().map(Value::to_json).collect::<Vec<_>>(),
                "assets": assets.iter().map(AssetValue::to_json).collect::<Vec<_>>(),
            }),
            Label::ValueSend { value, party } => json!({ "party": party, "value": value.to_json() }),
            Label::AssetSend { asset, party } => json!({ "party": party, "asset": asset.to_json() }),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau(TauCause::Tick) => f.write_str("tau(tick)"),
            Label::Tau(TauCause::Event(id)) => write!(f, "tau(event {id})"),
            Label::Agreement { parties, terms } => {
                let parties: Vec<String> = parties.iter().map(|(r, i)| format!("{r}:{i}")).collect();
                let terms: Vec<String> = terms
                    .iter()
                    .flat_map(|c| c.values.iter().map(|(k, v)| format!("{k}={v}")))
                    .collect();
                write!(f, "agreement({}; {})", parties.join(","), terms.join(","))
            }
            Label::Call {
                party,
                function,
                args,
                assets,
            } => {
                let args: Vec<String> = args.iter().map(Value::to_string).collect();
                let assets: Vec<String> = assets.iter().map(AssetValue::to_string).collect();
                write!(f, "{party}:{function}({})[{}]", args.join(","), assets.join(","))
            }
            Label::ValueSend { value, party } => write!(f, "{value} -> {party}"),
            Label::AssetSend { asset, party } => write!(f, "{asset} -o {party}"),
        }
    }
}

/// Agreed values, field name to value.
pub type Terms = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallAction {
    pub party: String,
    pub function: String,
    pub args: Vec<Value>,
    pub assets: Vec<AssetValue>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Agree(Terms),
    Call(CallAction),
    Fire(u32),
    Tick,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Agree(terms) => {
                let terms: Vec<String> = terms.iter().map(|(k, v)| format!("{k}={v}")).collect();
                write!(f, "agree({})", terms.join(","))
            }
            Action::Call(c) => {
                let args: Vec<String> = c.args.iter().map(Value::to_string).collect();
                let assets: Vec<String> = c.assets.iter().map(AssetValue::to_string).collect();
                write!(
                    f,
                    "{}:{}({})[{}]",
                    c.party,
                    c.function,
                    args.join(","),
                    assets.join(",")
                )
            }
            Action::Fire(id) => write!(f, "fire({id})"),
            Action::Tick => f.write_str("tick"),
        }
    }
}

/// An action shape offered by a configuration; calls still need arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Enabled {
    Agree,
    Call {
        party: String,
        function: String,
        index: usize,
    },
    Fire(u32),
    Tick,
}

impl fmt::Display for Enabled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Enabled::Agree => f.write_str("agree"),
            Enabled::Call { party, function, .. } => write!(f, "{party}:{function}"),
            Enabled::Fire(id) => write!(f, "fire {id}"),
            Enabled::Tick => f.write_str("Tick"),
        }
    }
}
