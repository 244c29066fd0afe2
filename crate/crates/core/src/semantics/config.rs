//! Runtime configurations: contract status paired with the clock.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::json;

use super::contract::{Contract, StateId};
use crate::value::{AssetValue, TokenId, Value};

/// Role name to external identity.
pub type Bindings = BTreeMap<String, String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    PreAgreement,
    In(StateId),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PendingEvent {
    pub id: u32,
    pub trigger: i64,
    /// Index into [`Contract::sites`].
    pub site: u32,
    /// Values of the site's captured names, aligned with `Site::captures`;
    /// `None` when the name was unset at scheduling time.
    pub captured: Vec<Option<Value>>,
}

/// Who holds a non-fungible token.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Holder {
    Contract,
    Party(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub phase: Phase,
    pub clock: i64,
    /// Aligned with the contract's field declarations.
    pub fields: Vec<Option<Value>>,
    /// Aligned with the contract's asset declarations.
    pub assets: Vec<AssetValue>,
    /// Ordered by id.
    pub events: Vec<PendingEvent>,
    pub bindings: Arc<Bindings>,
    /// Every token that has entered the contract, with its current holder.
    pub tokens: BTreeMap<TokenId, Holder>,
    /// Number of usage codes issued so far.
    pub codes: u64,
}

impl Configuration {
    pub fn state(&self) -> Option<StateId> {
        match self.phase {
            Phase::PreAgreement => None,
            Phase::In(s) => Some(s),
        }
    }

    pub fn assets_empty(&self) -> bool {
        self.assets.iter().all(AssetValue::is_empty)
    }

    /// Events whose trigger has been reached and whose guard is the current
    /// state, in id order.
    pub fn ready_events(&self, contract: &Contract) -> Vec<u32> {
        let Phase::In(state) = self.phase else {
            return Vec::new();
        };
        self.events
            .iter()
            .filter(|e| e.trigger <= self.clock && contract.sites[e.site as usize].guard == state)
            .map(|e| e.id)
            .collect()
    }

    pub fn event(&self, id: u32) -> Option<&PendingEvent> {
        self.events.iter().find(|e| e.id == id)
    }

    /// Smallest id not used by a pending event.
    pub fn fresh_event_id(&self) -> u32 {
        let mut id = 0;
        for e in &self.events {
            if e.id == id {
                id += 1;
            } else if e.id > id {
                break;
            }
        }
        id
    }

    /// The same configuration with the clock moved to zero and event
    /// triggers stored relative to the current clock.
    pub fn time_shifted(&self) -> Configuration {
        let mut shifted = self.clone();
        shifted.clock = 0;
        for e in &mut shifted.events {
            e.trigger -= self.clock;
        }
        shifted
    }

    pub fn identity(&self, role: &str) -> Option<&str> {
        self.bindings.get(role).map(String::as_str)
    }

    pub fn state_name<'c>(&self, contract: &'c Contract) -> &'c str {
        match self.phase {
            Phase::PreAgreement => "(pre-agreement)",
            Phase::In(s) => contract.state_name(s),
        }
    }

    pub fn to_json(&self, contract: &Contract) -> serde_json::Value {
        let fields: serde_json::Map<_, _> = contract
            .ast
            .fields
            .iter()
            .zip(&self.fields)
            .map(|(name, v)| {
                let value = v.as_ref().map_or(serde_json::Value::Null, Value::to_json);
                (name.text.clone(), value)
            })
            .collect();
        let assets: serde_json::Map<_, _> = contract
            .ast
            .assets
            .iter()
            .zip(&self.assets)
            .map(|(name, a)| (name.text.clone(), a.to_json()))
            .collect();
        let events: Vec<_> = self
            .events
            .iter()
            .map(|e| {
                let site = &contract.sites[e.site as usize];
                json!({
                    "id": e.id,
                    "trigger": e.trigger,
                    "guard": contract.state_name(site.guard),
                    "target": contract.state_name(site.target),
                })
            })
            .collect();
        json!({
            "state": self.state_name(contract),
            "clock": self.clock,
            "fields": fields,
            "assets": assets,
            "events": events,
        })
    }

    /// One-line human summary: state, clock and non-empty assets.
    pub fn summary(&self, contract: &Contract) -> String {
        let assets: Vec<String> = contract
            .ast
            .assets
            .iter()
            .zip(&self.assets)
            .map(|(name, a)| format!("{name}={a}"))
            .collect();
        format!(
            "@{} clock={} {}",
            self.state_name(contract),
            self.clock,
            assets.join(" ")
        )
        .trim_end()
        .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(id: u32, trigger: i64) -> PendingEvent {
        PendingEvent {
            id,
            trigger,
            site: 0,
            captured: Vec::new(),
        }
    }

    fn config(events: Vec<PendingEvent>, clock: i64) -> Configuration {
        Configuration {
            phase: Phase::In(0),
            clock,
            fields: Vec::new(),
            assets: Vec::new(),
            events,
            bindings: Arc::new(Bindings::new()),
            tokens: BTreeMap::new(),
            codes: 0,
        }
    }

    #[test]
    fn fresh_ids_fill_gaps() {
        assert_eq!(config(vec![], 0).fresh_event_id(), 0);
        assert_eq!(config(vec![event(0, 1), event(1, 1)], 0).fresh_event_id(), 2);
        assert_eq!(config(vec![event(0, 1), event(2, 1)], 0).fresh_event_id(), 1);
        assert_eq!(config(vec![event(1, 1)], 0).fresh_event_id(), 0);
    }

    #[test]
    fn shifting_keeps_offsets() {
        let a = config(vec![event(0, 730)], 10).time_shifted();
        let b = config(vec![event(0, 1720)], 1000).time_shifted();
        assert_eq!(a, b);
        assert_eq!(a.events[0].trigger, 720);
    }
}
