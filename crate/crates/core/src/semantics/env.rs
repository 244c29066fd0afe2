//! Environment files: party identities, finite value domains and bounds.

use std::collections::BTreeMap;

use serde_json::{json, Value as Json};

use super::config::Bindings;
use super::contract::Contract;
use super::label::Terms;
use crate::value::{AssetValue, Value};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("environment: {0}")]
    Format(String),
    #[error("environment gives no domain for `{0}`")]
    MissingDomain(String),
    #[error("environment binds no identity to party `{0}`")]
    MissingParty(String),
    #[error("environment domain for `{0}` is empty")]
    EmptyDomain(String),
    #[error("environment value for `{0}`: {1}")]
    BadValue(String, String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    pub parties: Bindings,
    /// Agreed field name to candidate values.
    pub fields: BTreeMap<String, Vec<Value>>,
    /// `function.param` to candidate arguments, raw until the parameter's
    /// kind is known.
    pub args: BTreeMap<String, Vec<Json>>,
    pub horizon: Option<i64>,
    pub budget: Option<usize>,
    /// Roles assumed to cooperate in the authority-only liquidity verdict.
    pub trusted: Vec<String>,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            parties: Bindings::new(),
            fields: BTreeMap::new(),
            args: BTreeMap::new(),
            horizon: None,
            budget: None,
            trusted: vec!["Authority".into()],
        }
    }
}

/// Everything the explorer may choose from, resolved against one contract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domains {
    pub parties: Bindings,
    /// Every combination of agreed values.
    pub terms: Vec<Terms>,
    /// Per function index, every `(values, assets)` argument tuple.
    pub calls: Vec<Vec<(Vec<Value>, Vec<AssetValue>)>>,
}

impl Environment {
    pub fn parse(text: &str) -> Result<Environment, EnvError> {
        let raw: Json = serde_json::from_str(text).map_err(|e| EnvError::Format(e.to_string()))?;
        Environment::from_json(&raw)
    }

    pub fn from_json(raw: &Json) -> Result<Environment, EnvError> {
        let obj = raw
            .as_object()
            .ok_or_else(|| EnvError::Format("expected a JSON object".into()))?;
        let mut env = Environment::default();
        if let Some(parties) = obj.get("parties") {
            let map = parties
                .as_object()
                .ok_or_else(|| EnvError::Format("\"parties\" must be an object".into()))?;
            for (role, id) in map {
                let id = id
                    .as_str()
                    .ok_or_else(|| EnvError::BadValue(role.clone(), "expected a string".into()))?;
                env.parties.insert(role.clone(), id.to_string());
            }
        }
        if let Some(fields) = obj.get("fields") {
            for (name, values) in domain_map(fields, "fields")? {
                let values = values
                    .iter()
                    .map(|v| Value::from_json(v).map_err(|e| EnvError::BadValue(name.clone(), e)))
                    .collect::<Result<_, _>>()?;
                env.fields.insert(name, values);
            }
        }
        if let Some(args) = obj.get("args") {
            env.args = domain_map(args, "args")?;
        }
        if let Some(h) = obj.get("horizon") {
            env.horizon = Some(
                h.as_i64()
                    .filter(|h| *h >= 0)
                    .ok_or_else(|| EnvError::BadValue("horizon".into(), h.to_string()))?,
            );
        }
        if let Some(b) = obj.get("budget") {
            env.budget = Some(
                b.as_u64()
                    .ok_or_else(|| EnvError::BadValue("budget".into(), b.to_string()))?
                    as usize,
            );
        }
        if let Some(t) = obj.get("trusted") {
            env.trusted = t
                .as_array()
                .and_then(|items| {
                    items
                        .iter()
                        .map(|r| r.as_str().map(str::to_string))
                        .collect::<Option<Vec<_>>>()
                })
                .ok_or_else(|| EnvError::BadValue("trusted".into(), t.to_string()))?;
        }
        Ok(env)
    }

    pub fn to_json(&self) -> Json {
        let fields: BTreeMap<&String, Vec<Json>> = self
            .fields
            .iter()
            .map(|(k, vs)| (k, vs.iter().map(Value::to_json).collect()))
            .collect();
        let mut out = json!({
            "parties": self.parties,
            "fields": fields,
            "args": self.args,
            "trusted": self.trusted,
        });
        if let Some(h) = self.horizon {
            out["horizon"] = json!(h);
        }
        if let Some(b) = self.budget {
            out["budget"] = json!(b);
        }
        out
    }

    /// Resolves every domain the contract needs. Names the contract does
    /// not use are ignored.
    pub fn domains(&self, contract: &Contract) -> Result<Domains, EnvError> {
        for party in &contract.ast.agreement.parties {
            if !self.parties.contains_key(party.as_str()) {
                return Err(EnvError::MissingParty(party.text.clone()));
            }
        }
        let mut field_domains = Vec::new();
        for name in contract.agreed_fields() {
            let values = self
                .fields
                .get(name)
                .ok_or_else(|| EnvError::MissingDomain(name.to_string()))?;
            if values.is_empty() {
                return Err(EnvError::EmptyDomain(name.to_string()));
            }
            field_domains.push((name, values.clone()));
        }
        let terms = product(&field_domains.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>())
            .into_iter()
            .map(|combo| {
                field_domains
                    .iter()
                    .map(|(name, _)| name.to_string())
                    .zip(combo)
                    .collect()
            })
            .collect();
        let mut calls = Vec::new();
        for f in &contract.ast.functions {
            let raw = |param: &str| -> Result<&Vec<Json>, EnvError> {
                let key = format!("{}.{param}", f.name);
                match self.args.get(&key) {
                    None => Err(EnvError::MissingDomain(key)),
                    Some(v) if v.is_empty() => Err(EnvError::EmptyDomain(key)),
                    Some(v) => Ok(v),
                }
            };
            let mut values = Vec::new();
            for p in &f.value_params {
                let key = format!("{}.{}", f.name, p);
                values.push(
                    raw(p.as_str())?
                        .iter()
                        .map(|v| Value::from_json(v).map_err(|e| EnvError::BadValue(key.clone(), e)))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            let mut assets = Vec::new();
            for p in &f.asset_params {
                let key = format!("{}.{}", f.name, p);
                assets.push(
                    raw(p.as_str())?
                        .iter()
                        .map(|v| AssetValue::from_json(v).map_err(|e| EnvError::BadValue(key.clone(), e)))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            let mut tuples = Vec::new();
            for vs in product(&values) {
                for xs in product(&assets) {
                    tuples.push((vs.clone(), xs));
                }
            }
            calls.push(tuples);
        }
        Ok(Domains {
            parties: self.parties.clone(),
            terms,
            calls,
        })
    }
}

fn domain_map(raw: &Json, what: &str) -> Result<BTreeMap<String, Vec<Json>>, EnvError> {
    let map = raw
        .as_object()
        .ok_or_else(|| EnvError::Format(format!("\"{what}\" must be an object")))?;
    map.iter()
        .map(|(k, v)| match v {
            Json::Array(items) => Ok((k.clone(), items.clone())),
            _ => Err(EnvError::BadValue(k.clone(), "expected an array".into())),
        })
        .collect()
}

/// Cartesian product, first list varying slowest. The product of no lists
/// is one empty tuple.
pub fn product<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for list in lists {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                list.iter().map(move |x| {
                    let mut next = prefix.clone();
                    next.push(x.clone());
                    next
                })
            })
            .collect();
    }
    out
}
