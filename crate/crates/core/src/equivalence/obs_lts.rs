//! The observable transition system of a contract over an environment.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use super::observe::{garbage_collect_events, AgreementObs, ObsLabel, Observation};
use crate::semantics::{
    Action, Bindings, CallAction, Configuration, Contract, Domains, EnvError, Environment, Label, Phase,
};
use crate::value::Value;

/// One permission: `party` may call `function` with that many value and
/// asset arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReadyEntry {
    pub party: String,
    pub function: String,
    pub values: usize,
    pub assets: usize,
}

impl std::fmt::Display for ReadyEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}:{}/{}v{}a",
            self.party, self.function, self.values, self.assets
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateKind {
    PreAgreement,
    /// No event is ready: parties may act or let time pass.
    Idle,
    /// Time has just advanced and due events are about to fire.
    Transient,
    Stuck,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsState {
    pub kind: StateKind,
    pub ready: BTreeSet<ReadyEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsTransition {
    pub from: usize,
    pub label: ObsLabel,
    pub to: usize,
    /// Semantic actions realising the transition, for replay.
    pub via: Vec<Action>,
}

/// What must agree for two observable systems to be comparable: parties,
/// horizon and the agreed-value domains in clause order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvSignature {
    pub parties: Bindings,
    pub horizon: i64,
    pub clauses: Vec<Vec<Vec<Value>>>,
}

#[derive(Clone, Debug)]
pub struct ObsLts {
    pub states: Vec<ObsState>,
    pub transitions: Vec<ObsTransition>,
    pub out: Vec<Vec<usize>>,
    pub complete: bool,
    pub signature: EnvSignature,
}

pub const INITIAL: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObsOptions {
    pub horizon: i64,
    pub budget: usize,
    /// Also collect events whose guard cannot be reached in time.
    pub prune_unreachable: bool,
}

impl ObsOptions {
    pub fn new(horizon: i64, budget: usize) -> ObsOptions {
        ObsOptions {
            horizon,
            budget,
            prune_unreachable: false,
        }
    }
}

enum Outcome {
    Idle(Configuration, Vec<Label>, Vec<Action>),
    Stuck(Vec<Label>, Vec<Action>),
}

/// Runs every order of the ready events until none is ready.
fn fire_all(
    contract: &Contract,
    config: Configuration,
    labels: Vec<Label>,
    via: Vec<Action>,
) -> Vec<Outcome> {
    let ready = config.ready_events(contract);
    if ready.is_empty() {
        return vec![Outcome::Idle(config, labels, via)];
    }
    let mut out = Vec::new();
    for id in ready {
        let mut via = via.clone();
        via.push(Action::Fire(id));
        match contract.fire_event(&config, id) {
            Ok((next, more)) => {
                let mut labels = labels.clone();
                labels.extend(more);
                out.extend(fire_all(contract, next, labels, via));
            }
            Err(_) => out.push(Outcome::Stuck(labels.clone(), via)),
        }
    }
    out
}

fn observations(labels: &[Label]) -> Vec<Observation> {
    labels.iter().filter_map(Observation::from_label).collect()
}

struct Builder<'a> {
    contract: &'a Contract,
    domains: &'a Domains,
    options: ObsOptions,
    lts: ObsLts,
    index: HashMap<(StateKind, Configuration), usize>,
    configs: Vec<Option<Configuration>>,
    queue: VecDeque<usize>,
    stuck: Option<usize>,
    seen: HashSet<(usize, ObsLabel, usize)>,
}

impl Builder<'_> {
    fn state(&mut self, kind: StateKind, config: Configuration) -> Option<usize> {
        let config = garbage_collect_events(self.contract, &config, self.options.prune_unreachable);
        let key = (kind, config);
        if let Some(&id) = self.index.get(&key) {
            return Some(id);
        }
        if self.lts.states.len() >= self.options.budget {
            self.lts.complete = false;
            return None;
        }
        let id = self.lts.states.len();
        let ready = match kind {
            StateKind::Idle => ready_set(self.contract, self.domains, &key.1),
            _ => BTreeSet::new(),
        };
        self.lts.states.push(ObsState { kind, ready });
        self.lts.out.push(Vec::new());
        self.configs.push(Some(key.1.clone()));
        self.index.insert(key, id);
        self.queue.push_back(id);
        Some(id)
    }

    fn stuck_state(&mut self) -> Option<usize> {
        if let Some(id) = self.stuck {
            return Some(id);
        }
        if self.lts.states.len() >= self.options.budget {
            self.lts.complete = false;
            return None;
        }
        let id = self.lts.states.len();
        self.lts.states.push(ObsState {
            kind: StateKind::Stuck,
            ready: BTreeSet::new(),
        });
        self.lts.out.push(Vec::new());
        self.configs.push(None);
        self.stuck = Some(id);
        Some(id)
    }

    fn link(&mut self, from: usize, label: ObsLabel, to: Option<usize>, via: Vec<Action>) {
        let Some(to) = to else {
            return;
        };
        if self.seen.insert((from, label.clone(), to)) {
            self.lts.out[from].push(self.lts.transitions.len());
            self.lts.transitions.push(ObsTransition { from, label, to, via });
        }
    }

    fn settle_into(&mut self, from: usize, outcomes: Vec<Outcome>, prefix: Vec<Observation>) {
        for outcome in outcomes {
            match outcome {
                Outcome::Idle(config, labels, via) => {
                    let mut seen = prefix.clone();
                    seen.extend(observations(&labels));
                    let to = self.state(StateKind::Idle, config);
                    self.link(from, ObsLabel::batch(seen), to, via);
                }
                Outcome::Stuck(labels, via) => {
                    let mut seen = prefix.clone();
                    seen.extend(observations(&labels));
                    let to = self.stuck_state();
                    self.link(from, ObsLabel::batch(seen), to, via);
                }
            }
        }
    }

    fn expand(&mut self, id: usize) {
        let Some(config) = self.configs[id].clone() else {
            return;
        };
        let (contract, domains) = (self.contract, self.domains);
        match self.lts.states[id].kind {
            StateKind::Stuck => {}
            StateKind::PreAgreement => {
                for terms in &domains.terms {
                    let action = Action::Agree(terms.clone());
                    let Ok((next, labels)) = contract.step(&config, &action) else {
                        continue;
                    };
                    let agreement = labels
                        .iter()
                        .find_map(AgreementObs::from_label)
                        .expect("agreement label");
                    let to = self.state(StateKind::Idle, next);
                    self.link(id, ObsLabel::Agreement(agreement), to, vec![action]);
                }
            }
            StateKind::Idle => {
                let Phase::In(state) = config.phase else {
                    return;
                };
                for &index in contract.functions_in(state) {
                    let f = contract.function(index);
                    for (args, assets) in &domains.calls[index] {
                        let call = CallAction {
                            party: f.caller.text.clone(),
                            function: f.name.text.clone(),
                            args: args.clone(),
                            assets: assets.clone(),
                        };
                        let action = Action::Call(call.clone());
                        match contract.call(&config, &call) {
                            Ok((next, labels)) => {
                                let outcomes = fire_all(contract, next, labels, vec![action]);
                                self.settle_into(id, outcomes, Vec::new());
                            }
                            Err(e) if e.is_stuck() => {
                                let attempted = Observation::Call {
                                    party: call.party,
                                    function: call.function,
                                    args: call.args,
                                    assets: call.assets,
                                };
                                let to = self.stuck_state();
                                self.link(id, ObsLabel::batch(vec![attempted]), to, vec![action]);
                            }
                            Err(_) => {}
                        }
                    }
                }
                if config.clock < self.options.horizon {
                    let (next, _) = contract.tick(&config).expect("idle configurations can tick");
                    let mut transient = false;
                    for outcome in fire_all(contract, next.clone(), Vec::new(), vec![Action::Tick]) {
                        match outcome {
                            Outcome::Idle(target, labels, via) if observations(&labels).is_empty() => {
                                let to = self.state(StateKind::Idle, target);
                                self.link(id, ObsLabel::TimeAdvance, to, via);
                            }
                            _ => transient = true,
                        }
                    }
                    if transient {
                        let to = self.state(StateKind::Transient, next);
                        self.link(id, ObsLabel::TimeAdvance, to, vec![Action::Tick]);
                    }
                }
            }
            StateKind::Transient => {
                let outcomes: Vec<Outcome> = fire_all(contract, config, Vec::new(), Vec::new())
                    .into_iter()
                    .filter(|o| match o {
                        Outcome::Idle(_, labels, _) => !observations(labels).is_empty(),
                        Outcome::Stuck(..) => true,
                    })
                    .collect();
                self.settle_into(id, outcomes, Vec::new());
            }
        }
    }
}

/// Calls that some argument tuple of the domains admits in `config`.
pub fn ready_set(contract: &Contract, domains: &Domains, config: &Configuration) -> BTreeSet<ReadyEntry> {
    let Phase::In(state) = config.phase else {
        return BTreeSet::new();
    };
    let mut out = BTreeSet::new();
    for &index in contract.functions_in(state) {
        let f = contract.function(index);
        let admitted = domains.calls[index].iter().any(|(args, assets)| {
            let call = CallAction {
                party: f.caller.text.clone(),
                function: f.name.text.clone(),
                args: args.clone(),
                assets: assets.clone(),
            };
            match contract.call(config, &call) {
                Ok(_) => true,
                Err(e) => e.is_stuck(),
            }
        });
        if admitted {
            out.insert(ReadyEntry {
                party: f.caller.text.clone(),
                function: f.name.text.clone(),
                values: f.value_params.len(),
                assets: f.asset_params.len(),
            });
        }
    }
    out
}

pub fn env_signature(contract: &Contract, env: &Environment, horizon: i64) -> EnvSignature {
    let clauses = contract
        .ast
        .agreement
        .clauses
        .iter()
        .map(|clause| {
            clause
                .fields
                .iter()
                .map(|f| env.fields.get(f.as_str()).cloned().unwrap_or_default())
                .collect()
        })
        .collect();
    let parties = contract
        .ast
        .agreement
        .parties
        .iter()
        .filter_map(|p| env.parties.get(p.as_str()).map(|id| (p.text.clone(), id.clone())))
        .collect();
    EnvSignature {
        parties,
        horizon,
        clauses,
    }
}

pub fn observable_lts(
    contract: &Contract,
    env: &Environment,
    options: &ObsOptions,
) -> Result<ObsLts, EnvError> {
    let domains = env.domains(contract)?;
    let init = contract
        .init(&domains.parties)
        .map_err(|_| EnvError::Format("environment does not bind every party".into()))?;
    let mut builder = Builder {
        contract,
        domains: &domains,
        options: *options,
        lts: ObsLts {
            states: Vec::new(),
            transitions: Vec::new(),
            out: Vec::new(),
            complete: true,
            signature: env_signature(contract, env, options.horizon),
        },
        index: HashMap::new(),
        configs: Vec::new(),
        queue: VecDeque::new(),
        stuck: None,
        seen: HashSet::new(),
    };
    builder.state(StateKind::PreAgreement, init);
    while let Some(id) = builder.queue.pop_front() {
        builder.expand(id);
    }
    Ok(builder.lts)
}

impl ObsLts {
    pub fn transitions_from(&self, state: usize) -> impl Iterator<Item = &ObsTransition> {
        self.out[state].iter().map(|&t| &self.transitions[t])
    }

    /// States reachable from the initial state by the label sequence.
    pub fn after(&self, labels: &[ObsLabel]) -> BTreeSet<usize> {
        let mut current = BTreeSet::from([INITIAL]);
        for label in labels {
            current = current
                .iter()
                .flat_map(|&s| self.transitions_from(s))
                .filter(|t| &t.label == label)
                .map(|t| t.to)
                .collect();
        }
        current
    }
}
