//! Bounded exploration of every run over finite domains.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use super::config::{Bindings, Configuration};
use super::contract::Contract;
use super::env::Domains;
use super::label::{Action, CallAction, Enabled, Label};
use super::reduce;
use super::scenario::Scenario;
use super::step::{StepError, StepResult};

pub type NodeId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    /// For stuck nodes, the configuration in which the move was attempted.
    pub config: Configuration,
    pub stuck: Option<StepError>,
    /// Edge through which the node was first discovered.
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub action: Action,
    pub labels: Vec<Label>,
    pub to: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub horizon: i64,
    pub budget: usize,
    /// Expand each frontier wave on the rayon pool. The result is identical
    /// to the sequential one.
    pub parallel: bool,
    /// Identify configurations that differ only by a shift in time. Only
    /// applied to time-invariant contracts; ticks are then unbounded and
    /// the horizon is left to the caller.
    pub time_shift: bool,
    /// Drop events that can never fire and number the rest canonically.
    pub prune_events: bool,
}

impl ExploreOptions {
    pub fn new(horizon: i64, budget: usize) -> ExploreOptions {
        ExploreOptions {
            horizon,
            budget,
            parallel: false,
            time_shift: false,
            prune_events: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Lts {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Outgoing edge indices per node, in discovery order.
    pub out: Vec<Vec<usize>>,
    pub complete: bool,
    pub horizon: i64,
    /// Whether nodes stand for every time shift of their configuration.
    pub time_shifted: bool,
    pub pruned: bool,
    pub parties: Bindings,
}

pub const ROOT: NodeId = 0;

/// Every transition out of `config` over the domains. Refused calls are
/// left out; stuck attempts are kept as errors. Ticks are offered while the
/// clock is below `horizon` (always when `None`).
pub fn successors(
    contract: &Contract,
    domains: &Domains,
    config: &Configuration,
    horizon: Option<i64>,
) -> Vec<(Action, StepResult)> {
    let mut out = Vec::new();
    for enabled in contract.enabled_actions(config) {
        match enabled {
            Enabled::Agree => {
                for terms in &domains.terms {
                    let action = Action::Agree(terms.clone());
                    push_unless_refused(&mut out, contract, config, action);
                }
            }
            Enabled::Call {
                party,
                function,
                index,
            } => {
                for (args, assets) in &domains.calls[index] {
                    let action = Action::Call(CallAction {
                        party: party.clone(),
                        function: function.clone(),
                        args: args.clone(),
                        assets: assets.clone(),
                    });
                    push_unless_refused(&mut out, contract, config, action);
                }
            }
            Enabled::Fire(id) => push_unless_refused(&mut out, contract, config, Action::Fire(id)),
            Enabled::Tick => {
                if horizon.is_none_or(|h| config.clock < h) {
                    push_unless_refused(&mut out, contract, config, Action::Tick);
                }
            }
        }
    }
    out
}

fn push_unless_refused(
    out: &mut Vec<(Action, StepResult)>,
    contract: &Contract,
    config: &Configuration,
    action: Action,
) {
    let result = contract.step(config, &action);
    if result.is_ok() || result.as_ref().is_err_and(StepError::is_stuck) {
        out.push((action, result));
    }
}

pub fn explore(contract: &Contract, domains: &Domains, options: &ExploreOptions) -> Lts {
    let shift = options.time_shift && contract.is_time_invariant();
    let prune = options.prune_events;
    let horizon = (!shift).then_some(options.horizon);
    let key = |c: Configuration| normalize(contract, c, shift, prune);
    let root = contract.init(&domains.parties).expect("domains bind every party");
    let mut lts = Lts {
        nodes: vec![Node {
            config: root.clone(),
            stuck: None,
            parent: None,
        }],
        edges: Vec::new(),
        out: vec![Vec::new()],
        complete: true,
        horizon: options.horizon,
        time_shifted: shift,
        pruned: prune,
        parties: domains.parties.clone(),
    };
    let mut index: HashMap<Configuration, NodeId> = HashMap::new();
    index.insert(root, ROOT);
    let mut frontier = vec![ROOT];
    while !frontier.is_empty() {
        let expand = |&id: &NodeId| successors(contract, domains, &lts.nodes[id as usize].config, horizon);
        let expanded: Vec<_> = if options.parallel {
            frontier.par_iter().map(expand).collect()
        } else {
            frontier.iter().map(expand).collect()
        };
        let mut next = Vec::new();
        for (&from, succs) in frontier.iter().zip(expanded) {
            for (action, result) in succs {
                let edge = lts.edges.len();
                let (to, labels) = match result {
                    Ok((config, labels)) => {
                        let config = key(config);
                        match index.get(&config) {
                            Some(&to) => (to, labels),
                            None => {
                                if lts.nodes.len() >= options.budget {
                                    lts.complete = false;
                                    continue;
                                }
                                let to = lts.add_node(config.clone(), None, edge);
                                index.insert(config, to);
                                next.push(to);
                                (to, labels)
                            }
                        }
                    }
                    Err(error) => {
                        if lts.nodes.len() >= options.budget {
                            lts.complete = false;
                            continue;
                        }
                        let config = lts.nodes[from as usize].config.clone();
                        (lts.add_node(config, Some(error), edge), Vec::new())
                    }
                };
                lts.out[from as usize].push(edge);
                lts.edges.push(Edge {
                    from,
                    action,
                    labels,
                    to,
                });
            }
        }
        frontier = next;
    }
    lts
}

fn normalize(contract: &Contract, config: Configuration, shift: bool, prune: bool) -> Configuration {
    let mut config = if shift { config.time_shifted() } else { config };
    if prune {
        reduce::drop_dead_events(contract, &mut config);
        reduce::renumber_events(&mut config);
    }
    config
}

impl Lts {
    fn add_node(&mut self, config: Configuration, stuck: Option<StepError>, parent: usize) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node {
            config,
            stuck,
            parent: Some(parent),
        });
        self.out.push(Vec::new());
        id
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn edges_from(&self, id: NodeId) -> impl Iterator<Item = &Edge> {
        self.out[id as usize].iter().map(|&e| &self.edges[e])
    }

    pub fn stuck_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as NodeId).filter(|&n| self.node(n).stuck.is_some())
    }

    /// Edges along the discovery path from the root.
    pub fn path_edges(&self, id: NodeId) -> Vec<usize> {
        let mut path = Vec::new();
        let mut at = id;
        while let Some(edge) = self.node(at).parent {
            path.push(edge);
            at = self.edges[edge].from;
        }
        path.reverse();
        path
    }

    pub fn path_to(&self, id: NodeId) -> Vec<Action> {
        self.path_edges(id)
            .into_iter()
            .map(|e| self.edges[e].action.clone())
            .collect()
    }

    pub fn scenario_to(&self, contract: &Contract, id: NodeId) -> Scenario {
        let edges = self.path_edges(id);
        Scenario::from_actions(&self.parties, &self.concrete_actions(contract, &edges))
    }

    /// Actions that follow `edges` from the initial configuration under the
    /// unreduced semantics. Event ids can differ once the exploration has
    /// renumbered events, so each firing is matched by its outcome.
    pub fn concrete_actions(&self, contract: &Contract, edges: &[usize]) -> Vec<Action> {
        if !self.pruned {
            return edges.iter().map(|&e| self.edges[e].action.clone()).collect();
        }
        let mut config = self.node(ROOT).config.clone();
        let mut actions = Vec::with_capacity(edges.len());
        for &e in edges {
            let edge = &self.edges[e];
            let target = self.node(edge.to);
            let action = match &edge.action {
                Action::Fire(_) => config
                    .ready_events(contract)
                    .into_iter()
                    .map(Action::Fire)
                    .find(|fire| match contract.step(&config, fire) {
                        Ok((next, _)) => normalize(contract, next, self.time_shifted, true) == target.config,
                        Err(err) => target.stuck.as_ref() == Some(&err),
                    })
                    .expect("a matching event is ready"),
                other => other.clone(),
            };
            if let Ok((next, _)) = contract.step(&config, &action) {
                config = next;
            }
            actions.push(action);
        }
        actions
    }

    /// Minimum number of ticks needed to reach each node from the root,
    /// with the edge that achieves it. Unreachable nodes get `None`.
    pub fn tick_distances(&self) -> Vec<Option<(i64, Option<usize>)>> {
        let mut best: Vec<Option<(i64, Option<usize>)>> = vec![None; self.nodes.len()];
        best[ROOT as usize] = Some((0, None));
        let mut queue = VecDeque::from([ROOT]);
        let mut done = vec![false; self.nodes.len()];
        while let Some(n) = queue.pop_front() {
            if std::mem::replace(&mut done[n as usize], true) {
                continue;
            }
            let (d, _) = best[n as usize].expect("queued nodes have a distance");
            for &e in &self.out[n as usize] {
                let edge = &self.edges[e];
                let w = i64::from(edge.action == Action::Tick);
                let to = edge.to as usize;
                if best[to].is_none_or(|(old, _)| d + w < old) {
                    best[to] = Some((d + w, Some(e)));
                    if w == 0 {
                        queue.push_front(edge.to);
                    } else {
                        queue.push_back(edge.to);
                    }
                }
            }
        }
        best
    }

    /// Edges along a path reaching `id` with the fewest ticks.
    pub fn fastest_path_edges(&self, id: NodeId) -> Option<Vec<usize>> {
        let best = self.tick_distances();
        best[id as usize]?;
        let mut path = Vec::new();
        let mut at = id as usize;
        while let Some((_, Some(e))) = best[at] {
            path.push(e);
            at = self.edges[e].from as usize;
        }
        path.reverse();
        Some(path)
    }

    /// Actions along a path reaching `id` with the fewest ticks.
    pub fn fastest_path_to(&self, id: NodeId) -> Option<Vec<Action>> {
        self.fastest_path_edges(id)
            .map(|edges| edges.into_iter().map(|e| self.edges[e].action.clone()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkStep {
    pub action: Action,
    pub labels: Vec<Label>,
    pub config: Configuration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    pub start: Configuration,
    pub steps: Vec<WalkStep>,
    pub stuck: Option<(Action, StepError)>,
}

/// One run chosen step by step. `choose(n)` picks among `n` options and
/// must return an index below `n`. After a tick, `choose(2)` decides whether
/// time keeps running until an event is ready or the horizon is reached;
/// each of those ticks is recorded as a step of its own. The walk ends when
/// nothing is enabled, a move gets stuck or `max_steps` decisions are made.
pub fn random_walk(
    contract: &Contract,
    domains: &Domains,
    horizon: i64,
    max_steps: usize,
    mut choose: impl FnMut(usize) -> usize,
) -> Walk {
    let start = contract.init(&domains.parties).expect("domains bind every party");
    let mut walk = Walk {
        start: start.clone(),
        steps: Vec::new(),
        stuck: None,
    };
    let mut config = start;
    for _ in 0..max_steps {
        let mut options = successors(contract, domains, &config, Some(horizon));
        if options.is_empty() {
            break;
        }
        let (action, result) = options.swap_remove(choose(options.len()));
        match result {
            Ok((next, labels)) => {
                let leap = action == Action::Tick && choose(2) == 1;
                config = next.clone();
                walk.steps.push(WalkStep {
                    action,
                    labels,
                    config: next,
                });
                while leap && config.clock < horizon && config.ready_events(contract).is_empty() {
                    let (next, labels) = contract.tick(&config).expect("idle configurations can tick");
                    config = next.clone();
                    walk.steps.push(WalkStep {
                        action: Action::Tick,
                        labels,
                        config: next,
                    });
                }
            }
            Err(error) => {
                walk.stuck = Some((action, error));
                break;
            }
        }
    }
    walk
}
