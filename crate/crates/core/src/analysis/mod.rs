//! Bounded checks of asset safety, liquidity and dead ends over the
//! explored transition system.

mod report;

pub use report::{AnalysisReport, Bounds, Finding, FindingKind, Property, Verdict};

use std::collections::{BTreeMap, BTreeSet};

use crate::semantics::{
    explore, Action, Contract, EnvError, Environment, ExploreOptions, Label, Lts, NodeId, Phase,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub horizon: i64,
    pub budget: usize,
    pub parallel: bool,
}

impl AnalysisOptions {
    pub fn new(horizon: i64, budget: usize) -> AnalysisOptions {
        AnalysisOptions {
            horizon,
            budget,
            parallel: false,
        }
    }
}

/// One exploration shared by every property.
///
/// Time-invariant contracts are explored up to time shift, so a node stands
/// for the same configuration at every clock value. A node then counts as
/// reachable when some path reaches it within the horizon, and liquidity
/// asks whether the assets can be released at all. Other contracts are
/// explored exactly up to the horizon; there a node at the horizon with a
/// pending event counts as liquid, since its exit lies past the bound.
pub struct Analyzer<'a> {
    contract: &'a Contract,
    lts: Lts,
    /// Fewest ticks to reach each node, if within the horizon.
    reach: Vec<Option<i64>>,
    trusted: BTreeSet<String>,
    options: AnalysisOptions,
}

impl<'a> Analyzer<'a> {
    pub fn new(
        contract: &'a Contract,
        env: &Environment,
        options: &AnalysisOptions,
    ) -> Result<Analyzer<'a>, EnvError> {
        let domains = env.domains(contract)?;
        let mut explore_options = ExploreOptions::new(options.horizon, options.budget);
        explore_options.parallel = options.parallel;
        explore_options.time_shift = true;
        explore_options.prune_events = true;
        let lts = explore(contract, &domains, &explore_options);
        let reach = lts
            .tick_distances()
            .into_iter()
            .map(|d| d.map(|(t, _)| t).filter(|&t| t <= options.horizon))
            .collect();
        Ok(Analyzer {
            contract,
            lts,
            reach,
            trusted: env.trusted.iter().cloned().collect(),
            options: *options,
        })
    }

    pub fn lts(&self) -> &Lts {
        &self.lts
    }

    fn bounds(&self) -> Bounds {
        Bounds {
            horizon: self.options.horizon,
            budget: self.options.budget,
            configurations: self.lts.nodes.len(),
            transitions: self.lts.edges.len(),
            time_shifted: self.lts.time_shifted,
            complete: self.lts.complete,
        }
    }

    fn reachable(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.lts.nodes.len() as NodeId).filter(|&n| self.reach[n as usize].is_some())
    }

    fn finding(&self, kind: FindingKind, node: NodeId, party: Option<String>, detail: String) -> Finding {
        let edges = self.lts.fastest_path_edges(node).expect("findings are reachable");
        let actions = self.lts.concrete_actions(self.contract, &edges);
        Finding {
            kind,
            state: self.lts.node(node).config.state_name(self.contract).to_string(),
            party,
            detail,
            scenario: crate::semantics::Scenario::from_actions(&self.lts.parties, &actions),
            node,
        }
    }

    fn report(&self, property: Property, findings: Vec<Finding>) -> AnalysisReport {
        let violated = findings.iter().any(|f| f.kind != FindingKind::Terminal);
        let verdict = if violated {
            Verdict::Violated
        } else if self.lts.complete {
            Verdict::HoldsWithinBounds
        } else {
            Verdict::InconclusiveBudget
        };
        AnalysisReport {
            property,
            verdict,
            findings,
            bounds: self.bounds(),
            variant: None,
        }
    }

    /// Violated when some reachable attempt to move assets gets stuck.
    pub fn asset_safety(&self) -> AnalysisReport {
        let mut seen = BTreeSet::new();
        let mut findings = Vec::new();
        for n in self.reachable() {
            let Some(error) = &self.lts.node(n).stuck else {
                continue;
            };
            let edge = &self.lts.edges[self.lts.node(n).parent.expect("stuck nodes have a parent")];
            let state = self.lts.node(n).config.state();
            let function = match &edge.action {
                Action::Call(call) => call.function.clone(),
                other => other.to_string(),
            };
            if seen.insert((state, function.clone(), error.kind())) {
                findings.push(self.finding(
                    FindingKind::Stuck,
                    n,
                    None,
                    format!("{function}: {}", error.describe()),
                ));
            }
        }
        self.report(Property::AssetSafety, findings)
    }

    /// Nodes from which some continuation using `allowed` edges releases
    /// every asset, or leaves the bound with an exit still pending.
    fn liquid(&self, allowed: impl Fn(&Action) -> bool) -> Vec<bool> {
        let nodes = &self.lts.nodes;
        let mut liquid: Vec<bool> = nodes
            .iter()
            .map(|n| {
                n.stuck.is_none()
                    && (n.config.assets_empty()
                        || (!self.lts.time_shifted
                            && n.config.clock >= self.options.horizon
                            && n.config.events.iter().any(|e| e.trigger > n.config.clock)))
            })
            .collect();
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (i, e) in self.lts.edges.iter().enumerate() {
            if nodes[e.to as usize].stuck.is_none() && allowed(&e.action) {
                incoming[e.to as usize].push(i);
            }
        }
        let mut stack: Vec<usize> = (0..nodes.len()).filter(|&n| liquid[n]).collect();
        while let Some(n) = stack.pop() {
            for &e in &incoming[n] {
                let from = self.lts.edges[e].from as usize;
                if !liquid[from] {
                    liquid[from] = true;
                    stack.push(from);
                }
            }
        }
        liquid
    }

    fn locked(&self, property: Property, liquid: &[bool]) -> AnalysisReport {
        let mut seen = BTreeSet::new();
        let mut findings = Vec::new();
        if self.lts.complete {
            for n in self.reachable() {
                let node = self.lts.node(n);
                if node.stuck.is_some() || liquid[n as usize] || node.config.assets_empty() {
                    continue;
                }
                let Phase::In(state) = node.config.phase else {
                    continue;
                };
                if seen.insert(state) {
                    findings.push(self.finding(
                        FindingKind::Locked,
                        n,
                        None,
                        format!("assets held: {}", held(self.contract, &node.config)),
                    ));
                }
            }
        }
        self.report(property, findings)
    }

    /// Violated when some reachable configuration holds assets that no
    /// continuation can release. Also reports, when it differs, the verdict
    /// for continuations in which only trusted parties act.
    pub fn liquidity(&self) -> AnalysisReport {
        let mut report = self.locked(Property::Liquidity, &self.liquid(|_| true));
        let trusted = self.locked(
            Property::LiquidityTrustedOnly,
            &self.liquid(|a| match a {
                Action::Call(call) => self.trusted.contains(&call.party),
                _ => true,
            }),
        );
        if trusted.verdict != report.verdict {
            report.variant = Some(Box::new(trusted));
        }
        report
    }

    /// Roles receiving assets on some continuation from each node.
    fn receivers(&self) -> Vec<BTreeSet<String>> {
        let mut recv: Vec<BTreeSet<String>> = vec![BTreeSet::new(); self.lts.nodes.len()];
        loop {
            let mut changed = false;
            for e in self.lts.edges.iter().rev() {
                let mut add: BTreeSet<String> = e
                    .labels
                    .iter()
                    .filter_map(|l| match l {
                        Label::AssetSend { party, asset } if !asset.is_empty() => Some(party.clone()),
                        _ => None,
                    })
                    .collect();
                add.extend(recv[e.to as usize].iter().cloned());
                let from = &mut recv[e.from as usize];
                let before = from.len();
                from.extend(add);
                changed |= from.len() != before;
            }
            if !changed {
                return recv;
            }
        }
    }

    /// Configurations where nothing happens unless a party acts. Flags
    /// those where a single untrusted party can withhold progress while
    /// assets that would reach someone else stay in the contract; states
    /// where nobody can ever act again are listed as terminal.
    pub fn dead_ends(&self) -> AnalysisReport {
        let receivers = self.receivers();
        let mut seen = BTreeSet::new();
        let mut findings = Vec::new();
        for n in self.reachable() {
            let node = self.lts.node(n);
            let config = &node.config;
            let Phase::In(state) = config.phase else {
                continue;
            };
            if node.stuck.is_some()
                || config
                    .events
                    .iter()
                    .any(|e| self.contract.sites[e.site as usize].guard == state)
            {
                continue;
            }
            let callers: BTreeSet<&str> = self
                .lts
                .edges_from(n)
                .filter(|e| self.lts.node(e.to).stuck.is_none())
                .filter_map(|e| match &e.action {
                    Action::Call(call) => Some(call.party.as_str()),
                    _ => None,
                })
                .collect();
            if callers.is_empty() {
                if self.contract.functions_in(state).is_empty() && seen.insert((state, None)) {
                    let detail = if config.assets_empty() {
                        "no function or event can act".to_string()
                    } else {
                        format!(
                            "no function or event can act; assets held: {}",
                            held(self.contract, config)
                        )
                    };
                    findings.push(self.finding(FindingKind::Terminal, n, None, detail));
                }
                continue;
            }
            let [party] = callers.into_iter().collect::<Vec<_>>()[..] else {
                continue;
            };
            if config.assets_empty()
                || self.trusted.contains(party)
                || !receivers[n as usize].iter().any(|r| r != party)
            {
                continue;
            }
            if seen.insert((state, Some(party.to_string()))) {
                let functions: BTreeSet<&str> = self
                    .contract
                    .functions_in(state)
                    .iter()
                    .map(|&i| self.contract.function(i).name.as_str())
                    .collect();
                let functions: Vec<&str> = functions.into_iter().collect();
                findings.push(self.finding(
                    FindingKind::Withheld,
                    n,
                    Some(party.to_string()),
                    format!(
                        "only {party} can move on ({}); assets held: {}",
                        functions.join(", "),
                        held(self.contract, config)
                    ),
                ));
            }
        }
        self.report(Property::DeadEnds, findings)
    }

    pub fn all(&self) -> Vec<AnalysisReport> {
        vec![self.asset_safety(), self.liquidity(), self.dead_ends()]
    }
}

fn held(contract: &Contract, config: &crate::semantics::Configuration) -> String {
    let items: BTreeMap<&str, String> = contract
        .ast
        .assets
        .iter()
        .zip(&config.assets)
        .filter(|(_, v)| !v.is_empty())
        .map(|(name, v)| (name.as_str(), v.to_string()))
        .collect();
    items
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn check_asset_safety(
    contract: &Contract,
    env: &Environment,
    options: &AnalysisOptions,
) -> Result<AnalysisReport, EnvError> {
    Ok(Analyzer::new(contract, env, options)?.asset_safety())
}

pub fn check_liquidity(
    contract: &Contract,
    env: &Environment,
    options: &AnalysisOptions,
) -> Result<AnalysisReport, EnvError> {
    Ok(Analyzer::new(contract, env, options)?.liquidity())
}

pub fn detect_dead_ends(
    contract: &Contract,
    env: &Environment,
    options: &AnalysisOptions,
) -> Result<AnalysisReport, EnvError> {
    Ok(Analyzer::new(contract, env, options)?.dead_ends())
}
