//! State graph: one edge per function and one per event-scheduling site.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use super::diagnostic::{Code, Diagnostic};
use crate::syntax::{for_each_stmt, ContractAst, SiteId, Span, StmtKind};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Function { caller: String, name: String },
    Event(SiteId),
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Function { caller, name } => write!(f, "{caller}:{name}"),
            EdgeLabel::Event(site) => write!(f, "event#{site}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: String,
    pub label: EdgeLabel,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateGraph {
    /// States in first-mention order.
    pub nodes: Vec<String>,
    pub initial: String,
    pub edges: Vec<Edge>,
    /// Warnings for states not reachable from the initial state.
    pub diagnostics: Vec<Diagnostic>,
}

impl StateGraph {
    pub fn successors<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.from == state)
    }

    /// States reachable from `start`, including `start` itself.
    pub fn reachable_from(&self, start: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::from([start.to_string()]);
        let mut queue = VecDeque::from([start.to_string()]);
        while let Some(state) = queue.pop_front() {
            for edge in self.successors(&state) {
                if seen.insert(edge.to.clone()) {
                    queue.push_back(edge.to.clone());
                }
            }
        }
        seen
    }

    pub fn function_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges
            .iter()
            .filter(|e| matches!(e.label, EdgeLabel::Function { .. }))
    }

    pub fn event_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges
            .iter()
            .filter(|e| matches!(e.label, EdgeLabel::Event(_)))
    }
}

pub fn build_state_graph(ast: &ContractAst) -> StateGraph {
    let mut edges = Vec::new();
    let mut first_span: Vec<(String, Span)> = Vec::new();
    let mut note = |name: &crate::syntax::Name| {
        if !first_span.iter().any(|(s, _)| s == &name.text) {
            first_span.push((name.text.clone(), name.span));
        }
    };
    note(&ast.agreement.target);
    for f in &ast.functions {
        note(&f.guard);
        note(&f.target);
        edges.push(Edge {
            from: f.guard.text.clone(),
            label: EdgeLabel::Function {
                caller: f.caller.text.clone(),
                name: f.name.text.clone(),
            },
            to: f.target.text.clone(),
        });
        for_each_stmt(&f.body, &mut |stmt| {
            if let StmtKind::EventSchedule {
                site, guard, target, ..
            } = &stmt.kind
            {
                note(guard);
                note(target);
                edges.push(Edge {
                    from: guard.text.clone(),
                    label: EdgeLabel::Event(*site),
                    to: target.text.clone(),
                });
            }
        });
    }
    edges.sort_by_key(|e| match e.label {
        EdgeLabel::Function { .. } => (0, 0),
        EdgeLabel::Event(site) => (1, site),
    });
    let mut graph = StateGraph {
        nodes: first_span.iter().map(|(s, _)| s.clone()).collect(),
        initial: ast.agreement.target.text.clone(),
        edges,
        diagnostics: Vec::new(),
    };
    let reachable = graph.reachable_from(&graph.initial);
    graph.diagnostics = first_span
        .iter()
        .filter(|(state, _)| !reachable.contains(state))
        .map(|(state, span)| {
            Diagnostic::warning(
                Code::UnreachableState,
                *span,
                format!("state @{state} is not reachable from the initial state"),
            )
        })
        .collect();
    graph
}
