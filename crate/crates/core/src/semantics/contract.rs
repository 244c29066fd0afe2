//! A parsed contract indexed for execution.

use std::collections::BTreeSet;

use crate::syntax::{
    for_each_expr, for_each_stmt, stmt_exprs, ContractAst, ExprKind, FunctionDecl, SiteId, Stmt, StmtKind,
    TimeExpr,
};

pub type StateId = u16;

/// One event-scheduling statement.
#[derive(Clone, Debug)]
pub struct Site {
    pub function: usize,
    pub guard: StateId,
    pub target: StateId,
    pub trigger: TimeExpr,
    pub handler: Vec<Stmt>,
    /// Fields and value parameters read by the handler, captured when the
    /// event is scheduled.
    pub captures: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Contract {
    pub ast: ContractAst,
    pub states: Vec<String>,
    pub sites: Vec<Site>,
    /// Function indices per guard state, in source order.
    by_state: Vec<Vec<usize>>,
    initial: StateId,
    time_invariant: bool,
}

impl Contract {
    pub fn new(ast: ContractAst) -> Contract {
        let states = ast.states();
        let state_id = |name: &str| -> StateId {
            states
                .iter()
                .position(|s| s == name)
                .expect("every state is collected") as StateId
        };
        let mut by_state = vec![Vec::new(); states.len()];
        for (index, f) in ast.functions.iter().enumerate() {
            by_state[state_id(f.guard.as_str()) as usize].push(index);
        }
        let mut sites: Vec<(SiteId, Site)> = Vec::new();
        for (index, f) in ast.functions.iter().enumerate() {
            for_each_stmt(&f.body, &mut |stmt| {
                if let StmtKind::EventSchedule {
                    site,
                    trigger,
                    guard,
                    handler,
                    target,
                } = &stmt.kind
                {
                    sites.push((
                        *site,
                        Site {
                            function: index,
                            guard: state_id(guard.as_str()),
                            target: state_id(target.as_str()),
                            trigger: trigger.clone(),
                            handler: handler.clone(),
                            captures: captures(&ast, f, handler),
                        },
                    ));
                }
            });
        }
        sites.sort_by_key(|(site, _)| *site);
        let time_invariant = is_time_invariant(&ast);
        Contract {
            initial: state_id(ast.agreement.target.as_str()),
            states,
            sites: sites.into_iter().map(|(_, s)| s).collect(),
            by_state,
            time_invariant,
            ast,
        }
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id as usize]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(|i| i as StateId)
    }

    pub fn function(&self, index: usize) -> &FunctionDecl {
        &self.ast.functions[index]
    }

    /// Functions callable in `state`, in source order.
    pub fn functions_in(&self, state: StateId) -> &[usize] {
        &self.by_state[state as usize]
    }

    pub fn find_function(&self, state: StateId, caller: &str, name: &str) -> Option<usize> {
        self.functions_in(state).iter().copied().find(|&i| {
            let f = self.function(i);
            f.caller.as_str() == caller && f.name.as_str() == name
        })
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.ast.fields.iter().position(|f| f.as_str() == name)
    }

    pub fn asset_index(&self, name: &str) -> Option<usize> {
        self.ast.assets.iter().position(|a| a.as_str() == name)
    }

    /// True when behaviour does not depend on absolute time: every trigger
    /// is `now + offset` and `now` appears nowhere else. Such contracts
    /// behave identically when a whole run is shifted in time.
    pub fn is_time_invariant(&self) -> bool {
        self.time_invariant
    }

    /// Fields set by the agreement, in declaration order.
    pub fn agreed_fields(&self) -> Vec<&str> {
        self.ast
            .agreement
            .clauses
            .iter()
            .flat_map(|c| c.fields.iter().map(|f| f.as_str()))
            .collect()
    }
}

fn captures(ast: &ContractAst, f: &FunctionDecl, handler: &[Stmt]) -> Vec<String> {
    let mut names = BTreeSet::new();
    for_each_stmt(handler, &mut |stmt| {
        for e in stmt_exprs(stmt) {
            for_each_expr(e, &mut |e| {
                if let ExprKind::Name(n) = &e.kind {
                    if ast.is_field(n.as_str()) || f.value_params.iter().any(|p| p.text == n.text) {
                        names.insert(n.text.clone());
                    }
                }
            });
        }
    });
    names.into_iter().collect()
}

fn is_time_invariant(ast: &ContractAst) -> bool {
    fn mentions_now(e: &crate::syntax::Expr) -> bool {
        let mut found = false;
        for_each_expr(e, &mut |e| found |= matches!(e.kind, ExprKind::Now));
        found
    }
    let mut invariant = true;
    for f in &ast.functions {
        if f.precondition.as_ref().is_some_and(mentions_now) {
            invariant = false;
        }
        for_each_stmt(&f.body, &mut |stmt| match &stmt.kind {
            StmtKind::EventSchedule {
                trigger: TimeExpr::Relative(offset),
                ..
            } => invariant &= !mentions_now(offset),
            StmtKind::EventSchedule { .. } => invariant = false,
            _ => invariant &= !stmt_exprs(stmt).into_iter().any(mentions_now),
        });
    }
    invariant
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;

    fn corpus(name: &str) -> Contract {
        let path = format!(
            "{}/../../corpus/contracts/{name}.stipula",
            env!("CARGO_MANIFEST_DIR")
        );
        Contract::new(parse_source(&std::fs::read_to_string(path).unwrap()).unwrap())
    }

    #[test]
    fn time_invariance() {
        assert!(corpus("subscription").is_time_invariant());
        assert!(corpus("licence").is_time_invariant());
        assert!(corpus("bike_rental").is_time_invariant());
        assert!(!corpus("bet").is_time_invariant());
    }

    #[test]
    fn handler_captures() {
        let c = corpus("purchase");
        assert_eq!(c.sites.len(), 1);
        assert!(c.sites[0].captures.is_empty());
        let c = corpus("bike_rental");
        assert!(c.sites[0].captures.is_empty());
    }

    #[test]
    fn lookup() {
        let c = corpus("subscription");
        let inactive = c.state_id("Inactive").unwrap();
        assert_eq!(c.initial_state(), inactive);
        assert_eq!(c.find_function(inactive, "Buyer", "subscribe"), Some(0));
        assert_eq!(c.find_function(inactive, "Editor", "subscribe"), None);
    }
}
