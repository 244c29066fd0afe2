//! Path-sensitive linearity of asset parameters.
//!
//! Every path through the `if`/`else` structure of a body is enumerated. On
//! each path an asset parameter must be moved out whole exactly once; moving
//! it again, or leaving it behind, is an error. No value reasoning is done:
//! both branches of every conditional are considered feasible.

use std::collections::{BTreeMap, BTreeSet};

use super::diagnostic::{Code, Diagnostic};
use crate::syntax::{ContractAst, Stmt, StmtKind};

/// Atomic statements along each path of `stmts`.
pub fn paths(stmts: &[Stmt]) -> Vec<Vec<&Stmt>> {
    let mut acc: Vec<Vec<&Stmt>> = vec![Vec::new()];
    for stmt in stmts {
        match &stmt.kind {
            StmtKind::IfElse {
                then_branch,
                else_branch,
                ..
            } => {
                let mut alternatives = paths(then_branch);
                match else_branch {
                    Some(else_branch) => alternatives.extend(paths(else_branch)),
                    None => alternatives.push(Vec::new()),
                }
                acc = acc
                    .iter()
                    .flat_map(|prefix| {
                        alternatives.iter().map(move |alt| {
                            let mut path = prefix.clone();
                            path.extend(alt.iter().copied());
                            path
                        })
                    })
                    .collect();
            }
            _ => acc.iter_mut().for_each(|path| path.push(stmt)),
        }
    }
    acc
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Param {
    Held,
    Consumed,
}

pub fn check_linearity(ast: &ContractAst) -> Vec<Diagnostic> {
    let mut found = Vec::new();
    for f in &ast.functions {
        let params: Vec<&str> = f.asset_params.iter().map(|p| p.as_str()).collect();
        check_body(ast, &f.body, &params, f.span, &mut found);
    }
    let mut seen = BTreeSet::new();
    found.retain(|d: &Diagnostic| seen.insert((d.span.start, d.code, d.message.clone())));
    found
}

fn check_body(
    ast: &ContractAst,
    body: &[Stmt],
    params: &[&str],
    owner: crate::syntax::Span,
    out: &mut Vec<Diagnostic>,
) {
    for path in paths(body) {
        let mut state: BTreeMap<&str, Param> = params.iter().map(|p| (*p, Param::Held)).collect();
        // Contract assets that received a whole move earlier on this path.
        let mut filled: BTreeSet<&str> = BTreeSet::new();
        for stmt in path {
            match &stmt.kind {
                StmtKind::AssetMove {
                    amount,
                    source,
                    target,
                } => {
                    if let Some(status) = state.get_mut(source.as_str()) {
                        if *status == Param::Consumed {
                            out.push(Diagnostic::error(
                                Code::AssetMovedTwice,
                                stmt.span,
                                format!("asset parameter `{source}` is moved after it was consumed"),
                            ));
                        } else if amount.is_none() {
                            *status = Param::Consumed;
                        }
                    } else if amount.is_none() {
                        filled.remove(source.as_str());
                    }
                    if let Some(status) = state.get_mut(target.as_str()) {
                        *status = Param::Held;
                    } else if amount.is_none()
                        && ast.is_asset(target.as_str())
                        && !filled.insert(target.as_str())
                    {
                        out.push(Diagnostic::warning(
                            Code::TokenOverwriteHazard,
                            stmt.span,
                            format!(
                                "`{target}` receives a whole asset while it may still hold one; \
                                     a token held there would be overwritten"
                            ),
                        ));
                    }
                }
                StmtKind::EventSchedule { handler, .. } => {
                    check_body(ast, handler, &[], stmt.span, out);
                }
                _ => {}
            }
        }
        for (name, status) in state {
            if status == Param::Held {
                out.push(Diagnostic::error(
                    Code::UnconsumedAsset,
                    owner,
                    format!("asset parameter `{name}` is not fully moved on some execution path"),
                ));
            }
        }
    }
}
