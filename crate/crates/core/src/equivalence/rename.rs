//! Consistent renaming of states, assets and fields.

use std::collections::BTreeMap;

use crate::semantics::Environment;
use crate::syntax::{ContractAst, Expr, ExprKind, Name, Stmt, StmtKind};

/// Old name to new name, per namespace. Names not listed are kept.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renaming {
    pub states: BTreeMap<String, String>,
    pub assets: BTreeMap<String, String>,
    pub fields: BTreeMap<String, String>,
}

impl Renaming {
    fn state(&self, name: &mut Name) {
        if let Some(new) = self.states.get(&name.text) {
            name.text = new.clone();
        }
    }

    /// Asset, field or anything else that shares their namespace.
    fn value(&self, name: &mut Name) {
        if let Some(new) = self
            .assets
            .get(&name.text)
            .or_else(|| self.fields.get(&name.text))
        {
            name.text = new.clone();
        }
    }

    fn expr(&self, expr: &mut Expr) {
        match &mut expr.kind {
            ExprKind::Name(n) => self.value(n),
            ExprKind::Uses { asset, .. } | ExprKind::UseOnce { asset } => self.value(asset),
            ExprKind::Binary(_, l, r) => {
                self.expr(l);
                self.expr(r);
            }
            _ => {}
        }
    }

    fn stmts(&self, stmts: &mut [Stmt]) {
        for stmt in stmts {
            match &mut stmt.kind {
                StmtKind::AssetMove {
                    amount,
                    source,
                    target,
                } => {
                    if let Some(e) = amount {
                        self.expr(e);
                    }
                    self.value(source);
                    self.value(target);
                }
                StmtKind::ValueSend { value, .. } => self.expr(value),
                StmtKind::FieldUpdate { value, field } => {
                    self.expr(value);
                    self.value(field);
                }
                StmtKind::EventSchedule {
                    trigger,
                    guard,
                    handler,
                    target,
                    ..
                } => {
                    match trigger {
                        crate::syntax::TimeExpr::Relative(e) | crate::syntax::TimeExpr::Absolute(e) => {
                            self.expr(e)
                        }
                    }
                    self.state(guard);
                    self.state(target);
                    self.stmts(handler);
                }
                StmtKind::IfElse {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    self.expr(cond);
                    self.stmts(then_branch);
                    if let Some(else_branch) = else_branch {
                        self.stmts(else_branch);
                    }
                }
            }
        }
    }

    pub fn apply(&self, ast: &ContractAst) -> ContractAst {
        let mut out = ast.clone();
        out.assets.iter_mut().for_each(|n| self.value(n));
        out.fields.iter_mut().for_each(|n| self.value(n));
        for clause in &mut out.agreement.clauses {
            clause.fields.iter_mut().for_each(|n| self.value(n));
        }
        self.state(&mut out.agreement.target);
        for f in &mut out.functions {
            self.state(&mut f.guard);
            self.state(&mut f.target);
            if let Some(pre) = &mut f.precondition {
                self.expr(pre);
            }
            self.stmts(&mut f.body);
        }
        out
    }

    /// Adds renamed copies of the field domains, keeping the originals.
    pub fn extend_environment(&self, env: &Environment) -> Environment {
        let mut out = env.clone();
        for (old, new) in &self.fields {
            if let Some(domain) = env.fields.get(old) {
                out.fields.insert(new.clone(), domain.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_source, pretty_print};

    #[test]
    fn renames_every_occurrence() {
        let ast = parse_source(
            "stipula T { assets w fields f agreement (A) { A : f } => @S
               @S A : go [h] (h == f) { h -o w  now + 1 >> @S { w -o A } => @E } => @S }",
        )
        .unwrap();
        let r = Renaming {
            states: [("S".into(), "P".into()), ("E".into(), "Q".into())].into(),
            assets: [("w".into(), "purse".into())].into(),
            fields: [("f".into(), "price".into())].into(),
        };
        let text = pretty_print(&r.apply(&ast));
        for old in ["@S", "@E", " w ", "(h == f)"] {
            assert!(!text.contains(old), "{old} survived in\n{text}");
        }
        assert!(text.contains("h -o purse") && text.contains("@Q") && text.contains("h == price"));
        assert!(parse_source(&text).is_ok());
    }
}
