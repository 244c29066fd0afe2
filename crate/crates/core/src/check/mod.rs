//! Static checks run before execution: name resolution, kinds, the state
//! graph and asset linearity.

pub mod diagnostic;
pub mod graph;
pub mod linearity;

use std::collections::BTreeSet;

pub use diagnostic::{has_errors, Code, Diagnostic, Severity};
pub use graph::{build_state_graph, Edge, EdgeLabel, StateGraph};
pub use linearity::check_linearity;

use crate::syntax::{
    for_each_expr, for_each_stmt, stmt_exprs, ContractAst, Expr, ExprKind, FunctionDecl, Name, Stmt, StmtKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Field,
    Asset,
    Party,
    ValueParam,
    AssetParam,
    Unknown,
}

struct Scope<'a> {
    ast: &'a ContractAst,
    function: &'a FunctionDecl,
    in_handler: bool,
}

impl Scope<'_> {
    fn kind(&self, name: &str) -> Kind {
        if self.function.value_params.iter().any(|p| p.text == name) {
            Kind::ValueParam
        } else if self.function.asset_params.iter().any(|p| p.text == name) {
            Kind::AssetParam
        } else if self.ast.is_field(name) {
            Kind::Field
        } else if self.ast.is_asset(name) {
            Kind::Asset
        } else if self.ast.is_party(name) {
            Kind::Party
        } else {
            Kind::Unknown
        }
    }
}

struct Checker<'a> {
    ast: &'a ContractAst,
    out: Vec<Diagnostic>,
    reads: Vec<&'a Name>,
}

impl<'a> Checker<'a> {
    fn undeclared(&mut self, name: &Name) {
        self.out.push(Diagnostic::error(
            Code::UndeclaredName,
            name.span,
            format!("`{name}` is not declared"),
        ));
    }

    fn mismatch(&mut self, name: &Name, message: String) {
        self.out
            .push(Diagnostic::error(Code::KindMismatch, name.span, message));
    }

    fn asset_param_in_handler(&mut self, name: &Name) {
        self.out.push(Diagnostic::error(
            Code::AssetParamInHandler,
            name.span,
            format!("asset parameter `{name}` cannot be used inside an event handler"),
        ));
    }

    fn value_name(&mut self, scope: &Scope, name: &'a Name) {
        match scope.kind(name.as_str()) {
            Kind::Field => self.reads.push(name),
            Kind::Asset | Kind::ValueParam => {}
            Kind::AssetParam if scope.in_handler => self.asset_param_in_handler(name),
            Kind::AssetParam => {}
            Kind::Party => self.mismatch(name, format!("party `{name}` used as a value")),
            Kind::Unknown => self.undeclared(name),
        }
    }

    fn asset_name(&mut self, scope: &Scope, name: &Name, as_target: bool) {
        match scope.kind(name.as_str()) {
            Kind::Asset => {}
            Kind::AssetParam if scope.in_handler => self.asset_param_in_handler(name),
            Kind::AssetParam => {}
            Kind::Party if as_target => {}
            Kind::Party => self.mismatch(name, format!("party `{name}` used as an asset")),
            Kind::Field | Kind::ValueParam => self.mismatch(name, format!("value `{name}` used as an asset")),
            Kind::Unknown => self.undeclared(name),
        }
    }

    fn party_name(&mut self, scope: &Scope, name: &Name) {
        match scope.kind(name.as_str()) {
            Kind::Party => {}
            Kind::Asset | Kind::AssetParam => {
                self.mismatch(name, format!("asset `{name}` used as a value receiver"))
            }
            Kind::Field | Kind::ValueParam => self.mismatch(name, format!("`{name}` is not a party")),
            Kind::Unknown => self.out.push(Diagnostic::error(
                Code::UnknownParty,
                name.span,
                format!("`{name}` is not a party of the agreement"),
            )),
        }
    }

    fn expr(&mut self, scope: &Scope, expr: &'a Expr) {
        for_each_expr(expr, &mut |e| match &e.kind {
            ExprKind::Name(name) => self.value_name(scope, name),
            ExprKind::Uses { asset, party } => {
                self.asset_name(scope, asset, false);
                if let Some(party) = party {
                    self.party_name(scope, party);
                }
            }
            ExprKind::UseOnce { asset } => self.asset_name(scope, asset, false),
            _ => {}
        });
    }

    fn stmts(&mut self, scope: &Scope, stmts: &'a [Stmt]) {
        for stmt in stmts {
            for e in stmt_exprs(stmt) {
                self.expr(scope, e);
            }
            match &stmt.kind {
                StmtKind::AssetMove { source, target, .. } => {
                    self.asset_name(scope, source, false);
                    self.asset_name(scope, target, true);
                }
                StmtKind::ValueSend { party, .. } => self.party_name(scope, party),
                StmtKind::FieldUpdate { .. } => {}
                StmtKind::EventSchedule { handler, .. } => {
                    let inner = Scope {
                        ast: scope.ast,
                        function: scope.function,
                        in_handler: true,
                    };
                    self.stmts(&inner, handler);
                }
                StmtKind::IfElse {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    self.stmts(scope, then_branch);
                    if let Some(else_branch) = else_branch {
                        self.stmts(scope, else_branch);
                    }
                }
            }
        }
    }

    fn function(&mut self, f: &'a FunctionDecl) {
        if !self.ast.is_party(f.caller.as_str()) {
            self.out.push(Diagnostic::error(
                Code::UnknownParty,
                f.caller.span,
                format!(
                    "caller `{}` of `{}` is not a party of the agreement",
                    f.caller, f.name
                ),
            ));
        }
        let scope = Scope {
            ast: self.ast,
            function: f,
            in_handler: false,
        };
        if let Some(pre) = &f.precondition {
            self.expr(&scope, pre);
        }
        self.stmts(&scope, &f.body);
    }
}

/// Name resolution, kind separation, dead functions and unset fields.
pub fn check_wellformed(ast: &ContractAst) -> Vec<Diagnostic> {
    let mut checker = Checker {
        ast,
        out: Vec::new(),
        reads: Vec::new(),
    };
    for f in &ast.functions {
        checker.function(f);
    }

    let mut entered: BTreeSet<&str> = BTreeSet::from([ast.agreement.target.as_str()]);
    let mut assigned: BTreeSet<&str> = ast
        .agreement
        .clauses
        .iter()
        .flat_map(|c| c.fields.iter().map(|f| f.as_str()))
        .collect();
    for f in &ast.functions {
        entered.insert(f.target.as_str());
        for_each_stmt(&f.body, &mut |stmt| match &stmt.kind {
            StmtKind::EventSchedule { target, .. } => {
                entered.insert(target.as_str());
            }
            StmtKind::FieldUpdate { field, .. } => {
                assigned.insert(field.as_str());
            }
            _ => {}
        });
    }
    for f in &ast.functions {
        if !entered.contains(f.guard.as_str()) {
            checker.out.push(Diagnostic::warning(
                Code::DeadFunction,
                f.guard.span,
                format!(
                    "`{}` can never be called: no transition enters @{}",
                    f.name, f.guard
                ),
            ));
        }
    }
    let mut warned = BTreeSet::new();
    for read in std::mem::take(&mut checker.reads) {
        if !assigned.contains(read.as_str()) && warned.insert(read.as_str()) {
            checker.out.push(Diagnostic::warning(
                Code::UnsetField,
                read.span,
                format!("field `{read}` is read but no agreement clause or assignment sets it"),
            ));
        }
    }
    checker.out
}

/// All static checks, ordered by source position.
pub fn check_all(ast: &ContractAst) -> Vec<Diagnostic> {
    let mut all = check_wellformed(ast);
    all.extend(build_state_graph(ast).diagnostics);
    all.extend(check_linearity(ast));
    all.sort_by_key(|d| (d.span.start, d.severity, d.code));
    all
}
