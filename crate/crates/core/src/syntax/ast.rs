//! Abstract syntax of a contract.
//!
//! Every node carries the [`Span`] it was parsed from. Spans never take part
//! in structural equality or hashing, so `parse(print(ast)) == ast` compares
//! shape and content only.

use std::fmt;
use std::hash::{Hash, Hasher};

use crate::value::Rational;

/// Byte range plus the 1-based line and column of its first character.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: self.line,
            col: self.col,
        }
    }

    pub fn position(&self) -> Position {
        Position {
            line: self.line,
            col: self.col,
        }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// A line/column pair for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Position {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// An identifier or state name with its location.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

impl Name {
    pub fn new(text: impl Into<String>) -> Name {
        Name {
            text: text.into(),
            span: Span::default(),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContractAst {
    pub name: Name,
    pub assets: Vec<Name>,
    pub fields: Vec<Name>,
    pub agreement: AgreementDecl,
    pub functions: Vec<FunctionDecl>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AgreementDecl {
    pub parties: Vec<Name>,
    pub clauses: Vec<Clause>,
    pub target: Name,
    pub span: Span,
}

/// One line of the agreement: which parties agree on which fields.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub parties: Vec<Name>,
    pub fields: Vec<Name>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionDecl {
    pub guard: Name,
    pub caller: Name,
    pub name: Name,
    pub value_params: Vec<Name>,
    pub asset_params: Vec<Name>,
    pub precondition: Option<Expr>,
    pub body: Vec<Stmt>,
    pub target: Name,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

/// Identifier of an event-scheduling statement, numbered in source order.
pub type SiteId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    /// `source -o target` moves the whole content; `amount -o source, target`
    /// moves `amount` out of `source`.
    AssetMove {
        amount: Option<Expr>,
        source: Name,
        target: Name,
    },
    ValueSend {
        value: Expr,
        party: Name,
    },
    FieldUpdate {
        value: Expr,
        field: Name,
    },
    EventSchedule {
        site: SiteId,
        trigger: TimeExpr,
        guard: Name,
        handler: Vec<Stmt>,
        target: Name,
    },
    IfElse {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
}

/// Trigger of an event: `now + offset` or an absolute tick.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TimeExpr {
    Relative(Expr),
    Absolute(Expr),
}

impl TimeExpr {
    pub fn expr(&self) -> &Expr {
        match self {
            TimeExpr::Relative(e) | TimeExpr::Absolute(e) => e,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr {
            kind,
            span: Span::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Number(Rational),
    Duration(Rational, DurationUnit),
    Str(String),
    Bool(bool),
    Now,
    Name(Name),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Uses { asset: Name, party: Option<Name> },
    UseOnce { asset: Name },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DurationUnit {
    Hour,
    Day,
    Month,
    Year,
}

impl DurationUnit {
    /// Length in clock ticks; one tick is one hour.
    pub fn ticks(self) -> i64 {
        match self {
            DurationUnit::Hour => 1,
            DurationUnit::Day => 24,
            DurationUnit::Month => 720,
            DurationUnit::Year => 8760,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            DurationUnit::Hour => "hour",
            DurationUnit::Day => "day",
            DurationUnit::Month => "month",
            DurationUnit::Year => "year",
        }
    }

    pub fn from_word(word: &str) -> Option<DurationUnit> {
        Some(match word {
            "hour" | "hours" => DurationUnit::Hour,
            "day" | "days" => DurationUnit::Day,
            "month" | "months" => DurationUnit::Month,
            "year" | "years" => DurationUnit::Year,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul => 5,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

impl ContractAst {
    pub fn is_asset(&self, name: &str) -> bool {
        self.assets.iter().any(|a| a.text == name)
    }

    pub fn is_field(&self, name: &str) -> bool {
        self.fields.iter().any(|f| f.text == name)
    }

    pub fn is_party(&self, name: &str) -> bool {
        self.agreement.parties.iter().any(|p| p.text == name)
    }

    /// Every state mentioned anywhere, in first-mention order.
    pub fn states(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |name: &Name| {
            if !out.iter().any(|s| s == &name.text) {
                out.push(name.text.clone());
            }
        };
        push(&self.agreement.target);
        for f in &self.functions {
            push(&f.guard);
            push(&f.target);
            for_each_stmt(&f.body, &mut |stmt| {
                if let StmtKind::EventSchedule { guard, target, .. } = &stmt.kind {
                    push(guard);
                    push(target);
                }
            });
        }
        out
    }

    /// Event-scheduling statements in site order, with the index of the
    /// function that contains them.
    pub fn schedule_sites(&self) -> Vec<(usize, &Stmt)> {
        let mut out = Vec::new();
        for (index, f) in self.functions.iter().enumerate() {
            for_each_stmt(&f.body, &mut |stmt| {
                if matches!(stmt.kind, StmtKind::EventSchedule { .. }) {
                    out.push((index, stmt));
                }
            });
        }
        out.sort_by_key(|(_, stmt)| match &stmt.kind {
            StmtKind::EventSchedule { site, .. } => *site,
            _ => unreachable!(),
        });
        out
    }
}

/// Pre-order walk over statements, descending into branches and handlers.
pub fn for_each_stmt<'a>(stmts: &'a [Stmt], visit: &mut dyn FnMut(&'a Stmt)) {
    for stmt in stmts {
        visit(stmt);
        match &stmt.kind {
            StmtKind::EventSchedule { handler, .. } => for_each_stmt(handler, visit),
            StmtKind::IfElse {
                then_branch,
                else_branch,
                ..
            } => {
                for_each_stmt(then_branch, visit);
                if let Some(else_branch) = else_branch {
                    for_each_stmt(else_branch, visit);
                }
            }
            _ => {}
        }
    }
}

/// Pre-order walk over an expression tree.
pub fn for_each_expr<'a>(expr: &'a Expr, visit: &mut dyn FnMut(&'a Expr)) {
    visit(expr);
    if let ExprKind::Binary(_, lhs, rhs) = &expr.kind {
        for_each_expr(lhs, visit);
        for_each_expr(rhs, visit);
    }
}

/// Expressions directly owned by a statement (not those of nested statements).
pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
    match &stmt.kind {
        StmtKind::AssetMove { amount, .. } => amount.iter().collect(),
        StmtKind::ValueSend { value, .. } | StmtKind::FieldUpdate { value, .. } => vec![value],
        StmtKind::EventSchedule { trigger, .. } => vec![trigger.expr()],
        StmtKind::IfElse { cond, .. } => vec![cond],
    }
}
