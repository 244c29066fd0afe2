//! Canonical pretty-printer. Output re-parses to an equal AST.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "  ";

pub fn pretty_print(ast: &ContractAst) -> String {
    let mut out = String::new();
    writeln!(out, "stipula {} {{", ast.name).unwrap();
    if !ast.assets.is_empty() {
        writeln!(out, "{INDENT}assets {}", join(&ast.assets)).unwrap();
    }
    if !ast.fields.is_empty() {
        writeln!(out, "{INDENT}fields {}", join(&ast.fields)).unwrap();
    }
    if !ast.assets.is_empty() || !ast.fields.is_empty() {
        out.push('\n');
    }

    let agreement = &ast.agreement;
    writeln!(out, "{INDENT}agreement ({}) {{", join(&agreement.parties)).unwrap();
    for clause in &agreement.clauses {
        write!(out, "{INDENT}{INDENT}{} :", join(&clause.parties)).unwrap();
        if !clause.fields.is_empty() {
            write!(out, " {}", join(&clause.fields)).unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "{INDENT}}} => @{}", agreement.target).unwrap();

    for f in &ast.functions {
        out.push('\n');
        function(&mut out, f);
    }
    out.push_str("}\n");
    out
}

fn join(names: &[Name]) -> String {
    names
        .iter()
        .map(|n| n.text.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn function(out: &mut String, f: &FunctionDecl) {
    write!(out, "{INDENT}@{} {} : {}", f.guard, f.caller, f.name).unwrap();
    let bare = f.value_params.is_empty() && f.asset_params.is_empty();
    if !f.value_params.is_empty() || (bare && f.precondition.is_some()) {
        write!(out, "({})", join(&f.value_params)).unwrap();
    }
    if !f.asset_params.is_empty() {
        write!(out, "[{}]", join(&f.asset_params)).unwrap();
    }
    if let Some(pre) = &f.precondition {
        write!(out, " ({})", expr(pre)).unwrap();
    }
    out.push_str(" {\n");
    block(out, &f.body, 2);
    writeln!(out, "{INDENT}}} => @{}", f.target).unwrap();
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match &s.kind {
        StmtKind::AssetMove {
            amount: None,
            source,
            target,
        } => writeln!(out, "{pad}{source} -o {target}").unwrap(),
        StmtKind::AssetMove {
            amount: Some(amount),
            source,
            target,
        } => writeln!(out, "{pad}{} -o {source}, {target}", expr(amount)).unwrap(),
        StmtKind::ValueSend { value, party } => writeln!(out, "{pad}{} -> {party}", expr(value)).unwrap(),
        StmtKind::FieldUpdate { value, field } => writeln!(out, "{pad}{} -> {field}", expr(value)).unwrap(),
        StmtKind::EventSchedule {
            trigger,
            guard,
            handler,
            target,
            ..
        } => {
            let when = match trigger {
                TimeExpr::Relative(offset) => {
                    let now = Expr::new(ExprKind::Now);
                    let sum = ExprKind::Binary(BinOp::Add, Box::new(now), Box::new(offset.clone()));
                    expr(&Expr::new(sum))
                }
                TimeExpr::Absolute(at) => expr(at),
            };
            if handler.is_empty() {
                writeln!(out, "{pad}{when} >> @{guard} {{ }} => @{target}").unwrap();
            } else {
                writeln!(out, "{pad}{when} >> @{guard} {{").unwrap();
                block(out, handler, depth + 1);
                writeln!(out, "{pad}}} => @{target}").unwrap();
            }
        }
        StmtKind::IfElse { .. } => {
            out.push_str(&pad);
            if_chain(out, s, depth);
            out.push('\n');
        }
    }
}

fn if_chain(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    let StmtKind::IfElse {
        cond,
        then_branch,
        else_branch,
    } = &s.kind
    else {
        unreachable!("if_chain on a non-conditional")
    };
    writeln!(out, "if ({}) {{", expr(cond)).unwrap();
    block(out, then_branch, depth + 1);
    write!(out, "{pad}}}").unwrap();
    match else_branch.as_deref() {
        None => {}
        Some([nested]) if matches!(nested.kind, StmtKind::IfElse { .. }) => {
            out.push_str(" else ");
            if_chain(out, nested, depth);
        }
        Some(stmts) => {
            out.push_str(" else {\n");
            block(out, stmts, depth + 1);
            write!(out, "{pad}}}").unwrap();
        }
    }
}

/// Renders an expression with the minimum parentheses needed to re-parse
/// to the same tree under left-associative precedence climbing.
pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Number(q) => q.to_decimal_string(),
        ExprKind::Duration(q, unit) => format!("{} {}", q.to_decimal_string(), unit.keyword()),
        ExprKind::Str(s) => {
            let escaped = s.replace('\\', "\\\\").replace('"', "\\\"");
            format!("\"{escaped}\"")
        }
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Now => "now".to_string(),
        ExprKind::Name(n) => n.text.clone(),
        ExprKind::Uses { asset, party } => match party {
            Some(p) => format!("uses({asset}, {p})"),
            None => format!("uses({asset})"),
        },
        ExprKind::UseOnce { asset } => format!("use_once({asset})"),
        ExprKind::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            let left = operand(lhs, |p| p < prec);
            let right = operand(rhs, |p| p <= prec);
            format!("{left} {} {right}", op.symbol())
        }
    }
}

fn operand(e: &Expr, needs_parens: impl Fn(u8) -> bool) -> String {
    match &e.kind {
        ExprKind::Binary(op, _, _) if needs_parens(op.precedence()) => format!("({})", expr(e)),
        _ => expr(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;

    #[test]
    fn minimal_contract_layout() {
        let ast = parse_source("stipula E { agreement(A){A:} => @S }").unwrap();
        assert_eq!(
            pretty_print(&ast),
            "stipula E {\n  agreement (A) {\n    A :\n  } => @S\n}\n"
        );
    }

    #[test]
    fn fee_fraction_prints_with_a_point() {
        let path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../corpus/contracts/licence.stipula"
        );
        let ast = parse_source(&std::fs::read_to_string(path).unwrap()).unwrap();
        let text = pretty_print(&ast);
        assert!(text.contains("wallet * 0.1 -o wallet, Authority"), "{text}");
        assert_eq!(parse_source(&text).unwrap(), ast);
    }

    #[test]
    fn parentheses_follow_associativity() {
        let ast = parse_source(
            "stipula P { fields a agreement(A){A: a} => @S
             @S A : f(x, y) (a - (x - y) == (a - x) - y) { } => @S }",
        )
        .unwrap();
        let pre = ast.functions[0].precondition.as_ref().unwrap();
        assert_eq!(expr(pre), "a - (x - y) == a - x - y");
    }

    #[test]
    fn bare_precondition_keeps_empty_params() {
        let src = "stipula P { fields a agreement(A){A: a} => @S
             @S A : f (a == 1) { } => @S }";
        let ast = parse_source(src).unwrap();
        let text = pretty_print(&ast);
        assert!(text.contains("@S A : f() (a == 1) {"), "{text}");
        assert_eq!(parse_source(&text).unwrap(), ast);
    }
}
