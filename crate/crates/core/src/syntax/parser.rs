//! Recursive-descent parser from tokens to [`ContractAst`].

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::lexer::{Keyword, Token, TokenKind};
use super::SyntaxError;

/// Parses a token sequence produced by [`super::tokenize`].
pub fn parse(tokens: &[Token]) -> Result<ContractAst, SyntaxError> {
    let mut parser = Parser {
        tokens,
        pos: 0,
        next_site: 0,
        parties: Vec::new(),
        fields: Vec::new(),
    };
    let ast = parser.contract()?;
    validate_names(&ast)?;
    Ok(ast)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    next_site: SiteId,
    parties: Vec<String>,
    fields: Vec<String>,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        match self.tokens.get(self.pos) {
            Some(t) => t.span,
            None => match self.tokens.last() {
                Some(t) => Span {
                    start: t.span.end,
                    end: t.span.end,
                    line: t.span.line,
                    col: t.span.col + (t.span.end - t.span.start) as u32,
                },
                None => Span {
                    line: 1,
                    col: 1,
                    ..Span::default()
                },
            },
        }
    }

    /// Span of the most recently consumed token.
    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn error<T>(&self, expected: &str) -> Result<T, SyntaxError> {
        let found = match self.peek() {
            Some(kind) => kind.to_string(),
            None => "end of input".to_string(),
        };
        Err(SyntaxError::Parse {
            pos: self.span().position(),
            expected: expected.to_string(),
            found,
        })
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<Span, SyntaxError> {
        if self.eat(kind) {
            Ok(self.prev_span())
        } else {
            self.error(&kind.to_string())
        }
    }

    fn at_keyword(&self, kw: Keyword) -> bool {
        self.peek() == Some(&TokenKind::Keyword(kw))
    }

    fn ident(&mut self, what: &str) -> Result<Name, SyntaxError> {
        match self.peek() {
            Some(TokenKind::Ident(text)) => {
                self.pos += 1;
                Ok(Name {
                    text: text.clone(),
                    span: self.prev_span(),
                })
            }
            _ => self.error(what),
        }
    }

    fn state(&mut self) -> Result<Name, SyntaxError> {
        match self.peek() {
            Some(TokenKind::State(text)) => {
                self.pos += 1;
                Ok(Name {
                    text: text.clone(),
                    span: self.prev_span(),
                })
            }
            _ => self.error("state `@Name`"),
        }
    }

    /// Comma-separated identifiers; stops before anything else.
    fn ident_list(&mut self, what: &str) -> Result<Vec<Name>, SyntaxError> {
        let mut out = vec![self.ident(what)?];
        while self.eat(&TokenKind::Comma) {
            out.push(self.ident(what)?);
        }
        Ok(out)
    }

    fn contract(&mut self) -> Result<ContractAst, SyntaxError> {
        let start = self.span();
        self.expect(&TokenKind::Keyword(Keyword::Stipula))?;
        let name = self.ident("contract name")?;
        self.expect(&TokenKind::LBrace)?;
        let mut assets = Vec::new();
        let mut fields = Vec::new();
        loop {
            if self.at_keyword(Keyword::Asset) {
                self.pos += 1;
                assets.extend(self.ident_list("asset name")?);
            } else if self.at_keyword(Keyword::Field) {
                self.pos += 1;
                fields.extend(self.ident_list("field name")?);
            } else {
                break;
            }
        }
        self.fields = fields.iter().map(|f| f.text.clone()).collect();
        let agreement = self.agreement()?;
        let mut functions = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            if self.peek().is_none() {
                return self.error("`}`");
            }
            functions.push(self.function()?);
        }
        self.expect(&TokenKind::RBrace)?;
        if self.peek().is_some() {
            return self.error("end of input");
        }
        Ok(ContractAst {
            name,
            assets,
            fields,
            agreement,
            functions,
            span: start.to(self.prev_span()),
        })
    }

    fn agreement(&mut self) -> Result<AgreementDecl, SyntaxError> {
        let start = self.span();
        self.expect(&TokenKind::Keyword(Keyword::Agreement))?;
        self.expect(&TokenKind::LParen)?;
        let parties = self.ident_list("party name")?;
        self.expect(&TokenKind::RParen)?;
        self.parties = parties.iter().map(|p| p.text.clone()).collect();
        self.expect(&TokenKind::LBrace)?;
        let mut clauses = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            clauses.push(self.clause()?);
        }
        self.expect(&TokenKind::RBrace)?;
        self.expect(&TokenKind::FatArrow)?;
        let target = self.state()?;
        Ok(AgreementDecl {
            parties,
            clauses,
            target,
            span: start.to(self.prev_span()),
        })
    }

    fn clause(&mut self) -> Result<Clause, SyntaxError> {
        let start = self.span();
        let mut parties = Vec::new();
        loop {
            let party = self.ident("party name")?;
            if !self.parties.contains(&party.text) {
                return Err(SyntaxError::Parse {
                    pos: party.span.position(),
                    expected: "a party listed in the agreement".into(),
                    found: format!("`{}`", party.text),
                });
            }
            parties.push(party);
            if !self.eat(&TokenKind::Comma) {
                break;
            }
            // A trailing comma before the colon is tolerated.
            if self.at(&TokenKind::Colon) {
                break;
            }
        }
        self.expect(&TokenKind::Colon)?;
        let mut fields = Vec::new();
        if let Some(TokenKind::Ident(text)) = self.peek() {
            if !self.parties.contains(text) {
                fields = self.ident_list("field name")?;
            }
        }
        Ok(Clause {
            parties,
            fields,
            span: start.to(self.prev_span()),
        })
    }

    /// True when the parenthesised group at the cursor holds only
    /// identifiers and commas, i.e. a parameter list.
    fn paren_is_param_list(&self) -> bool {
        let mut n = 1;
        let mut expect_ident = true;
        loop {
            match self.peek_at(n) {
                Some(TokenKind::RParen) => return true,
                Some(TokenKind::Ident(_)) if expect_ident => expect_ident = false,
                Some(TokenKind::Comma) if !expect_ident => expect_ident = true,
                _ => return false,
            }
            n += 1;
        }
    }

    fn params(&mut self, close: &TokenKind) -> Result<Vec<Name>, SyntaxError> {
        self.pos += 1;
        let mut out = Vec::new();
        if !self.at(close) {
            out = self.ident_list("parameter name")?;
        }
        self.expect(close)?;
        Ok(out)
    }

    fn function(&mut self) -> Result<FunctionDecl, SyntaxError> {
        let start = self.span();
        let guard = self.state()?;
        let caller = self.ident("caller party")?;
        self.expect(&TokenKind::Colon)?;
        let name = self.ident("function name")?;
        let mut value_params = Vec::new();
        let mut asset_params = Vec::new();
        if self.at(&TokenKind::LParen) && self.paren_is_param_list() {
            value_params = self.params(&TokenKind::RParen)?;
        }
        if self.at(&TokenKind::LBracket) {
            asset_params = self.params(&TokenKind::RBracket)?;
        }
        let mut precondition = None;
        if self.eat(&TokenKind::LParen) {
            precondition = Some(self.expr()?);
            self.expect(&TokenKind::RParen)?;
        }
        let body = self.block(true)?;
        self.expect(&TokenKind::FatArrow)?;
        let target = self.state()?;
        Ok(FunctionDecl {
            guard,
            caller,
            name,
            value_params,
            asset_params,
            precondition,
            body,
            target,
            span: start.to(self.prev_span()),
        })
    }

    fn block(&mut self, allow_events: bool) -> Result<Vec<Stmt>, SyntaxError> {
        self.expect(&TokenKind::LBrace)?;
        let mut stmts = Vec::new();
        loop {
            while self.eat(&TokenKind::Semi) {}
            if self.eat(&TokenKind::RBrace) {
                return Ok(stmts);
            }
            if self.peek().is_none() {
                return self.error("`}`");
            }
            stmts.push(self.stmt(allow_events)?);
        }
    }

    fn stmt(&mut self, allow_events: bool) -> Result<Stmt, SyntaxError> {
        let start = self.span();
        if self.at_keyword(Keyword::If) {
            return self.if_else(allow_events);
        }
        let lhs = self.expr()?;
        let kind = match self.peek() {
            Some(TokenKind::Schedule) => {
                if !allow_events {
                    return Err(SyntaxError::Parse {
                        pos: start.position(),
                        expected: "a statement (events cannot be nested in event handlers)".into(),
                        found: "`>>`".into(),
                    });
                }
                self.pos += 1;
                let trigger = time_expr(lhs)?;
                let guard = self.state()?;
                let handler = self.block(false)?;
                // Tolerates a missing `=>` between handler and target.
                self.eat(&TokenKind::FatArrow);
                let target = self.state()?;
                let site = self.next_site;
                self.next_site += 1;
                StmtKind::EventSchedule {
                    site,
                    trigger,
                    guard,
                    handler,
                    target,
                }
            }
            Some(TokenKind::Transfer) => {
                self.pos += 1;
                let first = self.ident("asset or party")?;
                if self.eat(&TokenKind::Comma) {
                    let target = self.ident("asset or party")?;
                    StmtKind::AssetMove {
                        amount: Some(lhs),
                        source: first,
                        target,
                    }
                } else {
                    let source = match lhs.kind {
                        ExprKind::Name(name) => name,
                        _ => {
                            return Err(SyntaxError::Parse {
                                pos: lhs.span.position(),
                                expected: "an asset name before `-o` (or `E -o asset, target`)".into(),
                                found: "an expression".into(),
                            })
                        }
                    };
                    StmtKind::AssetMove {
                        amount: None,
                        source,
                        target: first,
                    }
                }
            }
            Some(TokenKind::Arrow) => {
                self.pos += 1;
                let target = self.ident("party or field")?;
                if self.fields.contains(&target.text) {
                    StmtKind::FieldUpdate {
                        value: lhs,
                        field: target,
                    }
                } else {
                    StmtKind::ValueSend {
                        value: lhs,
                        party: target,
                    }
                }
            }
            _ => return self.error("`-o`, `->` or `>>`"),
        };
        Ok(Stmt {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn if_else(&mut self, allow_events: bool) -> Result<Stmt, SyntaxError> {
        let start = self.span();
        self.pos += 1;
        self.expect(&TokenKind::LParen)?;
        let cond = self.expr()?;
        self.expect(&TokenKind::RParen)?;
        let then_branch = self.block(allow_events)?;
        let mut else_branch = None;
        if self.at_keyword(Keyword::Else) {
            self.pos += 1;
            if self.at_keyword(Keyword::If) {
                else_branch = Some(vec![self.if_else(allow_events)?]);
            } else {
                else_branch = Some(self.block(allow_events)?);
            }
        }
        Ok(Stmt {
            kind: StmtKind::IfElse {
                cond,
                then_branch,
                else_branch,
            },
            span: start.to(self.prev_span()),
        })
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek()? {
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::NotEq => BinOp::Ne,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::AndAnd => BinOp::And,
            TokenKind::OrOr => BinOp::Or,
            _ => return None,
        })
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.expr_above(0)
    }

    /// Precedence climbing; all operators are left-associative.
    fn expr_above(&mut self, min: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.primary()?;
        while let Some(op) = self.binop() {
            if op.precedence() <= min {
                break;
            }
            self.pos += 1;
            let rhs = self.expr_above(op.precedence())?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.span();
        let kind = match self.peek() {
            Some(TokenKind::Number(q)) => {
                self.pos += 1;
                let unit = match self.peek() {
                    Some(TokenKind::Ident(word)) => DurationUnit::from_word(word),
                    _ => None,
                };
                match unit {
                    Some(unit) => {
                        self.pos += 1;
                        ExprKind::Duration(q.clone(), unit)
                    }
                    None => ExprKind::Number(q.clone()),
                }
            }
            Some(TokenKind::Str(s)) => {
                self.pos += 1;
                ExprKind::Str(s.clone())
            }
            Some(TokenKind::Keyword(Keyword::True)) => {
                self.pos += 1;
                ExprKind::Bool(true)
            }
            Some(TokenKind::Keyword(Keyword::False)) => {
                self.pos += 1;
                ExprKind::Bool(false)
            }
            Some(TokenKind::Keyword(Keyword::Now)) => {
                self.pos += 1;
                ExprKind::Now
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                return Ok(Expr {
                    kind: inner.kind,
                    span: start.to(self.prev_span()),
                });
            }
            Some(TokenKind::Ident(word))
                if (word == "uses" || word == "use_once") && self.peek_at(1) == Some(&TokenKind::LParen) =>
            {
                let once = word == "use_once";
                self.pos += 2;
                let asset = self.ident("asset name")?;
                let mut party = None;
                if !once && self.eat(&TokenKind::Comma) {
                    party = Some(self.ident("party name")?);
                }
                self.expect(&TokenKind::RParen)?;
                if once {
                    ExprKind::UseOnce { asset }
                } else {
                    ExprKind::Uses { asset, party }
                }
            }
            Some(TokenKind::Ident(_)) => ExprKind::Name(self.ident("name")?),
            _ => return self.error("an expression"),
        };
        Ok(Expr {
            kind,
            span: start.to(self.prev_span()),
        })
    }
}

/// Classifies an event trigger. `now + d1 + d2` becomes `Relative(d1 + d2)`;
/// a trigger without `now` is absolute.
fn time_expr(expr: Expr) -> Result<TimeExpr, SyntaxError> {
    fn mentions_now(e: &Expr) -> bool {
        let mut found = false;
        for_each_expr(e, &mut |e| found |= matches!(e.kind, ExprKind::Now));
        found
    }

    /// Removes `now +` from the bottom of the left spine.
    fn strip(expr: Expr) -> Option<Expr> {
        match expr.kind {
            ExprKind::Now => Some(Expr {
                kind: ExprKind::Number(crate::value::Rational::zero()),
                span: expr.span,
            }),
            ExprKind::Binary(BinOp::Add, lhs, rhs) if matches!(lhs.kind, ExprKind::Now) => {
                (!mentions_now(&rhs)).then_some(*rhs)
            }
            ExprKind::Binary(op @ (BinOp::Add | BinOp::Sub), lhs, rhs) => {
                if mentions_now(&rhs) {
                    return None;
                }
                let lhs = strip(*lhs)?;
                Some(Expr {
                    kind: ExprKind::Binary(op, Box::new(lhs), rhs),
                    span: expr.span,
                })
            }
            _ => None,
        }
    }

    if !mentions_now(&expr) {
        return Ok(TimeExpr::Absolute(expr));
    }
    let pos = expr.span.position();
    strip(expr)
        .map(TimeExpr::Relative)
        .ok_or_else(|| SyntaxError::Parse {
            pos,
            expected: "a trigger of the form `now + offset` or an absolute time".into(),
            found: "another use of `now`".into(),
        })
}

fn duplicate(name: &Name) -> SyntaxError {
    SyntaxError::DuplicateName {
        pos: name.span.position(),
        name: name.text.clone(),
    }
}

fn validate_names(ast: &ContractAst) -> Result<(), SyntaxError> {
    let mut contract_names = HashSet::new();
    for name in ast.assets.iter().chain(&ast.fields).chain(&ast.agreement.parties) {
        if !contract_names.insert(name.text.as_str()) {
            return Err(duplicate(name));
        }
    }

    let mut agreed = HashSet::new();
    for clause in &ast.agreement.clauses {
        for field in &clause.fields {
            if !agreed.insert(field.text.as_str()) {
                return Err(duplicate(field));
            }
        }
    }

    let mut signatures: HashMap<(&str, &str, &str), ()> = HashMap::new();
    for f in &ast.functions {
        let key = (f.guard.as_str(), f.caller.as_str(), f.name.as_str());
        if signatures.insert(key, ()).is_some() {
            return Err(duplicate(&f.name));
        }
        let mut params = HashSet::new();
        for p in f.value_params.iter().chain(&f.asset_params) {
            if contract_names.contains(p.as_str()) || !params.insert(p.as_str()) {
                return Err(duplicate(p));
            }
        }
    }
    Ok(())
}
