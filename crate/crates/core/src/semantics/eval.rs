//! Expression evaluation.

use super::config::Configuration;
use super::contract::Contract;
use crate::syntax::{BinOp, Expr, ExprKind};
use crate::value::{AssetValue, Rational, UsageCode, Value};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("field `{0}` has no value")]
    UnsetField(String),
    #[error("`{0}` is not bound here")]
    Unbound(String),
    #[error("expected a {expected}, found {found}")]
    KindMismatch { expected: &'static str, found: String },
    #[error("`{0}` holds a token, not an amount")]
    TokenAmount(String),
    #[error("`{0}` holds no token")]
    NoToken(String),
    #[error("time {0} is not a whole number of ticks")]
    NonIntegerTime(Rational),
    #[error("amount {0} is negative")]
    NegativeAmount(Rational),
}

/// Names visible to an expression besides fields and contract assets.
#[derive(Default)]
pub struct Scope<'a> {
    pub params: &'a [(String, Value)],
    pub asset_params: &'a [(String, AssetValue)],
    /// Names captured by an event at scheduling time.
    pub captured: Option<(&'a [String], &'a [Option<Value>])>,
}

pub struct Evaluator<'a> {
    pub contract: &'a Contract,
    pub config: &'a Configuration,
    pub scope: &'a Scope<'a>,
    /// Usage-code counter, advanced by `uses`/`use_once`.
    pub codes: &'a mut u64,
}

impl Evaluator<'_> {
    pub fn eval(&mut self, expr: &Expr) -> Result<Value, EvalError> {
        match &expr.kind {
            ExprKind::Number(q) => Ok(Value::Num(q.clone())),
            ExprKind::Duration(q, unit) => Ok(Value::Num(q.mul(&Rational::from_integer(unit.ticks())))),
            ExprKind::Str(s) => Ok(Value::Str(s.clone())),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Now => Ok(Value::Num(Rational::from_integer(self.config.clock))),
            ExprKind::Name(name) => self.lookup(name.as_str()),
            ExprKind::Uses { asset, party } => {
                let token = self.token(asset.as_str())?;
                Ok(self.issue(token, party.as_ref().map(|p| p.text.clone()), false))
            }
            ExprKind::UseOnce { asset } => {
                let token = self.token(asset.as_str())?;
                Ok(self.issue(token, None, true))
            }
            ExprKind::Binary(op, lhs, rhs) => self.binary(*op, lhs, rhs),
        }
    }

    pub fn eval_number(&mut self, expr: &Expr) -> Result<Rational, EvalError> {
        match self.eval(expr)? {
            Value::Num(q) => Ok(q),
            other => Err(mismatch("number", &other)),
        }
    }

    pub fn eval_bool(&mut self, expr: &Expr) -> Result<bool, EvalError> {
        match self.eval(expr)? {
            Value::Bool(b) => Ok(b),
            other => Err(mismatch("boolean", &other)),
        }
    }

    fn issue(&mut self, token: crate::value::TokenId, holder: Option<String>, once: bool) -> Value {
        let serial = *self.codes;
        *self.codes += 1;
        Value::Code(UsageCode {
            serial,
            token,
            holder,
            once,
        })
    }

    fn asset(&self, name: &str) -> Option<&AssetValue> {
        if let Some((_, a)) = self.scope.asset_params.iter().find(|(n, _)| n == name) {
            return Some(a);
        }
        self.contract.asset_index(name).map(|i| &self.config.assets[i])
    }

    fn token(&self, name: &str) -> Result<crate::value::TokenId, EvalError> {
        match self.asset(name) {
            Some(AssetValue::NonFungible(t)) => Ok(t.clone()),
            Some(_) => Err(EvalError::NoToken(name.to_string())),
            None => Err(EvalError::Unbound(name.to_string())),
        }
    }

    pub fn lookup(&self, name: &str) -> Result<Value, EvalError> {
        if let Some((names, values)) = self.scope.captured {
            if let Some(i) = names.iter().position(|n| n == name) {
                if let Some(v) = &values[i] {
                    return Ok(v.clone());
                }
            }
        }
        if let Some((_, v)) = self.scope.params.iter().find(|(n, _)| n == name) {
            return Ok(v.clone());
        }
        if let Some(i) = self.contract.field_index(name) {
            return self.config.fields[i]
                .clone()
                .ok_or_else(|| EvalError::UnsetField(name.to_string()));
        }
        match self.asset(name) {
            Some(AssetValue::Fungible(q)) => Ok(Value::Num(q.clone())),
            Some(AssetValue::NonFungible(_)) => Err(EvalError::TokenAmount(name.to_string())),
            None => Err(EvalError::Unbound(name.to_string())),
        }
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr) -> Result<Value, EvalError> {
        match op {
            BinOp::And => Ok(Value::Bool(self.eval_bool(lhs)? && self.eval_bool(rhs)?)),
            BinOp::Or => Ok(Value::Bool(self.eval_bool(lhs)? || self.eval_bool(rhs)?)),
            BinOp::Eq => Ok(Value::Bool(self.eval(lhs)? == self.eval(rhs)?)),
            BinOp::Ne => Ok(Value::Bool(self.eval(lhs)? != self.eval(rhs)?)),
            _ => {
                let a = self.eval_number(lhs)?;
                let b = self.eval_number(rhs)?;
                Ok(match op {
                    BinOp::Add => Value::Num(a.add(&b)),
                    BinOp::Sub => Value::Num(a.sub(&b)),
                    BinOp::Mul => Value::Num(a.mul(&b)),
                    BinOp::Lt => Value::Bool(a < b),
                    BinOp::Le => Value::Bool(a <= b),
                    BinOp::Gt => Value::Bool(a > b),
                    BinOp::Ge => Value::Bool(a >= b),
                    _ => unreachable!("handled above"),
                })
            }
        }
    }
}

fn mismatch(expected: &'static str, found: &Value) -> EvalError {
    EvalError::KindMismatch {
        expected,
        found: format!("{} {found}", found.kind_name()),
    }
}
