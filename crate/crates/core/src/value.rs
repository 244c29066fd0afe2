//! Runtime values: exact rational numbers, strings, usage codes and assets.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational number. Every amount and every number in a contract is one
/// of these; there is no floating point anywhere in the interpreter.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// The value as an `i64`, if it is an integer in range.
    pub fn to_i64(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn add(&self, other: &Rational) -> Rational {
        Rational(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Rational) -> Rational {
        Rational(&self.0 - &other.0)
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        Rational(&self.0 * &other.0)
    }

    /// Parses a decimal literal such as `120`, `0.1` or `0,1`.
    pub fn parse_decimal(text: &str) -> Option<Rational> {
        let text = text.trim();
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int_part, frac_part) = match digits.find(['.', ',']) {
            Some(pos) => (&digits[..pos], &digits[pos + 1..]),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let mut numer = BigInt::from(0);
        for c in int_part.chars().chain(frac_part.chars()) {
            numer = numer * 10 + BigInt::from(c.to_digit(10)?);
        }
        let denom = num::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(numer, denom);
        Some(Rational(if negative { -value } else { value }))
    }

    /// Decimal rendering when the expansion terminates, `p/q` otherwise.
    pub fn to_decimal_string(&self) -> String {
        let value = &self.0;
        if value.is_integer() {
            return value.to_integer().to_string();
        }
        let mut denom = value.denom().clone();
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        let mut twos = 0usize;
        let mut fives = 0usize;
        while (&denom % &two).is_zero() {
            denom /= &two;
            twos += 1;
        }
        while (&denom % &five).is_zero() {
            denom /= &five;
            fives += 1;
        }
        if !denom.is_one() {
            return format!("{}/{}", value.numer(), value.denom());
        }
        let scale = twos.max(fives);
        let scaled = value * BigRational::from_integer(num::pow(BigInt::from(10), scale));
        let digits = scaled.to_integer().abs().to_string();
        let digits = format!("{:0>width$}", digits, width = scale + 1);
        let (int_part, frac_part) = digits.split_at(digits.len() - scale);
        let sign = if value.is_negative() { "-" } else { "" };
        format!("{sign}{int_part}.{frac_part}")
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string())
    }
}

impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((p, q)) = s.split_once('/') {
            let numer: BigInt = p.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
            let denom: BigInt = q.trim().parse().map_err(|_| format!("bad rational `{s}`"))?;
            if denom.is_zero() {
                return Err(format!("zero denominator in `{s}`"));
            }
            return Ok(Rational(BigRational::new(numer, denom)));
        }
        Rational::parse_decimal(s).ok_or_else(|| format!("bad number `{s}`"))
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_decimal_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        match raw {
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) => n.to_string().parse().map_err(serde::de::Error::custom),
            other => Err(serde::de::Error::custom(format!(
                "expected a number, got {other}"
            ))),
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

/// Identifier of a non-fungible token supplied by a party.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub String);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Opaque usage code generated by `uses`/`use_once`. It mentions the token
/// and the party it is bound to, never the asset that holds the token.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct UsageCode {
    pub serial: u64,
    pub token: TokenId,
    pub holder: Option<String>,
    pub once: bool,
}

impl fmt::Display for UsageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.once { "once" } else { "code" };
        write!(f, "{kind}-{}:{}", self.serial, self.token)?;
        if let Some(holder) = &self.holder {
            write!(f, "@{holder}")?;
        }
        Ok(())
    }
}

/// A non-asset value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Num(Rational),
    Str(String),
    Bool(bool),
    Code(UsageCode),
}

impl Value {
    pub fn num(n: i64) -> Value {
        Value::Num(Rational::from_integer(n))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::Bool(_) => "boolean",
            Value::Code(_) => "usage code",
        }
    }

    /// Canonical JSON form: `{"num": "120"}`, `{"str": "..."}`, ...
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Value::Num(q) => json!({ "num": q.to_decimal_string() }),
            Value::Str(s) => json!({ "str": s }),
            Value::Bool(b) => json!({ "bool": b }),
            Value::Code(c) => json!({ "code": c.to_string() }),
        }
    }

    /// Accepts the canonical tagged form as well as bare JSON numbers,
    /// strings and booleans.
    pub fn from_json(raw: &serde_json::Value) -> Result<Value, String> {
        use serde_json::Value as J;
        match raw {
            J::Number(n) => n.to_string().parse().map(Value::Num),
            J::String(s) => Ok(Value::Str(s.clone())),
            J::Bool(b) => Ok(Value::Bool(*b)),
            J::Object(map) if map.len() == 1 => {
                let (tag, inner) = map.iter().next().expect("one entry");
                match (tag.as_str(), inner) {
                    ("num", J::String(s)) => s.parse().map(Value::Num),
                    ("num", J::Number(n)) => n.to_string().parse().map(Value::Num),
                    ("str", J::String(s)) => Ok(Value::Str(s.clone())),
                    ("bool", J::Bool(b)) => Ok(Value::Bool(*b)),
                    _ => Err(format!("unrecognised value {raw}")),
                }
            }
            _ => Err(format!("unrecognised value {raw}")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(q) => write!(f, "{q}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Code(c) => write!(f, "{c}"),
        }
    }
}

/// Content of an asset: a non-negative fungible amount or one token.
/// An empty asset is `Fungible(0)`, whatever it held before.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum AssetValue {
    Fungible(Rational),
    NonFungible(TokenId),
}

impl AssetValue {
    pub fn empty() -> Self {
        AssetValue::Fungible(Rational::zero())
    }

    pub fn amount(n: i64) -> Self {
        AssetValue::Fungible(Rational::from_integer(n))
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, AssetValue::Fungible(q) if q.is_zero())
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            AssetValue::Fungible(q) => json!({ "amount": q.to_decimal_string() }),
            AssetValue::NonFungible(t) => json!({ "token": t.0 }),
        }
    }

    /// Accepts `{"amount": "50"}`, `{"token": "bike"}` or a bare number.
    pub fn from_json(raw: &serde_json::Value) -> Result<AssetValue, String> {
        use serde_json::Value as J;
        match raw {
            J::Number(n) => n.to_string().parse().map(AssetValue::Fungible),
            J::String(s) => s.parse().map(AssetValue::Fungible),
            J::Object(map) if map.len() == 1 => match map.iter().next().expect("one entry") {
                (tag, J::String(s)) if tag == "amount" => s.parse().map(AssetValue::Fungible),
                (tag, J::Number(n)) if tag == "amount" => n.to_string().parse().map(AssetValue::Fungible),
                (tag, J::String(s)) if tag == "token" => Ok(AssetValue::NonFungible(TokenId(s.clone()))),
                _ => Err(format!("unrecognised asset {raw}")),
            },
            _ => Err(format!("unrecognised asset {raw}")),
        }
    }
}

impl fmt::Display for AssetValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssetValue::Fungible(q) => write!(f, "{q}"),
            AssetValue::NonFungible(t) => write!(f, "token {t}"),
        }
    }
}
