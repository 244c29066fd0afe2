//! Parser, static checker, interpreter and bounded verifier for Stipula
//! legal contracts.

pub mod analysis;
pub mod check;
pub mod equivalence;
pub mod semantics;
pub mod syntax;
pub mod value;

pub use syntax::{parse_source, pretty_print, ContractAst, SyntaxError};
pub use value::{AssetValue, Rational, TokenId, UsageCode, Value};
