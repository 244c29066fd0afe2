//! Concrete syntax: tokens, the parser and the canonical printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use printer::pretty_print;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("{pos}: unexpected character {ch:?}")]
    Lex { pos: Position, ch: char },
    #[error("{pos}: expected {expected}, found {found}")]
    Parse {
        pos: Position,
        expected: String,
        found: String,
    },
    #[error("{pos}: duplicate name `{name}`")]
    DuplicateName { pos: Position, name: String },
}

impl SyntaxError {
    pub fn position(&self) -> Position {
        match self {
            SyntaxError::Lex { pos, .. }
            | SyntaxError::Parse { pos, .. }
            | SyntaxError::DuplicateName { pos, .. } => *pos,
        }
    }
}

/// Tokenizes and parses a whole source file.
pub fn parse_source(source: &str) -> Result<ContractAst, SyntaxError> {
    parse(&tokenize(source)?)
}
