use std::fmt;

use serde_json::json;

use crate::syntax::{Position, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Stable machine-readable diagnostic codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    UndeclaredName,
    UnknownParty,
    KindMismatch,
    AssetParamInHandler,
    DeadFunction,
    UnsetField,
    UnreachableState,
    UnconsumedAsset,
    AssetMovedTwice,
    TokenOverwriteHazard,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::UndeclaredName => "UndeclaredName",
            Code::UnknownParty => "UnknownParty",
            Code::KindMismatch => "KindMismatch",
            Code::AssetParamInHandler => "AssetParamInHandler",
            Code::DeadFunction => "DeadFunction",
            Code::UnsetField => "UnsetField",
            Code::UnreachableState => "UnreachableState",
            Code::UnconsumedAsset => "UnconsumedAsset",
            Code::AssetMovedTwice => "AssetMovedTwice",
            Code::TokenOverwriteHazard => "TokenOverwriteHazard",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(code: Code, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn warning(code: Code, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Warning,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn position(&self) -> Position {
        self.span.position()
    }

    /// `file:line:col: severity: message [code]`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}: {} [{}]", self.position(), self, self.code)
    }

    pub fn to_json(&self, file: &str) -> serde_json::Value {
        json!({
            "file": file,
            "line": self.span.line,
            "col": self.span.col,
            "severity": self.severity.to_string(),
            "code": self.code.as_str(),
            "message": self.message,
        })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.severity, self.message)
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}
