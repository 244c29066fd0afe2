//! Tokenizer for `.stipula` sources.
//!
//! The typeset operators of the calculus have ASCII spellings: `-o` or `--o`
//! for asset transfer, `->` for value send, `>>` for event scheduling and
//! `=>` for the state change. The Unicode glyphs are accepted as well.

use std::fmt;

use super::ast::Span;
use super::SyntaxError;
use crate::value::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// `@Name`, stored without the sigil.
    State(String),
    Number(Rational),
    Str(String),
    Keyword(Keyword),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Plus,
    Minus,
    Star,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    /// `-o`, `--o`, `⊸`
    Transfer,
    /// `->`, `→`
    Arrow,
    /// `>>`, `≫`
    Schedule,
    /// `=>`, `⇒`
    FatArrow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keyword {
    Stipula,
    Asset,
    Field,
    Agreement,
    If,
    Else,
    Now,
    True,
    False,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Keyword> {
        Some(match word {
            "stipula" => Keyword::Stipula,
            "asset" | "assets" => Keyword::Asset,
            "field" | "fields" => Keyword::Field,
            "agreement" => Keyword::Agreement,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "now" => Keyword::Now,
            "true" => Keyword::True,
            "false" => Keyword::False,
            _ => return None,
        })
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::State(s) => write!(f, "state `@{s}`"),
            TokenKind::Number(q) => write!(f, "number `{q}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Keyword(k) => write!(f, "keyword `{}`", format!("{k:?}").to_lowercase()),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::LBracket => f.write_str("`[`"),
            TokenKind::RBracket => f.write_str("`]`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Semi => f.write_str("`;`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::EqEq => f.write_str("`==`"),
            TokenKind::NotEq => f.write_str("`!=`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Le => f.write_str("`<=`"),
            TokenKind::Gt => f.write_str("`>`"),
            TokenKind::Ge => f.write_str("`>=`"),
            TokenKind::AndAnd => f.write_str("`&&`"),
            TokenKind::OrOr => f.write_str("`||`"),
            TokenKind::Transfer => f.write_str("`-o`"),
            TokenKind::Arrow => f.write_str("`->`"),
            TokenKind::Schedule => f.write_str("`>>`"),
            TokenKind::FatArrow => f.write_str("`=>`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span {
            start: self.pos,
            end: self.pos,
            line: self.line,
            col: self.col,
        }
    }

    fn error(&self, ch: char) -> SyntaxError {
        SyntaxError::Lex {
            pos: self.here().position(),
            ch,
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    /// `-o` or `--o` not followed by an identifier character.
    fn transfer_len(&self) -> Option<usize> {
        let rest = &self.src[self.pos..];
        for op in ["--o", "-o"] {
            if let Some(after) = rest.strip_prefix(op) {
                if !after.chars().next().is_some_and(is_ident_char) {
                    return Some(op.len());
                }
            }
        }
        None
    }

    fn number(&mut self) -> Result<TokenKind, SyntaxError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        // `0,1` is a decimal only when the separator is glued to digits on
        // both sides; `f(1, 2)` keeps its comma.
        if matches!(self.peek(), Some('.') | Some(',')) && self.peek_at(1).is_some_and(|c| c.is_ascii_digit())
        {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = &self.src[start..self.pos];
        Rational::parse_decimal(text)
            .map(TokenKind::Number)
            .ok_or_else(|| self.error(text.chars().next().unwrap_or('?')))
    }

    fn string(&mut self) -> Result<TokenKind, SyntaxError> {
        let open = self.here();
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(SyntaxError::Parse {
                        pos: open.position(),
                        expected: "closing `\"`".into(),
                        found: "end of input".into(),
                    })
                }
                Some('"') => return Ok(TokenKind::Str(out)),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => out.push(c),
                    Some(c) => return Err(self.error(c)),
                    None => return Err(self.error('\\')),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, SyntaxError> {
        self.skip_trivia();
        let start = self.here();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let kind = if c.is_ascii_digit() {
            self.number()?
        } else if is_ident_start(c) {
            let begin = self.pos;
            while self.peek().is_some_and(is_ident_char) {
                self.bump();
            }
            let word = &self.src[begin..self.pos];
            match Keyword::from_word(word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word.to_string()),
            }
        } else if c == '"' {
            self.string()?
        } else if c == '@' {
            self.bump();
            let begin = self.pos;
            if !self.peek().is_some_and(is_ident_start) {
                return Err(self.error(self.peek().unwrap_or('@')));
            }
            while self.peek().is_some_and(is_ident_char) {
                self.bump();
            }
            TokenKind::State(self.src[begin..self.pos].to_string())
        } else if let Some(len) = self.transfer_len() {
            for _ in 0..len {
                self.bump();
            }
            TokenKind::Transfer
        } else {
            let two: String = self.src[self.pos..].chars().take(2).collect();
            let double = match two.as_str() {
                "->" => Some(TokenKind::Arrow),
                ">>" => Some(TokenKind::Schedule),
                "=>" => Some(TokenKind::FatArrow),
                "==" => Some(TokenKind::EqEq),
                "!=" => Some(TokenKind::NotEq),
                "<=" => Some(TokenKind::Le),
                ">=" => Some(TokenKind::Ge),
                "&&" => Some(TokenKind::AndAnd),
                "||" => Some(TokenKind::OrOr),
                _ => None,
            };
            if let Some(kind) = double {
                self.bump();
                self.bump();
                kind
            } else {
                let single = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ',' => TokenKind::Comma,
                    ':' => TokenKind::Colon,
                    ';' => TokenKind::Semi,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    '<' => TokenKind::Lt,
                    '>' => TokenKind::Gt,
                    '⊸' => TokenKind::Transfer,
                    '→' => TokenKind::Arrow,
                    '≫' => TokenKind::Schedule,
                    '⇒' => TokenKind::FatArrow,
                    other => return Err(self.error(other)),
                };
                self.bump();
                single
            }
        };
        let span = Span {
            end: self.pos,
            ..start
        };
        Ok(Some(Token { kind, span }))
    }
}

/// Splits `source` into tokens, dropping whitespace and `//` comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lexer = Lexer {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    while let Some(token) = lexer.next_token()? {
        tokens.push(token);
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn transfer_operator() {
        assert_eq!(
            kinds("h -o wallet"),
            vec![
                TokenKind::Ident("h".into()),
                TokenKind::Transfer,
                TokenKind::Ident("wallet".into())
            ]
        );
        assert_eq!(kinds("a1  --o Authority"), kinds("a1 -o Authority"));
        assert_eq!(kinds("h ⊸ wallet"), kinds("h -o wallet"));
    }

    #[test]
    fn minus_is_not_transfer_before_identifier() {
        assert_eq!(
            kinds("a -offset"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Minus,
                TokenKind::Ident("offset".into())
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  // only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn comma_decimal() {
        assert_eq!(
            kinds("wallet*0,1"),
            vec![
                TokenKind::Ident("wallet".into()),
                TokenKind::Star,
                TokenKind::Number(Rational::new(1, 10))
            ]
        );
        assert_eq!(kinds("wallet*0,1"), kinds("wallet*0.1"));
        assert_eq!(
            kinds("f(1, 2)"),
            vec![
                TokenKind::Ident("f".into()),
                TokenKind::LParen,
                TokenKind::Number(Rational::from_integer(1)),
                TokenKind::Comma,
                TokenKind::Number(Rational::from_integer(2)),
                TokenKind::RParen
            ]
        );
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let tokens = tokenize("stipula X {\n  assets w\n}").unwrap();
        let w = &tokens[4];
        assert_eq!(w.kind, TokenKind::Ident("w".into()));
        assert_eq!((w.span.line, w.span.col), (2, 10));
        assert_eq!(&"stipula X {\n  assets w\n}"[w.span.start..w.span.end], "w");
    }

    #[test]
    fn strings_and_escapes() {
        assert_eq!(
            kinds(r#""nothing received (maybe!)""#),
            vec![TokenKind::Str("nothing received (maybe!)".into())]
        );
        assert_eq!(kinds(r#""a\"b\\""#), vec![TokenKind::Str("a\"b\\".into())]);
    }

    #[test]
    fn unexpected_character() {
        let err = tokenize("stipula X { # }").unwrap_err();
        assert_eq!(
            err,
            SyntaxError::Lex {
                pos: crate::syntax::ast::Position { line: 1, col: 13 },
                ch: '#'
            }
        );
    }
}
