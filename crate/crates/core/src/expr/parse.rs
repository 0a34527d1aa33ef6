use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{Expr, Func};

/// Syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    /// Found something other than one of the expected tokens.
    Unexpected {
        expected: Vec<&'static str>,
        found: String,
    },
    UnknownIdentifier(String),
    InvalidNumber(String),
    /// The exponent after `^` must be an integer literal fitting in 32 bits.
    BadExponent(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::Unexpected { expected, found } => {
                write!(f, "expected one of ")?;
                for (i, e) in expected.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "; found {found}")
            }
            ParseErrorKind::UnknownIdentifier(id) => write!(f, "unknown identifier `{id}`"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            ParseErrorKind::BadExponent(s) => write!(f, "exponent must be an integer, found {s}"),
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(&'a str),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Other(char),
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) => alloc::format!("number `{s}`"),
            Tok::Ident(s) => alloc::format!("identifier `{s}`"),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::Caret => "`^`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Other(c) => alloc::format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

const OPERAND: &[&str] = &["number", "`x`", "function name", "`(`", "`-`"];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok<'a>,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        };
        p.bump();
        p
    }

    fn bump(&mut self) {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return;
        }
        let c = bytes[self.pos];
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            self.tok = t;
        } else if c.is_ascii_digit() || c == b'.' {
            self.pos = scan_number(bytes, self.pos);
            self.tok = Tok::Num(&self.src[self.tok_start..self.pos]);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            self.tok = Tok::Ident(&self.src[self.tok_start..self.pos]);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            self.pos += ch.len_utf8();
            self.tok = Tok::Other(ch);
        }
    }

    fn unexpected(&self, expected: &[&'static str]) -> ParseError {
        ParseError {
            offset: self.tok_start,
            kind: ParseErrorKind::Unexpected {
                expected: expected.to_vec(),
                found: self.tok.describe(),
            },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let start = self.tok_start;
        let negative = self.tok == Tok::Minus;
        if negative {
            self.bump();
        }
        let digits = match self.tok {
            Tok::Num(s) if s.bytes().all(|b| b.is_ascii_digit()) => s,
            Tok::Num(s) => {
                return Err(ParseError {
                    offset: self.tok_start,
                    kind: ParseErrorKind::BadExponent(alloc::format!("`{s}`")),
                })
            }
            _ => return Err(self.unexpected(&["integer exponent"])),
        };
        let exponent = digits
            .parse::<i32>()
            .ok()
            .and_then(|n| if negative { n.checked_neg() } else { Some(n) })
            .ok_or_else(|| ParseError {
                offset: start,
                kind: ParseErrorKind::BadExponent(alloc::format!("`{digits}`")),
            })?;
        self.bump();
        Ok(Expr::Pow(Box::new(base), exponent))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok {
            Tok::Num(s) => {
                let value = s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ParseError {
                        offset: self.tok_start,
                        kind: ParseErrorKind::InvalidNumber(s.to_string()),
                    })?;
                self.bump();
                Ok(Expr::Num(value))
            }
            Tok::Ident("x") => {
                self.bump();
                Ok(Expr::Var)
            }
            Tok::Ident(name) => {
                let func = Func::from_name(name).ok_or_else(|| ParseError {
                    offset: self.tok_start,
                    kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                })?;
                self.bump();
                if self.tok != Tok::LParen {
                    return Err(self.unexpected(&["`(`"]));
                }
                self.bump();
                let arg = self.expr()?;
                self.close()?;
                Ok(Expr::Func(func, Box::new(arg)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.close()?;
                Ok(inner)
            }
            _ => Err(self.unexpected(OPERAND)),
        }
    }

    fn close(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::RParen {
            return Err(self.unexpected(&["`)`", "operator"]));
        }
        self.bump();
        Ok(())
    }
}

// digits [. digits] [(e|E) [+|-] digits]
fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

/// Parses an expression in `x`.
///
/// Precedence from tightest: `^` (integer exponent, not chainable), unary
/// minus, `*` and `/`, then `+` and `-`. Binary operators associate to the
/// left. Whitespace is ignored.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text);
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn example_functions() {
        assert_eq!(
            parse_expr("sin(x) + 4*x").unwrap(),
            Expr::Add(
                b(Expr::Func(Func::Sin, b(Expr::Var))),
                b(Expr::Mul(b(Expr::Num(4.0)), b(Expr::Var)))
            )
        );
        assert_eq!(
            parse_expr("exp(x) + 5*x").unwrap(),
            Expr::Add(
                b(Expr::Func(Func::Exp, b(Expr::Var))),
                b(Expr::Mul(b(Expr::Num(5.0)), b(Expr::Var)))
            )
        );
        assert_eq!(parse_expr("x").unwrap(), Expr::Var);
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(
            parse_expr("  sin( x )+4 *x ").unwrap(),
            parse_expr("sin(x)+4*x").unwrap()
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse_expr("x-1-2").unwrap(),
            Expr::Sub(
                b(Expr::Sub(b(Expr::Var), b(Expr::Num(1.0)))),
                b(Expr::Num(2.0))
            )
        );
        assert_eq!(
            parse_expr("x/2/3").unwrap(),
            Expr::Div(
                b(Expr::Div(b(Expr::Var), b(Expr::Num(2.0)))),
                b(Expr::Num(3.0))
            )
        );
        // ^ binds tighter than unary minus
        assert_eq!(
            parse_expr("-x^2").unwrap(),
            Expr::Neg(b(Expr::Pow(b(Expr::Var), 2)))
        );
        // unary minus binds tighter than *
        assert_eq!(
            parse_expr("-x*2").unwrap(),
            Expr::Mul(b(Expr::Neg(b(Expr::Var))), b(Expr::Num(2.0)))
        );
        assert_eq!(
            parse_expr("1+x*2").unwrap(),
            Expr::Add(
                b(Expr::Num(1.0)),
                b(Expr::Mul(b(Expr::Var), b(Expr::Num(2.0))))
            )
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_expr("2.5e-3").unwrap(), Expr::Num(2.5e-3));
        assert_eq!(parse_expr(".5").unwrap(), Expr::Num(0.5));
        assert_eq!(parse_expr("3.").unwrap(), Expr::Num(3.0));
        assert_eq!(parse_expr("1E+2").unwrap(), Expr::Num(100.0));
        assert_eq!(parse_expr("x^-3").unwrap(), Expr::Pow(b(Expr::Var), -3));
    }

    #[test]
    fn unclosed_paren_reports_offset() {
        let err = parse_expr("sin(x").unwrap_err();
        assert_eq!(err.offset, 5);
        match err.kind {
            ParseErrorKind::Unexpected { expected, found } => {
                assert!(expected.contains(&"`)`"));
                assert_eq!(found, "end of input");
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(parse_expr("").unwrap_err().offset, 0);
        assert_eq!(parse_expr("x +").unwrap_err().offset, 3);
        assert_eq!(parse_expr("x x").unwrap_err().offset, 2);
        assert_eq!(parse_expr("(x))").unwrap_err().offset, 3);
        assert_eq!(parse_expr("x ^ 2 ^ 3").unwrap_err().offset, 6);
        assert!(matches!(
            parse_expr("x^2.5").unwrap_err().kind,
            ParseErrorKind::BadExponent(_)
        ));
        assert!(matches!(
            parse_expr("x^y").unwrap_err().kind,
            ParseErrorKind::Unexpected { .. }
        ));
        assert!(matches!(
            parse_expr("1 # 2").unwrap_err().kind,
            ParseErrorKind::Unexpected { .. }
        ));
        assert!(matches!(
            parse_expr("1e999").unwrap_err().kind,
            ParseErrorKind::InvalidNumber(_)
        ));
        assert!(matches!(
            parse_expr("x^99999999999").unwrap_err().kind,
            ParseErrorKind::BadExponent(_)
        ));
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_expr("2 * tan(x)").unwrap_err();
        assert_eq!(err.offset, 4);
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("tan".into()));
        let err = parse_expr("y + 1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("y".into()));
        // a function name must be applied
        assert!(parse_expr("sin + 1").is_err());
    }
}
