//! Recursive-descent parser for function definitions.
//!
//! ```text
//! expr      := term (("+"|"-") term)*
//! term      := factor (("*"|"/") factor)*
//! factor    := "-" factor | power
//! power     := atom ("^" factor)?
//! atom      := NUMBER | "x" | "pi" | FUNC "(" expr ")" | "(" expr ")" | piecewise
//! piecewise := "piecewise" "(" branch (";" branch)* ";" "else" ":" expr ")"
//! branch    := cond ":" expr
//! cond      := bound ("&" bound)*
//! bound     := NUMBER ("<"|"<=") "x" | "x" ("<"|"<="|">"|">=") NUMBER
//! ```
//!
//! Numbers inside bounds may carry a sign, so `x<=-1` is a single bound.

use thiserror::Error;

use crate::expr::{BinaryOp, Bound, Branch, Comparator, Condition, Expr, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    /// Found something other than the listed token(s).
    Expected(String),
    UnknownIdentifier(String),
    InvalidNumber(String),
    UnexpectedChar(char),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", self.describe())]
pub struct ParseError {
    /// Byte offset into the input.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn describe(&self) -> String {
        match &self.kind {
            ParseErrorKind::Empty => "empty expression".to_owned(),
            ParseErrorKind::Expected(what) => {
                format!("syntax error at offset {}: expected {what}", self.offset)
            }
            ParseErrorKind::UnknownIdentifier(name) => {
                format!("unknown identifier `{name}` at offset {}", self.offset)
            }
            ParseErrorKind::InvalidNumber(text) => {
                format!("invalid number `{text}` at offset {}", self.offset)
            }
            ParseErrorKind::UnexpectedChar(c) => {
                format!("unexpected character `{c}` at offset {}", self.offset)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Semi,
    Colon,
    Amp,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b';' => Some(Tok::Semi),
            b':' => Some(Tok::Colon),
            b'&' => Some(Tok::Amp),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push((tok, start));
            i += 1;
            continue;
        }
        match c {
            _ if c.is_ascii_whitespace() => i += 1,
            b'<' | b'>' => {
                let eq = bytes.get(i + 1) == Some(&b'=');
                let tok = match (c, eq) {
                    (b'<', false) => Tok::Lt,
                    (b'<', true) => Tok::Le,
                    (_, false) => Tok::Gt,
                    (_, true) => Tok::Ge,
                };
                out.push((tok, start));
                i += 1 + eq as usize;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
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
                let text = &src[start..i];
                let value = text
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ParseError {
                        offset: start,
                        kind: ParseErrorKind::InvalidNumber(text.to_owned()),
                    })?;
                out.push((Tok::Num(value), start));
            }
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_owned()), start));
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        }
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn expected<T>(&self, what: &str) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            kind: ParseErrorKind::Expected(what.to_owned()),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.expected(what)
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::unary(UnaryOp::Neg, self.factor()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            // right-associative: the exponent is a full factor
            let exponent = self.factor()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Constant(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "\")\"")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(Expr::Variable),
                    "pi" => Ok(Expr::Constant(std::f64::consts::PI)),
                    "piecewise" => self.piecewise(),
                    _ => match UnaryOp::from_name(&name) {
                        Some(op) => {
                            self.expect(Tok::LParen, "\"(\"")?;
                            let arg = self.expr()?;
                            self.expect(Tok::RParen, "\")\"")?;
                            Ok(Expr::unary(op, arg))
                        }
                        None => Err(ParseError {
                            offset,
                            kind: ParseErrorKind::UnknownIdentifier(name),
                        }),
                    },
                }
            }
            _ => self.expected("a number, \"x\", a function call or \"(\""),
        }
    }

    fn piecewise(&mut self) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "\"(\"")?;
        let mut branches = Vec::new();
        loop {
            if matches!(self.peek(), Tok::Ident(s) if s == "else") {
                if branches.is_empty() {
                    return self.expected("a condition");
                }
                self.bump();
                self.expect(Tok::Colon, "\":\"")?;
                let default = self.expr()?;
                self.expect(Tok::RParen, "\")\"")?;
                return Ok(Expr::piecewise(branches, default));
            }
            let when = self.condition()?;
            self.expect(Tok::Colon, "\":\"")?;
            let then = self.expr()?;
            self.expect(Tok::Semi, "\";\"")?;
            branches.push(Branch { when, then });
        }
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let mut bounds = vec![self.bound()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            bounds.push(self.bound()?);
        }
        Ok(Condition::new(bounds))
    }

    fn bound(&mut self) -> Result<Bound, ParseError> {
        if matches!(self.peek(), Tok::Ident(s) if s == "x") {
            self.bump();
            let cmp = match self.peek() {
                Tok::Lt => Comparator::Lt,
                Tok::Le => Comparator::Le,
                Tok::Gt => Comparator::Gt,
                Tok::Ge => Comparator::Ge,
                _ => return self.expected("a comparison operator"),
            };
            self.bump();
            let value = self.signed_number()?;
            return Ok(Bound { cmp, value });
        }
        let value = self.signed_number()?;
        // `v < x` is `x > v`
        let cmp = match self.peek() {
            Tok::Lt => Comparator::Gt,
            Tok::Le => Comparator::Ge,
            _ => return self.expected("\"<\" or \"<=\""),
        };
        self.bump();
        if !matches!(self.peek(), Tok::Ident(s) if s == "x") {
            return self.expected("\"x\"");
        }
        self.bump();
        Ok(Bound { cmp, value })
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let sign = match self.peek() {
            Tok::Minus => {
                self.bump();
                -1.0
            }
            Tok::Plus => {
                self.bump();
                1.0
            }
            _ => 1.0,
        };
        match self.peek() {
            Tok::Num(v) => {
                let v = *v;
                self.bump();
                Ok(sign * v)
            }
            _ => self.expected("a number"),
        }
    }
}

/// Parses a function of `x`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            offset: 0,
            kind: ParseErrorKind::Empty,
        });
    }
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let expr = parser.expr()?;
    if *parser.peek() != Tok::Eof {
        return parser.expected("an operator or end of input");
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{BinaryOp::*, UnaryOp::*};

    fn c(v: f64) -> Expr {
        Expr::Constant(v)
    }
    fn x() -> Expr {
        Expr::Variable
    }
    fn bin(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::binary(op, l, r)
    }
    fn un(op: UnaryOp, e: Expr) -> Expr {
        Expr::unary(op, e)
    }

    #[test]
    fn bisection_example_function() {
        assert_eq!(
            parse("exp(x)-4*x").unwrap(),
            bin(Sub, un(Exp, x()), bin(Mul, c(4.0), x()))
        );
    }

    #[test]
    fn negated_power_binds_whole_term() {
        assert_eq!(
            parse("-(x-0.5)^2+1").unwrap(),
            bin(
                Add,
                un(Neg, bin(Pow, bin(Sub, x(), c(0.5)), c(2.0))),
                c(1.0)
            )
        );
        assert_eq!(parse("-x^2").unwrap(), un(Neg, bin(Pow, x(), c(2.0))));
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(
            parse("2^3^2").unwrap(),
            bin(Pow, c(2.0), bin(Pow, c(3.0), c(2.0)))
        );
        assert_eq!(parse("x^-1").unwrap(), bin(Pow, x(), un(Neg, c(1.0))));
    }

    #[test]
    fn precedence() {
        assert_eq!(
            parse("1+2*x/3-4").unwrap(),
            bin(
                Sub,
                bin(Add, c(1.0), bin(Div, bin(Mul, c(2.0), x()), c(3.0))),
                c(4.0)
            )
        );
        assert_eq!(parse("1.5e-3").unwrap(), c(1.5e-3));
        assert_eq!(parse(".25").unwrap(), c(0.25));
    }

    #[test]
    fn unclosed_paren() {
        let err = parse("2*(x").unwrap_err();
        assert_eq!(err.offset, 4);
        assert_eq!(err.kind, ParseErrorKind::Expected("\")\"".into()));
        assert_eq!(err.to_string(), "syntax error at offset 4: expected \")\"");
    }

    #[test]
    fn other_errors() {
        assert_eq!(parse("").unwrap_err().kind, ParseErrorKind::Empty);
        let err = parse("foo(x)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        assert_eq!(err.offset, 0);
        assert_eq!(parse("x $ 2").unwrap_err().offset, 2);
        assert_eq!(parse("x x").unwrap_err().offset, 2);
        assert!(matches!(
            parse("1e999").unwrap_err().kind,
            ParseErrorKind::InvalidNumber(_)
        ));
        assert!(parse("piecewise(else: 1)").is_err());
        assert!(parse("piecewise(x<1: 2)").is_err());
        assert!(parse("piecewise(x<1: 2; else 3)").is_err());
    }

    #[test]
    fn piecewise_conditions() {
        let f = parse("piecewise(-4 <= x & x <= -1: x+5; -1 < x & x < 0: 4; else: 3)").unwrap();
        let Expr::Piecewise { branches, .. } = &f else {
            panic!("not piecewise")
        };
        assert_eq!(
            branches[0].when.bounds,
            vec![
                Bound {
                    cmp: Comparator::Ge,
                    value: -4.0
                },
                Bound {
                    cmp: Comparator::Le,
                    value: -1.0
                },
            ]
        );
        assert_eq!(
            branches[1].when.bounds[0],
            Bound {
                cmp: Comparator::Gt,
                value: -1.0
            }
        );
        assert_eq!(f.eval(-1.0), Ok(4.0));
        assert_eq!(f.eval(-0.25), Ok(4.0));
        assert_eq!(f.eval(1.0), Ok(3.0));
    }

    #[test]
    fn pi_constant() {
        assert_eq!(parse("pi").unwrap(), c(std::f64::consts::PI));
    }
}
