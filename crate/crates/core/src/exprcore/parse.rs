//! Recursive-descent parser.
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := factor (("*" | "/") factor)*
//! factor   := "-" factor | base ("^" rational)?
//! base     := number | ident | "(" expr ")" | func "(" expr ")"
//!           | ("min" | "max") "(" expr "," expr ")" | "root" "(" ident ":" expr ")"
//! rational := "-"? integer | "(" "-"? integer ("/" "-"? integer)? ")"
//! ```

use super::ast::{BinOp, Expr, Func, Rational};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token and its byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || (c == '.' && rest[1..].starts_with(|d: char| d.is_ascii_digit())) {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|d: char| !(d.is_ascii_alphanumeric() || d == '_'))
                .unwrap_or(rest.len());
            self.pos += len;
            return Ok((Tok::Ident(rest[..len].to_string()), start));
        }
        if "+-*/^(),:".contains(c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character `{c}`"),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
        };
        digits(&mut i);
        let mut integral = true;
        if i < bytes.len() && bytes[i] == b'.' {
            integral = false;
            i += 1;
            digits(&mut i);
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                integral = false;
                i = j;
                digits(&mut i);
            }
        }
        let text = &self.src[start..i];
        self.pos = i;
        if integral {
            if let Ok(v) = text.parse::<i64>() {
                return Ok((Tok::Int(v), start));
            }
        }
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }
}

pub(crate) struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    coords: &'a [String],
    params: &'a [String],
    local: Option<String>,
}

impl<'a> Parser<'a> {
    pub(crate) fn parse(text: &'a str, coords: &'a [String], params: &'a [String]) -> Result<Expr, ExprError> {
        let mut lex = Lexer { src: text, pos: 0 };
        let (tok, at) = lex.next()?;
        let mut p = Parser {
            lex,
            tok,
            at,
            coords,
            params,
            local: None,
        };
        let e = p.expr()?;
        if p.tok != Tok::End {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, at) = self.lex.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.at,
            message: message.to_string(),
        }
    }

    fn eat(&mut self, c: char) -> Result<bool, ExprError> {
        if self.tok == Tok::Sym(c) {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c)? {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            lhs = Expr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            lhs = Expr::bin(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-')? {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.eat('^')? {
            let r = self.rational()?;
            return Ok(Expr::Pow(Box::new(base), r));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i64, ExprError> {
        let neg = self.eat('-')?;
        match self.tok {
            Tok::Int(v) => {
                self.bump()?;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.error("expected an integer exponent")),
        }
    }

    fn rational(&mut self) -> Result<Rational, ExprError> {
        if self.eat('(')? {
            let num = self.integer()?;
            let den = if self.eat('/')? { self.integer()? } else { 1 };
            let at = self.at;
            self.expect(')')?;
            return Rational::new(num, den).ok_or(ExprError::Syntax {
                offset: at,
                message: "zero denominator in exponent".into(),
            });
        }
        Ok(Rational::integer(self.integer()?))
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Int(v) => {
                self.bump()?;
                Ok(Expr::Num(v as f64))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if self.tok == Tok::Sym('(') {
                    if let Some(e) = self.call(&name)? {
                        return Ok(e);
                    }
                }
                self.resolve(&name, at)
            }
            Tok::End => Err(self.error("unexpected end of input")),
            _ => Err(self.error("expected a number, identifier or `(`")),
        }
    }

    /// Parses a call if `name` is a built-in function; the current token is `(`.
    fn call(&mut self, name: &str) -> Result<Option<Expr>, ExprError> {
        if let Some(func) = Func::from_name(name) {
            self.bump()?;
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(Some(Expr::Call(func, Box::new(arg))));
        }
        if name == "min" || name == "max" {
            self.bump()?;
            let a = self.expr()?;
            self.expect(',')?;
            let b = self.expr()?;
            self.expect(')')?;
            let op = if name == "min" { BinOp::Min } else { BinOp::Max };
            return Ok(Some(Expr::bin(op, a, b)));
        }
        if name == "root" {
            self.bump()?;
            if self.local.is_some() {
                return Err(self.error("nested `root` is not supported"));
            }
            let Tok::Ident(var) = self.tok.clone() else {
                return Err(self.error("expected the unknown's name"));
            };
            if self.coords.contains(&var) || self.params.contains(&var) {
                return Err(self.error(&format!("unknown `{var}` shadows a coordinate or parameter")));
            }
            self.bump()?;
            self.expect(':')?;
            self.local = Some(var.clone());
            let body = self.expr();
            self.local = None;
            let body = body?;
            self.expect(')')?;
            return Ok(Some(Expr::Root {
                var,
                body: Box::new(body),
            }));
        }
        Ok(None)
    }

    fn resolve(&self, name: &str, offset: usize) -> Result<Expr, ExprError> {
        if self.local.as_deref() == Some(name) {
            return Ok(Expr::Local);
        }
        if let Some(i) = self.coords.iter().position(|c| c == name) {
            return Ok(Expr::Coord(i));
        }
        if let Some(i) = self.params.iter().position(|c| c == name) {
            return Ok(Expr::Param(i));
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn p(text: &str) -> Result<Expr, ExprError> {
        Parser::parse(text, &names(&["x", "y", "z"]), &names(&["n", "h"]))
    }

    #[test]
    fn cube_is_a_power_node() {
        assert_eq!(
            p("x^3").unwrap(),
            Expr::Pow(Box::new(Expr::Coord(0)), Rational::integer(3))
        );
    }

    #[test]
    fn parameter_product() {
        let e = p("(z - h)*y").unwrap();
        let expect = Expr::bin(
            BinOp::Mul,
            Expr::bin(BinOp::Sub, Expr::Coord(2), Expr::Param(1)),
            Expr::Coord(1),
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn negative_rational_exponent() {
        let e = p("x*(x^2 + 1/n)^(-1/3)").unwrap();
        let Expr::Binary(BinOp::Mul, _, rhs) = e else { panic!() };
        let Expr::Pow(_, r) = *rhs else { panic!() };
        assert_eq!(r, Rational { num: -1, den: 3 });
    }

    #[test]
    fn precedence_and_unary_minus() {
        // -x^2 is -(x^2), and * binds tighter than +.
        let e = p("-x^2 + y*z").unwrap();
        let expect = Expr::bin(
            BinOp::Add,
            Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Coord(0)), Rational::integer(2)))),
            Expr::bin(BinOp::Mul, Expr::Coord(1), Expr::Coord(2)),
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(p("1e-3").unwrap(), Expr::Num(1e-3));
        assert_eq!(p(".5").unwrap(), Expr::Num(0.5));
        assert_eq!(p("2.5E+2").unwrap(), Expr::Num(250.0));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match p("x + * y") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match p("x^y") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(p("(x"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(p("x^(1/0)"), Err(ExprError::Syntax { .. })));
        assert!(matches!(p("x $ y"), Err(ExprError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn unknown_identifier_reports_name_and_offset() {
        match p("x + w") {
            Err(ExprError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "w");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn root_binds_its_unknown() {
        let e = p("root(r: r^3 - z)").unwrap();
        assert!(matches!(e, Expr::Root { .. }));
        assert!(p("r").is_err());
        assert!(p("root(x: x - 1)").is_err());
        assert!(p("root(r: root(s: s - r))").is_err());
    }
}
