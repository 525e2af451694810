//! Expression trees and their canonical text form.

use std::fmt;

/// A reduced rational exponent `num/den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Option<Rational> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let s = if den < 0 { -1 } else { 1 };
        Some(Rational {
            num: s * num / g,
            den: s * den / g,
        })
    }

    pub fn integer(num: i64) -> Rational {
        Rational { num, den: 1 }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 && self.num >= 0 {
            write!(f, "{}", self.num)
        } else if self.den == 1 {
            write!(f, "({})", self.num)
        } else {
            write!(f, "({}/{})", self.num, self.den)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Cbrt,
    Sin,
    Cos,
    Exp,
    Smoothstep,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Sqrt,
        Func::Cbrt,
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Smoothstep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Cbrt => "cbrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Smoothstep => "smoothstep",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

/// Expression node. Coordinates and parameters are referenced by index into
/// the owning field's name lists; `Local` is the unknown of an enclosing `root`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Param(usize),
    Local,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Rational),
    Call(Func, Box<Expr>),
    /// The unique real zero of `body` as a function of the unknown `var`.
    Root { var: String, body: Box<Expr> },
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Coord(_) | Expr::Param(_) | Expr::Local => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Root { body, .. } => 1 + body.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn contains_root(&self) -> bool {
        match self {
            Expr::Root { .. } => true,
            Expr::Num(_) | Expr::Coord(_) | Expr::Param(_) | Expr::Local => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.contains_root(),
            Expr::Binary(_, a, b) => a.contains_root() || b.contains_root(),
        }
    }
}

/// Names used when printing an expression.
pub struct Names<'a> {
    pub coords: &'a [String],
    pub params: &'a [String],
}

/// Fully parenthesized printer; its output re-parses to the same tree.
pub struct Printer<'a> {
    pub expr: &'a Expr,
    pub names: &'a Names<'a>,
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.names)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, names: &Names<'_>) -> fmt::Result {
    write_in(f, e, names, "")
}

fn write_in(f: &mut fmt::Formatter<'_>, e: &Expr, names: &Names<'_>, local: &str) -> fmt::Result {
    let write_expr = |f: &mut fmt::Formatter<'_>, e: &Expr, names: &Names<'_>| write_in(f, e, names, local);
    match e {
        Expr::Num(v) => write!(f, "{v:?}"),
        Expr::Coord(i) => f.write_str(&names.coords[*i]),
        Expr::Param(i) => f.write_str(&names.params[*i]),
        Expr::Local => f.write_str(local),
        Expr::Neg(a) => {
            f.write_str("(-")?;
            write_expr(f, a, names)?;
            f.write_str(")")
        }
        Expr::Binary(op @ (BinOp::Min | BinOp::Max), a, b) => {
            f.write_str(if *op == BinOp::Min { "min(" } else { "max(" })?;
            write_expr(f, a, names)?;
            f.write_str(", ")?;
            write_expr(f, b, names)?;
            f.write_str(")")
        }
        Expr::Binary(op, a, b) => {
            let sym = match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                _ => unreachable!(),
            };
            f.write_str("(")?;
            write_expr(f, a, names)?;
            f.write_str(sym)?;
            write_expr(f, b, names)?;
            f.write_str(")")
        }
        Expr::Pow(base, r) => {
            let wrap = matches!(**base, Expr::Pow(..) | Expr::Num(_));
            if wrap {
                f.write_str("(")?;
            }
            write_expr(f, base, names)?;
            if wrap {
                f.write_str(")")?;
            }
            write!(f, "^{r}")
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a, names)?;
            f.write_str(")")
        }
        Expr::Root { var, body } => {
            write!(f, "root({var}: ")?;
            write_in(f, body, names, var)?;
            f.write_str(")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_reduce_and_normalize_sign() {
        assert_eq!(Rational::new(2, -6), Some(Rational { num: -1, den: 3 }));
        assert_eq!(Rational::new(0, 5), Some(Rational { num: 0, den: 1 }));
        assert_eq!(Rational::new(1, 0), None);
        assert_eq!(Rational::new(-1, 3).unwrap().to_string(), "(-1/3)");
        assert_eq!(Rational::integer(-2).to_string(), "(-2)");
    }
}
