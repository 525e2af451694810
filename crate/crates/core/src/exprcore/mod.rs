//! Scalar expressions over chart coordinates with exact first derivatives.
//!
//! A [`ScalarField`] is parsed once and evaluated many times; parameters such
//! as a family index `n` or a time `t` are supplied at evaluation time.

mod ast;
mod eval;
mod parse;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use ast::{BinOp, Expr, Func, Rational};
pub use eval::{Dual, LANES};

use ast::{Names, Printer};
use eval::Env;

/// Cotangent vector in chart components.
pub type Covector = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("not differentiable: {0}")]
    NonDifferentiable(String),
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("parameter `{0}` has no value")]
    UnboundParameter(String),
}

/// A parsed expression together with its coordinate and parameter names.
#[derive(Clone)]
pub struct ScalarField {
    ast: Arc<Expr>,
    coords: Arc<[String]>,
    params: Arc<[String]>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.text())
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast && self.coords == other.coords && self.params == other.params
    }
}

fn owned(names: &[&str]) -> Arc<[String]> {
    names.iter().map(|s| s.to_string()).collect()
}

fn check_len(expected: usize, got: usize) -> Result<(), ExprError> {
    if expected == got {
        Ok(())
    } else {
        Err(ExprError::Dimension { expected, got })
    }
}

impl ScalarField {
    pub fn parse(text: &str, coords: &[&str], params: &[&str]) -> Result<ScalarField, ExprError> {
        let coords = owned(coords);
        let params = owned(params);
        let ast = parse::Parser::parse(text, &coords, &params)?;
        Ok(ScalarField {
            ast: Arc::new(ast),
            coords,
            params,
        })
    }

    pub fn from_expr(ast: Expr, coords: &[&str], params: &[&str]) -> ScalarField {
        ScalarField {
            ast: Arc::new(ast),
            coords: owned(coords),
            params: owned(params),
        }
    }

    pub fn constant(v: f64, coords: &[&str]) -> ScalarField {
        ScalarField::from_expr(Expr::Num(v), coords, &[])
    }

    /// The `i`-th coordinate function.
    pub fn coordinate(i: usize, coords: &[&str]) -> ScalarField {
        ScalarField::from_expr(Expr::Coord(i), coords, &[])
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Canonical, fully parenthesized text that parses back to the same tree.
    pub fn text(&self) -> String {
        let names = Names {
            coords: &self.coords,
            params: &self.params,
        };
        Printer {
            expr: &self.ast,
            names: &names,
        }
        .to_string()
    }

    pub fn eval(&self, p: &[f64], params: &[f64]) -> Result<f64, ExprError> {
        check_len(self.coords.len(), p.len())?;
        check_len(self.params.len(), params.len())?;
        eval::eval(
            &self.ast,
            &Env {
                coords: p,
                params,
                local: None,
            },
        )
    }

    pub fn grad(&self, p: &[f64], params: &[f64]) -> Result<Covector, ExprError> {
        check_len(self.coords.len(), p.len())?;
        check_len(self.params.len(), params.len())?;
        let n = p.len();
        let pd: Vec<Dual> = params.iter().map(|&v| Dual::constant(v)).collect();
        let mut out = DVector::zeros(n);
        // One pass per block of LANES coordinates.
        for start in (0..n.max(1)).step_by(LANES) {
            let coords: Vec<Dual> = p
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if i >= start && i < start + LANES {
                        Dual::seeded(v, i - start)
                    } else {
                        Dual::constant(v)
                    }
                })
                .collect();
            let d = eval::eval(
                &self.ast,
                &Env {
                    coords: &coords,
                    params: &pd,
                    local: None,
                },
            )?;
            for i in start..n.min(start + LANES) {
                let g = d.d[i - start];
                if !g.is_finite() {
                    return Err(ExprError::NonDifferentiable(format!(
                        "unbounded derivative in `{}`",
                        self.coords[i]
                    )));
                }
                out[i] = g;
            }
        }
        Ok(out)
    }

    /// Fixes parameter values by name; missing names are an error.
    pub fn bind(&self, values: &[(&str, f64)]) -> Result<BoundField, ExprError> {
        let params = self
            .params
            .iter()
            .map(|name| {
                values
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| ExprError::UnboundParameter(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoundField {
            field: self.clone(),
            params,
        })
    }

    /// Binds a parameterless field.
    pub fn bound(&self) -> BoundField {
        BoundField {
            field: self.clone(),
            params: vec![0.0; self.params.len()],
        }
    }
}

/// Row `i` is `grad(fs[i], p)`.
pub fn jacobian(fs: &[ScalarField], p: &[f64], params: &[f64]) -> Result<DMatrix<f64>, ExprError> {
    let n = p.len();
    let mut j = DMatrix::zeros(fs.len(), n);
    for (i, f) in fs.iter().enumerate() {
        j.set_row(i, &f.grad(p, params)?.transpose());
    }
    Ok(j)
}

/// A real function of the chart point with a first derivative.
pub trait Function: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, p: &[f64]) -> Result<f64, ExprError>;
    fn gradient(&self, p: &[f64]) -> Result<Covector, ExprError>;
}

/// A field with every parameter fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundField {
    pub field: ScalarField,
    pub params: Vec<f64>,
}

impl Function for BoundField {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn value(&self, p: &[f64]) -> Result<f64, ExprError> {
        self.field.eval(p, &self.params)
    }
    fn gradient(&self, p: &[f64]) -> Result<Covector, ExprError> {
        self.field.grad(p, &self.params)
    }
}

impl Function for ScalarField {
    fn dim(&self) -> usize {
        ScalarField::dim(self)
    }
    fn value(&self, p: &[f64]) -> Result<f64, ExprError> {
        self.eval(p, &[])
    }
    fn gradient(&self, p: &[f64]) -> Result<Covector, ExprError> {
        self.grad(p, &[])
    }
}

/// A Hamiltonian that may depend on time.
pub trait Hamiltonian: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value_at(&self, t: f64, p: &[f64]) -> Result<f64, ExprError>;
    fn gradient_at(&self, t: f64, p: &[f64]) -> Result<Covector, ExprError>;
    fn is_autonomous(&self) -> bool;
}

impl<F: Function + ?Sized> Hamiltonian for F {
    fn dim(&self) -> usize {
        Function::dim(self)
    }
    fn value_at(&self, _t: f64, p: &[f64]) -> Result<f64, ExprError> {
        self.value(p)
    }
    fn gradient_at(&self, _t: f64, p: &[f64]) -> Result<Covector, ExprError> {
        self.gradient(p)
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// A field whose parameter named `t` is the flow time; other parameters are fixed.
#[derive(Debug, Clone)]
pub struct TimeDependent {
    field: ScalarField,
    params: Vec<f64>,
    t_index: usize,
}

impl TimeDependent {
    pub fn new(field: ScalarField, fixed: &[(&str, f64)]) -> Result<TimeDependent, ExprError> {
        let t_index = field
            .params()
            .iter()
            .position(|p| p == "t")
            .ok_or_else(|| ExprError::UnboundParameter("t".into()))?;
        let mut values: Vec<(&str, f64)> = fixed.to_vec();
        values.push(("t", 0.0));
        let params = field.bind(&values)?.params;
        Ok(TimeDependent {
            field,
            params,
            t_index,
        })
    }

    fn params_at(&self, t: f64) -> Vec<f64> {
        let mut p = self.params.clone();
        p[self.t_index] = t;
        p
    }
}

impl Hamiltonian for TimeDependent {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn value_at(&self, t: f64, p: &[f64]) -> Result<f64, ExprError> {
        self.field.eval(p, &self.params_at(t))
    }
    fn gradient_at(&self, t: f64, p: &[f64]) -> Result<Covector, ExprError> {
        self.field.grad(p, &self.params_at(t))
    }
    fn is_autonomous(&self) -> bool {
        false
    }
}
