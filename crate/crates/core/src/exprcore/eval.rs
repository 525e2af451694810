//! Tree-walking evaluation over plain floats and forward-mode duals.

use super::ast::{BinOp, Expr, Func, Rational};
use super::ExprError;

/// Number of tangent directions carried by one dual pass.
pub const LANES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; LANES],
}

impl Dual {
    pub fn constant(v: f64) -> Dual {
        Dual { v, d: [0.0; LANES] }
    }

    pub fn seeded(v: f64, lane: usize) -> Dual {
        let mut d = [0.0; LANES];
        d[lane] = 1.0;
        Dual { v, d }
    }

    fn chain(self, v: f64, k: f64) -> Dual {
        let mut d = self.d;
        for x in &mut d {
            *x *= k;
        }
        Dual { v, d }
    }

    fn has_tangent(&self) -> bool {
        self.d.iter().any(|&x| x != 0.0)
    }
}

pub(crate) trait Scalar: Copy {
    fn lift(v: f64) -> Self;
    fn val(self) -> f64;
    fn neg(self) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    /// `f(v)` with derivative `df(v)`; `df` is only called on differentiable inputs.
    fn unary(self, v: f64, df: impl FnOnce() -> Result<f64, ExprError>) -> Result<Self, ExprError>;
    fn pick(a: Self, b: Self, take_a: bool, tie: bool, what: &str) -> Result<Self, ExprError>;
    fn root(body: &Expr, env: &Env<'_, Self>, r: f64) -> Result<Self, ExprError>;
}

impl Scalar for f64 {
    fn lift(v: f64) -> f64 {
        v
    }
    fn val(self) -> f64 {
        self
    }
    fn neg(self) -> f64 {
        -self
    }
    fn add(self, o: f64) -> f64 {
        self + o
    }
    fn sub(self, o: f64) -> f64 {
        self - o
    }
    fn mul(self, o: f64) -> f64 {
        self * o
    }
    fn div(self, o: f64) -> f64 {
        self / o
    }
    fn unary(self, v: f64, _df: impl FnOnce() -> Result<f64, ExprError>) -> Result<f64, ExprError> {
        Ok(v)
    }
    fn pick(a: f64, b: f64, take_a: bool, _tie: bool, _what: &str) -> Result<f64, ExprError> {
        Ok(if take_a { a } else { b })
    }
    fn root(_body: &Expr, _env: &Env<'_, f64>, r: f64) -> Result<f64, ExprError> {
        Ok(r)
    }
}

impl Scalar for Dual {
    fn lift(v: f64) -> Dual {
        Dual::constant(v)
    }
    fn val(self) -> f64 {
        self.v
    }
    fn neg(self) -> Dual {
        self.chain(-self.v, -1.0)
    }
    fn add(self, o: Dual) -> Dual {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x += y;
        }
        Dual { v: self.v + o.v, d }
    }
    fn sub(self, o: Dual) -> Dual {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x -= y;
        }
        Dual { v: self.v - o.v, d }
    }
    fn mul(self, o: Dual) -> Dual {
        let d = std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]);
        Dual { v: self.v * o.v, d }
    }
    fn div(self, o: Dual) -> Dual {
        let v = self.v / o.v;
        let d = std::array::from_fn(|i| (self.d[i] - v * o.d[i]) / o.v);
        Dual { v, d }
    }
    fn unary(self, v: f64, df: impl FnOnce() -> Result<f64, ExprError>) -> Result<Dual, ExprError> {
        if !self.has_tangent() {
            return Ok(Dual::constant(v));
        }
        Ok(self.chain(v, df()?))
    }
    fn pick(a: Dual, b: Dual, take_a: bool, tie: bool, what: &str) -> Result<Dual, ExprError> {
        if tie && a.d != b.d {
            return Err(ExprError::NonDifferentiable(format!(
                "{what} of equal arguments with different derivatives at {}",
                a.v
            )));
        }
        Ok(if take_a { a } else { b })
    }
    fn root(body: &Expr, env: &Env<'_, Dual>, r: f64) -> Result<Dual, ExprError> {
        // Implicit differentiation: dr = -(dphi/dp . dp) / (dphi/dr).
        let fixed = Env {
            coords: env.coords,
            params: env.params,
            local: Some(Dual::constant(r)),
        };
        let phi_p: Dual = eval(body, &fixed)?;
        if !phi_p.has_tangent() {
            return Ok(Dual::constant(r));
        }
        let phi_r = root_slope(body, env, r)?;
        if phi_r == 0.0 || !phi_r.is_finite() {
            return Err(ExprError::NonDifferentiable(format!(
                "implicit root {r} has zero slope in its unknown"
            )));
        }
        Ok(phi_p.chain(r, -1.0 / phi_r))
    }
}

pub(crate) struct Env<'a, T> {
    pub coords: &'a [T],
    pub params: &'a [T],
    pub local: Option<T>,
}

fn domain(msg: String) -> ExprError {
    ExprError::Domain(msg)
}

fn finite(v: f64, what: &str) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(format!("{what} produced a non-finite value")))
    }
}

pub(crate) fn eval<T: Scalar>(e: &Expr, env: &Env<'_, T>) -> Result<T, ExprError> {
    let out = match e {
        Expr::Num(v) => T::lift(*v),
        Expr::Coord(i) => env.coords[*i],
        Expr::Param(i) => env.params[*i],
        Expr::Local => env
            .local
            .ok_or_else(|| domain("root unknown used outside its root".into()))?,
        Expr::Neg(a) => eval(a, env)?.neg(),
        Expr::Binary(op, a, b) => {
            let a = eval(a, env)?;
            let b = eval(b, env)?;
            match op {
                BinOp::Add => a.add(b),
                BinOp::Sub => a.sub(b),
                BinOp::Mul => a.mul(b),
                BinOp::Div => {
                    if b.val() == 0.0 {
                        return Err(domain(format!("division by zero (numerator {})", a.val())));
                    }
                    a.div(b)
                }
                BinOp::Min => T::pick(a, b, a.val() <= b.val(), a.val() == b.val(), "min")?,
                BinOp::Max => T::pick(a, b, a.val() >= b.val(), a.val() == b.val(), "max")?,
            }
        }
        Expr::Pow(base, r) => {
            let b = eval(base, env)?;
            pow(b, *r)?
        }
        Expr::Call(f, a) => {
            let a = eval(a, env)?;
            call(*f, a)?
        }
        Expr::Root { body, .. } => {
            let vals: Vec<f64> = env.coords.iter().map(|c| c.val()).collect();
            let pvals: Vec<f64> = env.params.iter().map(|c| c.val()).collect();
            let r = solve_root(body, &vals, &pvals)?;
            T::root(body, env, r)?
        }
    };
    finite(out.val(), "expression")?;
    Ok(out)
}

fn pow<T: Scalar>(b: T, r: Rational) -> Result<T, ExprError> {
    let x = b.val();
    let q = r.as_f64();
    if r.den == 1 {
        let n = r.num;
        if x == 0.0 && n < 0 {
            return Err(domain(format!("zero raised to negative power {n}")));
        }
        let v = powi(x, n);
        return b.unary(v, || Ok(if n == 0 { 0.0 } else { n as f64 * powi(x, n - 1) }));
    }
    if x < 0.0 && r.den % 2 == 0 {
        return Err(domain(format!("even root of negative base {x}")));
    }
    if x == 0.0 {
        if q < 0.0 {
            return Err(domain("zero raised to a negative rational power".into()));
        }
        let nd = || {
            if q < 1.0 {
                Err(ExprError::NonDifferentiable(format!("power {r} at 0")))
            } else if q == 1.0 {
                Ok(1.0)
            } else {
                Ok(0.0)
            }
        };
        return b.unary(0.0, nd);
    }
    let v = real_pow(x, r);
    b.unary(v, || Ok(q * v / x))
}

fn powi(x: f64, n: i64) -> f64 {
    if let Ok(k) = i32::try_from(n) {
        x.powi(k)
    } else {
        x.powf(n as f64)
    }
}

/// Real branch of `x^(p/q)`: odd denominators accept negative bases.
fn real_pow(x: f64, r: Rational) -> f64 {
    let root = match r.den {
        2 => x.sqrt(),
        3 => x.cbrt(),
        d => {
            let m = x.abs().powf(1.0 / d as f64);
            if x < 0.0 {
                -m
            } else {
                m
            }
        }
    };
    powi(root, r.num)
}

fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let t2 = t * t;
        let v = t2 * t * (10.0 + t * (-15.0 + 6.0 * t));
        let s = 1.0 - t;
        (v, 30.0 * t2 * s * s)
    }
}

fn call<T: Scalar>(f: Func, a: T) -> Result<T, ExprError> {
    let x = a.val();
    match f {
        Func::Sqrt => {
            if x < 0.0 {
                return Err(domain(format!("sqrt of negative {x}")));
            }
            let v = x.sqrt();
            a.unary(v, || {
                if v == 0.0 {
                    Err(ExprError::NonDifferentiable("sqrt at 0".into()))
                } else {
                    Ok(0.5 / v)
                }
            })
        }
        Func::Cbrt => {
            let v = x.cbrt();
            a.unary(v, || {
                if v == 0.0 {
                    Err(ExprError::NonDifferentiable("cbrt at 0".into()))
                } else {
                    Ok(1.0 / (3.0 * v * v))
                }
            })
        }
        Func::Sin => a.unary(x.sin(), || Ok(x.cos())),
        Func::Cos => a.unary(x.cos(), || Ok(-x.sin())),
        Func::Exp => {
            let v = finite(x.exp(), "exp")?;
            a.unary(v, || Ok(v))
        }
        Func::Smoothstep => {
            let (v, dv) = smoothstep(x);
            a.unary(v, || Ok(dv))
        }
    }
}

fn eval_with_local(body: &Expr, coords: &[f64], params: &[f64], r: f64) -> Result<f64, ExprError> {
    eval(
        body,
        &Env {
            coords,
            params,
            local: Some(r),
        },
    )
}

/// Derivative of the root body in its unknown, other inputs held fixed.
fn root_slope<T: Scalar>(body: &Expr, env: &Env<'_, T>, r: f64) -> Result<f64, ExprError> {
    let coords: Vec<Dual> = env.coords.iter().map(|c| Dual::constant(c.val())).collect();
    let params: Vec<Dual> = env.params.iter().map(|c| Dual::constant(c.val())).collect();
    let d: Dual = eval(
        body,
        &Env {
            coords: &coords,
            params: &params,
            local: Some(Dual::seeded(r, 0)),
        },
    )?;
    Ok(d.d[0])
}

/// Unique real zero of a monotone body: bracket by doubling, then Newton
/// safeguarded by bisection.
fn solve_root(body: &Expr, coords: &[f64], params: &[f64]) -> Result<f64, ExprError> {
    let f = |r: f64| eval_with_local(body, coords, params, r);
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let (mut flo, mut fhi) = (f(lo)?, f(hi)?);
    let mut grow = 0;
    while flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        grow += 1;
        if grow > 60 {
            return Err(domain("root: no sign change found".into()));
        }
        lo *= 2.0;
        hi *= 2.0;
        flo = f(lo)?;
        fhi = f(hi)?;
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let rising = fhi > 0.0;
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let coords_d: Vec<Dual> = coords.iter().map(|&c| Dual::constant(c)).collect();
        let params_d: Vec<Dual> = params.iter().map(|&c| Dual::constant(c)).collect();
        let fr: Dual = eval(
            body,
            &Env {
                coords: &coords_d,
                params: &params_d,
                local: Some(Dual::seeded(r, 0)),
            },
        )
        .or_else(|_| f(r).map(Dual::constant))?;
        if fr.v == 0.0 {
            return Ok(r);
        }
        if (fr.v > 0.0) == rising {
            hi = r;
        } else {
            lo = r;
        }
        let slope = fr.d[0];
        let mut next = if slope != 0.0 { r - fr.v / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let tol = 1e-15 * (1.0 + r.abs());
        if (next - r).abs() <= tol || hi - lo <= tol {
            return Ok(next);
        }
        r = next;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_midpoint() {
        assert_eq!(smoothstep(-1.0), (0.0, 0.0));
        assert_eq!(smoothstep(2.0), (1.0, 0.0));
        let (v, d) = smoothstep(0.5);
        assert!((v - 0.5).abs() < 1e-15);
        assert!((d - 1.875).abs() < 1e-15);
    }

    #[test]
    fn real_branch_for_odd_denominators() {
        assert!((real_pow(-8.0, Rational::new(1, 3).unwrap()) + 2.0).abs() < 1e-15);
        assert!((real_pow(-32.0, Rational::new(2, 5).unwrap()) - 4.0).abs() < 1e-12);
        assert!((real_pow(-8.0, Rational::new(-1, 3).unwrap()) + 0.5).abs() < 1e-15);
    }
}
