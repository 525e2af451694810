//! Poisson bivectors on a chart.
//!
//! Conventions: `sharp(a)^j = sum_i a_i P^{ij}`, so `X_H = sharp(dH)`, and the
//! leaf form satisfies `w(sharp a, sharp b) = -P(a, b)`. For `P = dx^dy`
//! this gives `X_x = d/dy`, `X_y = -d/dx` and the leaf form `dy^dx`.

use nalgebra::{DMatrix, DVector};

use crate::chart::{Chart, Grid};
use crate::error::{Error, Result};
use crate::exprcore::{Covector, Function, Hamiltonian, ScalarField};
use crate::linalg;
use crate::maps::DiffMap;

pub type TangentVector = DVector<f64>;

/// Default relative rank tolerance.
pub const TOL_RANK: f64 = 1e-8;

/// Step of the central differences used on the inner bracket of the Jacobiator.
pub const JACOBI_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonStructure {
    pub chart: Chart,
    /// Upper-triangular entries `(i, j, P^{ij})` with `i < j`, sorted.
    upper: Vec<(usize, usize, ScalarField)>,
}

impl PoissonStructure {
    /// Entries with `i > j` are stored as the negated `(j, i)` entry.
    pub fn new(chart: Chart, entries: Vec<(usize, usize, ScalarField)>) -> Result<PoissonStructure> {
        let n = chart.dim();
        let mut upper: Vec<(usize, usize, ScalarField)> = Vec::new();
        for (i, j, f) in entries {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidChart(format!("bad bivector index ({i}, {j})")));
            }
            if f.dim() != n || !f.params().is_empty() {
                return Err(Error::InvalidChart(format!(
                    "entry ({i}, {j}) must be a parameterless field over the chart"
                )));
            }
            let (a, b, f) = if i < j {
                (i, j, f)
            } else {
                let neg = crate::exprcore::Expr::Neg(Box::new(f.ast().clone()));
                (j, i, ScalarField::from_expr(neg, &chart.names(), &[]))
            };
            if upper.iter().any(|(x, y, _)| (*x, *y) == (a, b)) {
                return Err(Error::InvalidChart(format!("entry ({a}, {b}) given twice")));
            }
            upper.push((a, b, f));
        }
        upper.sort_by_key(|(i, j, _)| (*i, *j));
        Ok(PoissonStructure { chart, upper })
    }

    /// Builds from `(coord, coord, expression)` triples.
    pub fn parse(chart: Chart, entries: &[(&str, &str, &str)]) -> Result<PoissonStructure> {
        let names = chart.names();
        let mut out = Vec::new();
        for (a, b, text) in entries {
            let i = chart
                .index_of(a)
                .ok_or_else(|| Error::InvalidChart(format!("unknown coordinate `{a}`")))?;
            let j = chart
                .index_of(b)
                .ok_or_else(|| Error::InvalidChart(format!("unknown coordinate `{b}`")))?;
            out.push((i, j, ScalarField::parse(text, &names, &[])?));
        }
        PoissonStructure::new(chart, out)
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn entries(&self) -> &[(usize, usize, ScalarField)] {
        &self.upper
    }

    pub fn matrix_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.chart.check(p)?;
        self.matrix_unchecked(p)
    }

    /// Evaluation without the domain check, for stencils straddling the boundary.
    pub(crate) fn matrix_unchecked(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, f) in &self.upper {
            let v = f.eval(p, &[])?;
            m[(*i, *j)] = v;
            m[(*j, *i)] = -v;
        }
        Ok(m)
    }

    pub fn sharp(&self, p: &[f64], alpha: &Covector) -> Result<TangentVector> {
        if alpha.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: alpha.len(),
            });
        }
        Ok(self.matrix_at(p)?.tr_mul(alpha))
    }

    /// `sum_{i<j} P^{ij} (a_i b_j - a_j b_i)`: exactly antisymmetric in `a, b`.
    fn contract(&self, m: &DMatrix<f64>, a: &Covector, b: &Covector) -> f64 {
        self.upper
            .iter()
            .map(|(i, j, _)| m[(*i, *j)] * (a[*i] * b[*j] - a[*j] * b[*i]))
            .sum()
    }

    /// `P(a, b)` at `p`.
    pub fn pair(&self, p: &[f64], a: &Covector, b: &Covector) -> Result<f64> {
        let m = self.matrix_at(p)?;
        Ok(self.contract(&m, a, b))
    }

    pub fn bracket(&self, f: &dyn Function, g: &dyn Function, p: &[f64]) -> Result<f64> {
        let m = self.matrix_at(p)?;
        Ok(self.contract(&m, &f.gradient(p)?, &g.gradient(p)?))
    }

    pub fn hamiltonian_vf(&self, h: &dyn Function, p: &[f64]) -> Result<TangentVector> {
        self.sharp(p, &h.gradient(p)?)
    }

    pub fn hamiltonian_vf_at(&self, h: &dyn Hamiltonian, t: f64, p: &[f64]) -> Result<TangentVector> {
        self.sharp(p, &h.gradient_at(t, p)?)
    }

    fn bracket_unchecked(&self, f: &dyn Function, g: &dyn Function, p: &[f64]) -> Result<f64> {
        let m = self.matrix_unchecked(p)?;
        Ok(self.contract(&m, &f.gradient(p)?, &g.gradient(p)?))
    }

    /// Gradient of `{g, h}` by central differences.
    fn inner_gradient(&self, g: &dyn Function, h: &dyn Function, p: &[f64]) -> Result<Covector> {
        let n = p.len();
        let mut out = DVector::zeros(n);
        let mut q = p.to_vec();
        for k in 0..n {
            q[k] = p[k] + JACOBI_STEP;
            let plus = self.bracket_unchecked(g, h, &q)?;
            q[k] = p[k] - JACOBI_STEP;
            let minus = self.bracket_unchecked(g, h, &q)?;
            q[k] = p[k];
            out[k] = (plus - minus) / (2.0 * JACOBI_STEP);
        }
        Ok(out)
    }

    /// `{f,{g,h}} + {g,{h,f}} + {h,{f,g}}` with differentiated inner brackets.
    pub fn jacobiator(&self, f: &dyn Function, g: &dyn Function, h: &dyn Function, p: &[f64]) -> Result<f64> {
        let m = self.matrix_at(p)?;
        let mut total = 0.0;
        for (a, b, c) in [(f, g, h), (g, h, f), (h, f, g)] {
            let inner = self.inner_gradient(b, c, p)?;
            total += self.contract(&m, &a.gradient(p)?, &inner);
        }
        Ok(total)
    }

    /// Jacobiator on the coordinate functions `x_i, x_j, x_k`.
    pub fn coordinate_jacobiator(&self, i: usize, j: usize, k: usize, p: &[f64]) -> Result<f64> {
        let names = self.chart.names();
        let c = |a| ScalarField::coordinate(a, &names);
        self.jacobiator(&c(i), &c(j), &c(k), p)
    }

    /// Largest coordinate Jacobiator over all triples at `p`.
    pub fn max_coordinate_jacobiator(&self, p: &[f64]) -> Result<f64> {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    worst = worst.max(self.coordinate_jacobiator(i, j, k, p)?.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Numerical rank; an odd count means the tolerance split a pair of
    /// singular values and is reported as an error.
    pub fn rank_at(&self, p: &[f64], tol_rank: f64) -> Result<usize> {
        let m = self.matrix_at(p)?;
        let sv = linalg::singular_values(&m);
        let r = linalg::rank_of(&sv, tol_rank);
        if r % 2 == 1 {
            return Err(Error::OddRank {
                rank: r,
                point: p.to_vec(),
                singular_values: sv,
            });
        }
        Ok(r)
    }

    /// Preimage `a` with `sharp(a) = u`, or `NotInLeaf`.
    pub fn sharp_preimage(&self, m: &DMatrix<f64>, u: &TangentVector) -> Result<Covector> {
        let mt = m.transpose();
        let a = linalg::pinv_solve(&mt, u, TOL_RANK);
        let resid = (&mt * &a - u).norm();
        let scale = u.norm();
        if resid > 1e-8 * scale.max(f64::MIN_POSITIVE) && resid > 0.0 {
            return Err(Error::NotInLeaf {
                residual: resid / scale.max(f64::MIN_POSITIVE),
            });
        }
        Ok(a)
    }

    /// `w_L(u, v)` for `u, v` tangent to the leaf through `p`.
    pub fn leafwise_form(&self, p: &[f64], u: &TangentVector, v: &TangentVector) -> Result<f64> {
        let m = self.matrix_at(p)?;
        let a = self.sharp_preimage(&m, u)?;
        let b = self.sharp_preimage(&m, v)?;
        Ok(-self.contract(&m, &a, &b))
    }

    /// Gram matrix of the leaf form on the columns of `basis`.
    pub fn leafwise_gram(&self, p: &[f64], basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = self.matrix_at(p)?;
        let k = basis.ncols();
        let pre: Vec<Covector> = (0..k)
            .map(|c| self.sharp_preimage(&m, &basis.column(c).into_owned()))
            .collect::<Result<_>>()?;
        let mut g = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                g[(a, b)] = -self.contract(&m, &pre[a], &pre[b]);
            }
        }
        Ok(g)
    }

    /// `max |J P_src J^T - P_dst(phi(p))|` for the Jacobian `J` of `phi` at `p`.
    pub fn poisson_map_check(&self, dst: &PoissonStructure, phi: &dyn DiffMap, p: &[f64]) -> Result<f64> {
        let j = phi.jacobian(p)?;
        let q = phi.apply(p)?;
        poisson_map_residual(self, dst, &j, p, &q)
    }
}

/// Residual of the pushforward test for a given Jacobian.
pub fn poisson_map_residual(
    src: &PoissonStructure,
    dst: &PoissonStructure,
    j: &DMatrix<f64>,
    p: &[f64],
    q: &[f64],
) -> Result<f64> {
    let push = j * src.matrix_at(p)? * j.transpose();
    let target = dst.matrix_at(q)?;
    Ok((push - target).amax())
}

/// Result of the lower-semicontinuity desk check.
#[derive(Debug, Clone, PartialEq)]
pub struct SemicontinuityReport {
    pub nodes: usize,
    pub violations: Vec<Vec<f64>>,
}

/// The eight sign patterns on the first three axes (padded with +1), normalized.
pub fn probe_directions(n: usize) -> Vec<Vec<f64>> {
    (0..8u32)
        .map(|mask| {
            let mut d: Vec<f64> = (0..n)
                .map(|i| if i < 3 && mask & (1 << i) != 0 { -1.0 } else { 1.0 })
                .collect();
            // Tilt each pattern off the coordinate diagonals.
            for (i, x) in d.iter_mut().enumerate() {
                *x *= 1.0 + 0.1 * (i as f64 + mask as f64 * 0.37).sin();
            }
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            d.iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// For each node `p` and direction `d`, the ranks at `p + 2^-k r0 d`, `k = 0..=10`,
/// must satisfy `rank >= rank(p)` for all `k` past some index.
pub fn lower_semicontinuity_check(pi: &PoissonStructure, grid: &Grid, r0: f64, tol_rank: f64) -> Result<SemicontinuityReport> {
    use rayon::prelude::*;
    let dirs = probe_directions(pi.dim());
    let nodes = grid.nodes();
    let bad: Vec<Option<Vec<f64>>> = crate::par::install(|| {
        nodes
            .par_iter()
            .map(|p| -> Result<Option<Vec<f64>>> {
                let base = pi.rank_at(p, tol_rank)?;
                for d in &dirs {
                    // With finitely many radii the tail condition reduces to the
                    // smallest radius satisfying it.
                    let r = r0 * 0.5_f64.powi(10);
                    let q: Vec<f64> = p.iter().zip(d).map(|(x, dx)| x + r * dx).collect();
                    if pi.rank_at(&q, tol_rank)? < base {
                        return Ok(Some(p.clone()));
                    }
                }
                Ok(None)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SemicontinuityReport {
        nodes: nodes.len(),
        violations: bad.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> PoissonStructure {
        let c = Chart::new(&[("x", -2.0, 2.0), ("y", -2.0, 2.0)]).unwrap();
        PoissonStructure::parse(c, &[("x", "y", "1")]).unwrap()
    }

    fn cube(entries: &[(&str, &str, &str)]) -> PoissonStructure {
        let c = Chart::new(&[("x", -2.0, 2.0), ("y", -2.0, 2.0), ("z", -2.0, 2.0)]).unwrap();
        PoissonStructure::parse(c, entries).unwrap()
    }

    fn field(pi: &PoissonStructure, text: &str) -> ScalarField {
        ScalarField::parse(text, &pi.chart.names(), &[]).unwrap()
    }

    fn covec(v: &[f64]) -> Covector {
        DVector::from_column_slice(v)
    }

    #[test]
    fn matrices() {
        let m = plane().matrix_at(&[0.3, 0.1]).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let q = cube(&[("x", "y", "x^2 + y^2")]).matrix_at(&[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(q, DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        let swapped = cube(&[("y", "x", "1")]).matrix_at(&[0.0; 3]).unwrap();
        assert_eq!(swapped[(0, 1)], -1.0);
    }

    #[test]
    fn sharp_examples() {
        let pi = plane();
        let p = [0.0, 0.0];
        assert_eq!(pi.sharp(&p, &covec(&[1.0, 0.0])).unwrap().as_slice(), &[0.0, 1.0]);
        assert_eq!(pi.sharp(&p, &covec(&[0.0, 1.0])).unwrap().as_slice(), &[-1.0, 0.0]);
        let r3 = cube(&[("x", "y", "1")]);
        let x = 0.7;
        let df = field(&r3, "z - x^3").grad(&[x, 0.0, x * x * x], &[]).unwrap();
        let s = r3.sharp(&[x, 0.0, x * x * x], &df).unwrap();
        assert_eq!(s.as_slice(), &[0.0, -3.0 * x * x, 0.0]);
        assert!(matches!(pi.sharp(&[3.0, 0.0], &covec(&[1.0, 0.0])), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn bracket_examples() {
        let pi = plane();
        assert_eq!(pi.bracket(&field(&pi, "x"), &field(&pi, "y"), &[0.5, 0.5]).unwrap(), 1.0);
        let r3 = cube(&[("x", "y", "1")]);
        let b = r3.bracket(&field(&r3, "z - x^3"), &field(&r3, "y"), &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(b, -3.0);
        assert_eq!(r3.bracket(&field(&r3, "z"), &field(&r3, "x"), &[1.0, 0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn hamiltonian_fields() {
        let pi = plane();
        let h = field(&pi, "(x^2 + y^2)/2");
        assert_eq!(pi.hamiltonian_vf(&h, &[1.0, 0.0]).unwrap().as_slice(), &[0.0, 1.0]);
        let r3 = cube(&[("x", "y", "1")]);
        let hn = ScalarField::parse("(z - z*(z^2 + 1/n^3)^(-1/3))*y", &["x", "y", "z"], &["n"])
            .unwrap()
            .bind(&[("n", 10.0)])
            .unwrap();
        let p = [0.2, -0.4, 0.5];
        let x = r3.hamiltonian_vf(&hn, &p).unwrap();
        let h = 0.5 * (0.25_f64 + 1e-3).powf(-1.0 / 3.0);
        assert!((x[0] - (h - 0.5)).abs() < 1e-14);
        assert_eq!((x[1], x[2]), (0.0, 0.0));
        assert_eq!(r3.hamiltonian_vf(&field(&r3, "z"), &p).unwrap().norm(), 0.0);
    }

    #[test]
    fn jacobiator_oracles() {
        let p = [0.4, -0.3, 0.2];
        let q = cube(&[("x", "y", "x^2 + y^2")]);
        assert!(q.coordinate_jacobiator(0, 1, 2, &p).unwrap().abs() < 1e-8);
        // dx^dy + x dy^du + u dx^du: hand computation gives J(x, y, u) = -x.
        let bad = cube(&[("x", "y", "1"), ("y", "z", "x"), ("x", "z", "z")]);
        let j = bad.coordinate_jacobiator(0, 1, 2, &p).unwrap();
        assert!((j + 0.4).abs() < 1e-8, "{j}");
    }

    #[test]
    fn rank_examples() {
        assert_eq!(plane().rank_at(&[0.0, 0.0], TOL_RANK).unwrap(), 2);
        let q = cube(&[("x", "y", "x^2 + y^2")]);
        assert_eq!(q.rank_at(&[0.0, 0.0, 1.0], TOL_RANK).unwrap(), 0);
        assert_eq!(q.rank_at(&[0.0, 0.1, 1.0], TOL_RANK).unwrap(), 2);
    }

    #[test]
    fn leaf_form_sign_and_linearity() {
        let pi = plane();
        let p = [0.0, 0.0];
        let u = covec(&[0.0, 1.0]);
        let v = covec(&[-1.0, 0.0]);
        assert!((pi.leafwise_form(&p, &u, &v).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pi.leafwise_form(&p, &u, &u).unwrap(), 0.0);
        let w = pi.leafwise_form(&p, &(3.0 * &u), &v).unwrap();
        assert!((w + 3.0).abs() < 1e-14);
        let r3 = cube(&[("x", "y", "1")]);
        assert!(matches!(
            r3.leafwise_form(&[0.0; 3], &covec(&[0.0, 0.0, 1.0]), &covec(&[1.0, 0.0, 0.0])),
            Err(Error::NotInLeaf { .. })
        ));
    }

    #[test]
    fn poisson_map_examples() {
        let pi = plane();
        let id = crate::maps::SmoothMap::identity(&pi.chart);
        assert_eq!(pi.poisson_map_check(&pi, &id, &[0.1, 0.2]).unwrap(), 0.0);
        let wide = Chart::new(&[("x", -5.0, 5.0), ("y", -5.0, 5.0)]).unwrap();
        let dst = PoissonStructure::parse(wide, &[("x", "y", "1")]).unwrap();
        let scale = crate::maps::SmoothMap::parse(&["2*x", "y"], &pi.chart).unwrap();
        assert_eq!(pi.poisson_map_check(&dst, &scale, &[0.1, 0.2]).unwrap(), 1.0);
    }
}
