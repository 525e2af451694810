//! Regular level sets, coisotropy and the characteristic foliation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::exprcore::{Function, ScalarField};
use crate::flows::Trajectory;
use crate::linalg;
use crate::poisson::{PoissonStructure, TangentVector, TOL_RANK};

pub const PROJECT_TOL: f64 = 1e-10;
pub const PROJECT_ITERS: usize = 50;
pub const ON_C_TOL: f64 = 1e-8;
pub const COISO_TOL: f64 = 1e-8;
/// RK4 steps between re-projections while tracing.
pub const REPROJECT_EVERY: usize = 10;

/// `{F_1 = ... = F_k = 0}` inside a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Submanifold {
    pub name: String,
    pub chart: Chart,
    pub defining: Vec<ScalarField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoisoWitness {
    pub coisotropic: bool,
    pub pair: (usize, usize),
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicData {
    pub basepoint: Vec<f64>,
    pub spanning: Vec<TangentVector>,
    pub dim: usize,
}

impl CharacteristicData {
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.basepoint.len();
        let mut m = DMatrix::zeros(n, self.spanning.len());
        for (i, v) in self.spanning.iter().enumerate() {
            m.set_column(i, v);
        }
        m
    }
}

impl Submanifold {
    /// Builds the level set and checks regularity at projected probe points.
    pub fn new(name: &str, chart: Chart, defining: Vec<ScalarField>) -> Result<Submanifold> {
        let c = Submanifold::unchecked(name, chart, defining)?;
        c.validate_regular(4)?;
        Ok(c)
    }

    pub fn unchecked(name: &str, chart: Chart, defining: Vec<ScalarField>) -> Result<Submanifold> {
        if defining.is_empty() || defining.len() > chart.dim() {
            return Err(Error::Precondition(format!("`{name}` needs between 1 and n defining functions")));
        }
        for f in &defining {
            if f.dim() != chart.dim() || !f.params().is_empty() {
                return Err(Error::Dimension {
                    expected: chart.dim(),
                    got: f.dim(),
                });
            }
        }
        Ok(Submanifold {
            name: name.to_string(),
            chart,
            defining,
        })
    }

    pub fn parse(name: &str, chart: &Chart, texts: &[&str]) -> Result<Submanifold> {
        let names = chart.names();
        let fs = texts
            .iter()
            .map(|t| ScalarField::parse(t, &names, &[]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Submanifold::new(name, chart.clone(), fs)
    }

    pub fn codim(&self) -> usize {
        self.defining.len()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim() - self.codim()
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .defining
            .iter()
            .map(|f| f.eval(p, &[]))
            .collect::<std::result::Result<Vec<_>, _>>()?)
    }

    pub fn residual(&self, p: &[f64]) -> Result<f64> {
        Ok(self.values(p)?.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.codim(), p.len());
        for (i, f) in self.defining.iter().enumerate() {
            j.set_row(i, &f.grad(p, &[])?.transpose());
        }
        Ok(j)
    }

    fn validate_regular(&self, per_axis: usize) -> Result<()> {
        let grid = self.chart.grid(per_axis);
        for seed in grid.nodes() {
            let Ok(p) = self.project_to(&seed) else { continue };
            if !self.chart.contains(&p) {
                continue;
            }
            let Ok(j) = self.jacobian(&p) else { continue };
            let r = linalg::rank(&j, TOL_RANK);
            if r < self.codim() {
                return Err(Error::RankDeficient {
                    point: p,
                    rank: r,
                    codim: self.codim(),
                });
            }
        }
        Ok(())
    }

    /// Gauss-Newton with minimal-norm updates.
    pub fn project_to(&self, seed: &[f64]) -> Result<Vec<f64>> {
        let mut p = seed.to_vec();
        let mut history = Vec::new();
        for _ in 0..=PROJECT_ITERS {
            let f = DVector::from_vec(self.values(&p)?);
            let r = f.amax();
            history.push(r);
            if r <= PROJECT_TOL {
                return self.polish(p, r);
            }
            if history.len() > PROJECT_ITERS {
                break;
            }
            let j = self.jacobian(&p)?;
            let step = linalg::pinv_solve(&j, &f, 1e-12);
            if step.amax() == 0.0 || !step.iter().all(|v| v.is_finite()) {
                break;
            }
            for (x, s) in p.iter_mut().zip(step.iter()) {
                *x -= s;
            }
        }
        Err(Error::NoConvergence { residuals: history })
    }

    /// One more Newton step once converged, kept only if it lowers the residual.
    fn polish(&self, p: Vec<f64>, r: f64) -> Result<Vec<f64>> {
        if r == 0.0 {
            return Ok(p);
        }
        let f = DVector::from_vec(self.values(&p)?);
        let step = linalg::pinv_solve(&self.jacobian(&p)?, &f, 1e-12);
        let q: Vec<f64> = p.iter().zip(step.iter()).map(|(x, s)| x - s).collect();
        match self.residual(&q) {
            Ok(rq) if rq < r => Ok(q),
            _ => Ok(p),
        }
    }

    fn require_on(&self, p: &[f64]) -> Result<()> {
        let r = self.residual(p)?;
        if r > ON_C_TOL {
            return Err(Error::NotOnSubmanifold {
                point: p.to_vec(),
                residual: r,
            });
        }
        Ok(())
    }

    /// Orthonormal basis of `ker dF_p` as columns.
    pub fn tangent_basis(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.require_on(p)?;
        let j = self.jacobian(p)?;
        let sv = linalg::singular_values(&j);
        let r = linalg::rank_of(&sv, TOL_RANK);
        if r < self.codim() {
            return Err(Error::RankDeficient {
                point: p.to_vec(),
                rank: r,
                codim: self.codim(),
            });
        }
        Ok(linalg::null_space(&j, TOL_RANK))
    }

    /// Largest `|{F_a, F_b}(p)|` over pairs; hypersurfaces give exactly zero.
    pub fn is_coisotropic_at(&self, pi: &PoissonStructure, p: &[f64], tol: f64) -> Result<CoisoWitness> {
        self.require_on(p)?;
        let grads = self
            .defining
            .iter()
            .map(|f| f.grad(p, &[]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut best = CoisoWitness {
            coisotropic: true,
            pair: (0, 0),
            value: 0.0,
        };
        for a in 0..grads.len() {
            for b in a + 1..grads.len() {
                let v = pi.pair(p, &grads[a], &grads[b])?;
                if v.abs() > best.value.abs() {
                    best.pair = (a, b);
                    best.value = v;
                }
            }
        }
        best.value = best.value.abs();
        best.coisotropic = best.value <= tol;
        Ok(best)
    }

    /// Spanning vectors `sharp(dF_a)` and their numerical rank.
    pub fn characteristic_data(&self, pi: &PoissonStructure, p: &[f64], tol_rank: f64) -> Result<CharacteristicData> {
        self.require_on(p)?;
        let m = pi.matrix_at(p)?;
        let mut spanning = Vec::new();
        let mut gmax = 0.0_f64;
        for f in &self.defining {
            let g = f.grad(p, &[])?;
            gmax = gmax.max(g.norm());
            spanning.push(m.tr_mul(&g));
        }
        let data = CharacteristicData {
            basepoint: p.to_vec(),
            spanning,
            dim: 0,
        };
        let scale = linalg::singular_values(&m).first().copied().unwrap_or(0.0) * gmax;
        let dim = linalg::rank_abs(&data.matrix(), tol_rank * scale);
        Ok(CharacteristicData { dim, ..data })
    }

    /// Max `|{f, g}|` over probes, for `f, g` vanishing on the submanifold.
    pub fn vanishing_ideal_bracket_check(&self, pi: &PoissonStructure, f: &dyn Function, g: &dyn Function, probes: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0_f64;
        for p in probes {
            for h in [f, g] {
                let v = h.value(p)?;
                if v.abs() > 1e-9 {
                    return Err(Error::NotVanishing {
                        point: p.clone(),
                        value: v,
                    });
                }
            }
            worst = worst.max(pi.bracket(f, g, p)?.abs());
        }
        Ok(worst)
    }

    /// Follows `X_{F_1}`, then `X_{F_2}`, ... by arc length, re-projecting
    /// every few steps. Stationary points give a one-sample trace.
    pub fn trace_characteristic_leaf(&self, pi: &PoissonStructure, p: &[f64], arc_budget: f64) -> Result<Trajectory> {
        self.require_on(p)?;
        pi.chart.check(p)?;
        let mut traj = Trajectory {
            times: vec![0.0],
            points: vec![p.to_vec()],
        };
        let k = self.codim();
        let share = arc_budget / k as f64;
        let steps = 400usize;
        let ds = share / steps as f64;
        let mut q = p.to_vec();
        let mut s_total = 0.0;
        for f in &self.defining {
            let field = |x: &[f64]| -> Result<DVector<f64>> {
                let v = pi.hamiltonian_vf(f, x)?;
                let speed = v.norm();
                if speed <= 1e-14 {
                    Ok(DVector::zeros(x.len()))
                } else {
                    Ok(v / speed)
                }
            };
            let leave = |traj: &Trajectory| Error::LeftDomain {
                trajectory: Box::new(traj.clone()),
            };
            let wrap = |r: Result<DVector<f64>>, traj: &Trajectory| match r {
                Err(Error::OutsideDomain { .. }) => Err(leave(traj)),
                other => other,
            };
            for i in 0..steps {
                let k1 = wrap(field(&q), &traj)?;
                if k1.norm() == 0.0 {
                    break;
                }
                let at = |h: f64, k: &DVector<f64>| -> Vec<f64> { q.iter().zip(k.iter()).map(|(a, b)| a + h * b).collect() };
                let k2 = wrap(field(&at(0.5 * ds, &k1)), &traj)?;
                let k3 = wrap(field(&at(0.5 * ds, &k2)), &traj)?;
                let k4 = wrap(field(&at(ds, &k3)), &traj)?;
                let dir = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
                let mut next = at(ds, &dir);
                if (i + 1) % REPROJECT_EVERY == 0 {
                    next = self.project_to(&next)?;
                }
                if !pi.chart.contains(&next) {
                    return Err(leave(&traj));
                }
                q = next;
                s_total += ds;
                traj.times.push(s_total);
                traj.points.push(q.clone());
            }
        }
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r3() -> (Chart, PoissonStructure) {
        let c = Chart::new(&[("x", -2.0, 2.0), ("y", -2.0, 2.0), ("z", -8.0, 8.0)]).unwrap();
        let pi = PoissonStructure::parse(c.clone(), &[("x", "y", "1")]).unwrap();
        (c, pi)
    }

    #[test]
    fn projection() {
        let (c, _) = r3();
        let cubic = Submanifold::parse("C", &c, &["z - x^3"]).unwrap();
        assert_eq!(cubic.project_to(&[1.0, 0.0, 1.0]).unwrap(), vec![1.0, 0.0, 1.0]);
        let p = cubic.project_to(&[1.0, 0.0, 0.9]).unwrap();
        assert!((p[2] - p[0].powi(3)).abs() <= 1e-10);
        let flat = Submanifold::parse("F", &c, &["exp(-(x^2)) * 1e-30 + 1"]);
        // Constant-ish function: never vanishes; construction tolerates it, projection fails.
        let flat = flat.unwrap();
        assert!(matches!(flat.project_to(&[0.0, 0.0, 0.0]), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn tangent_bases() {
        let (c, _) = r3();
        let plane = Submanifold::parse("P", &c, &["x"]).unwrap();
        let b = plane.tangent_basis(&[0.0, 0.3, 0.1]).unwrap();
        assert_eq!(b.ncols(), 2);
        assert!(b.row(0).amax() < 1e-15);
        let cubic = Submanifold::parse("C", &c, &["z - x^3"]).unwrap();
        let b = cubic.tangent_basis(&[1.0, 0.0, 1.0]).unwrap();
        let normal = DVector::from_vec(vec![-3.0, 0.0, 1.0]);
        assert!((b.tr_mul(&normal)).amax() < 1e-14);
        let b0 = cubic.tangent_basis(&[0.0, 0.0, 0.0]).unwrap();
        assert!(b0.row(2).amax() < 1e-15);
    }

    #[test]
    fn coisotropy_examples() {
        let (c, pi) = r3();
        let cubic = Submanifold::parse("C", &c, &["z - x^3"]).unwrap();
        let w = cubic.is_coisotropic_at(&pi, &[0.5, 0.0, 0.125], COISO_TOL).unwrap();
        assert!(w.coisotropic && w.value == 0.0);
        let xz = Submanifold::parse("XZ", &c, &["x", "z"]).unwrap();
        assert!(xz.is_coisotropic_at(&pi, &[0.0, 0.7, 0.0], COISO_TOL).unwrap().coisotropic);
        let pc = Chart::new(&[("x", -1.0, 1.0), ("y", -1.0, 1.0)]).unwrap();
        let ppi = PoissonStructure::parse(pc.clone(), &[("x", "y", "1")]).unwrap();
        let pt = Submanifold::parse("O", &pc, &["x", "y"]).unwrap();
        let w = pt.is_coisotropic_at(&ppi, &[0.0, 0.0], COISO_TOL).unwrap();
        assert!(!w.coisotropic);
        assert_eq!(w.value, 1.0);
    }

    #[test]
    fn characteristic_dims() {
        let (c, pi) = r3();
        let cubic = Submanifold::parse("C", &c, &["z - x^3"]).unwrap();
        let d = cubic.characteristic_data(&pi, &[1.0, 0.0, 1.0], TOL_RANK).unwrap();
        assert_eq!(d.dim, 1);
        assert_eq!(d.spanning[0].as_slice(), &[0.0, -3.0, 0.0]);
        assert_eq!(cubic.characteristic_data(&pi, &[0.0, 0.4, 0.0], TOL_RANK).unwrap().dim, 0);
        let lin = Submanifold::parse("L", &c, &["z - x"]).unwrap();
        assert_eq!(lin.characteristic_data(&pi, &[0.3, 0.0, 0.3], TOL_RANK).unwrap().dim, 1);
    }

    #[test]
    fn traces() {
        let (c, pi) = r3();
        let lin = Submanifold::parse("L", &c, &["z - x"]).unwrap();
        let t = lin.trace_characteristic_leaf(&pi, &[0.0, 0.0, 0.0], 1.0).unwrap();
        let end = t.last().unwrap();
        assert!((end[1] + 1.0).abs() < 1e-9 && end[0].abs() < 1e-12);
        let cubic = Submanifold::parse("C", &c, &["z - x^3"]).unwrap();
        assert_eq!(cubic.trace_characteristic_leaf(&pi, &[0.0; 3], 1.0).unwrap().points.len(), 1);
        let t = cubic.trace_characteristic_leaf(&pi, &[1.0, 0.0, 1.0], 1.0).unwrap();
        for q in &t.points {
            assert!((q[0] - 1.0).abs() < 1e-9 && (q[2] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn vanishing_ideal() {
        let (c, pi) = r3();
        let lin = Submanifold::parse("L", &c, &["z - x"]).unwrap();
        let names = c.names();
        let f = ScalarField::parse("(z - x)*y", &names, &[]).unwrap();
        let g = ScalarField::parse("(z - x)*x", &names, &[]).unwrap();
        let probes = vec![vec![0.2, 0.3, 0.2], vec![-1.0, 1.5, -1.0]];
        assert!(lin.vanishing_ideal_bracket_check(&pi, &f, &g, &probes).unwrap() <= 1e-8);
        let x = ScalarField::parse("x", &names, &[]).unwrap();
        assert!(matches!(
            lin.vanishing_ideal_bracket_check(&pi, &x, &g, &probes),
            Err(Error::NotVanishing { .. })
        ));
    }
}
