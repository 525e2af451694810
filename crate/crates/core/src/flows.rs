//! Hamiltonian flows, leaf-dimension maps and leaf reachability.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::Grid;
use crate::clean::LeafAtlas;
use crate::error::{Error, Result};
use crate::exprcore::{Hamiltonian, ScalarField};
use crate::maps::{numeric_jacobian, DiffMap};
use crate::poisson::PoissonStructure;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const ADAPTIVE_TOL: f64 = 1e-9;
/// Central-difference step for flow Jacobians.
pub const FLOW_JACOBIAN_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    FixedRk4,
    /// Step doubling with the given local error tolerance.
    Adaptive { tol: f64 },
}

#[derive(Clone)]
pub struct FlowSpec {
    pub hamiltonian: Arc<dyn Hamiltonian>,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub method: Method,
}

impl fmt::Debug for FlowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSpec")
            .field("hamiltonian", &self.hamiltonian)
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("step", &self.step)
            .field("method", &self.method)
            .finish()
    }
}

impl FlowSpec {
    /// Fixed-step RK4 over `[0, t]` with the default step.
    pub fn new(hamiltonian: Arc<dyn Hamiltonian>, t: f64) -> FlowSpec {
        FlowSpec {
            hamiltonian,
            t0: 0.0,
            t1: t,
            step: DEFAULT_STEP,
            method: Method::FixedRk4,
        }
    }

    pub fn with_step(mut self, step: f64) -> FlowSpec {
        self.step = step;
        self
    }

    pub fn adaptive(mut self) -> FlowSpec {
        self.method = Method::Adaptive { tol: ADAPTIVE_TOL };
        self
    }

    /// A negative span integrates backwards in time.
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidFlow(format!("step must be positive, got {}", self.step)));
        }
        if !(self.t0.is_finite() && self.t1.is_finite()) {
            return Err(Error::InvalidFlow("non-finite time span".into()));
        }
        if let Method::Adaptive { tol } = self.method {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::InvalidFlow("adaptive tolerance must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Vec<f64>> {
        self.points.last()
    }

    fn push(&mut self, t: f64, p: &[f64]) {
        self.times.push(t);
        self.points.push(p.to_vec());
    }
}

fn axpy(p: &[f64], h: f64, k: &DVector<f64>) -> Vec<f64> {
    p.iter().zip(k.iter()).map(|(x, v)| x + h * v).collect()
}

struct Stepper<'a> {
    pi: &'a PoissonStructure,
    h: &'a dyn Hamiltonian,
    evals: usize,
}

impl Stepper<'_> {
    fn field(&mut self, t: f64, p: &[f64]) -> Result<DVector<f64>> {
        self.evals += 1;
        self.pi.hamiltonian_vf_at(self.h, t, p)
    }

    fn rk4(&mut self, t: f64, p: &[f64], h: f64) -> Result<Vec<f64>> {
        let k1 = self.field(t, p)?;
        let k2 = self.field(t + 0.5 * h, &axpy(p, 0.5 * h, &k1))?;
        let k3 = self.field(t + 0.5 * h, &axpy(p, 0.5 * h, &k2))?;
        let k4 = self.field(t + h, &axpy(p, h, &k3))?;
        let k = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        Ok(axpy(p, h, &k))
    }
}

/// Integrates `dp/dt = X_H(t, p)`; `record` controls whether intermediate samples are kept.
fn run(pi: &PoissonStructure, spec: &FlowSpec, p0: &[f64], record: bool) -> Result<(Trajectory, usize)> {
    spec.validate()?;
    pi.chart.check(p0)?;
    let mut st = Stepper {
        pi,
        h: spec.hamiltonian.as_ref(),
        evals: 0,
    };
    let mut traj = Trajectory::default();
    traj.push(spec.t0, p0);
    let span = spec.t1 - spec.t0;
    if span == 0.0 {
        return Ok((traj, 0));
    }
    let dir = span.signum();
    let mut t = spec.t0;
    let mut p = p0.to_vec();

    let left = |traj: Trajectory| Error::LeftDomain {
        trajectory: Box::new(traj),
    };
    let guard = |r: Result<Vec<f64>>, traj: &Trajectory| match r {
        Err(Error::OutsideDomain { .. }) => Err(left(traj.clone())),
        other => other,
    };

    match spec.method {
        Method::FixedRk4 => {
            let n = (span.abs() / spec.step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for i in 0..n {
                let next = guard(st.rk4(t, &p, h), &traj)?;
                t = if i + 1 == n { spec.t1 } else { spec.t0 + (i + 1) as f64 * h };
                if !pi.chart.contains(&next) {
                    traj.push(t, &next);
                    return Err(left(traj));
                }
                p = next;
                if record || i + 1 == n {
                    traj.push(t, &p);
                }
            }
        }
        Method::Adaptive { tol } => {
            let mut h = dir * spec.step.min(span.abs());
            let mut rejects = 0;
            while (spec.t1 - t) * dir > 0.0 {
                if (t + h - spec.t1) * dir > 0.0 {
                    h = spec.t1 - t;
                }
                let full = guard(st.rk4(t, &p, h), &traj)?;
                let half = guard(st.rk4(t, &p, 0.5 * h), &traj)?;
                let two = guard(st.rk4(t + 0.5 * h, &half, 0.5 * h), &traj)?;
                let err = full
                    .iter()
                    .zip(&two)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    / 15.0;
                let scale = 1.0 + p.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                if err <= tol * scale {
                    let next: Vec<f64> = two.iter().zip(&full).map(|(b, a)| b + (b - a) / 15.0).collect();
                    t += h;
                    if (t - spec.t1) * dir > 0.0 || (spec.t1 - t).abs() < 1e-14 * spec.t1.abs().max(1.0) {
                        t = spec.t1;
                    }
                    if !pi.chart.contains(&next) {
                        traj.push(t, &next);
                        return Err(left(traj));
                    }
                    p = next;
                    if record || t == spec.t1 {
                        traj.push(t, &p);
                    }
                    rejects = 0;
                }
                else {
                    rejects += 1;
                    if rejects > 60 {
                        return Err(Error::InvalidFlow("adaptive step size underflow".into()));
                    }
                }
                let ratio = if err > 0.0 { 0.9 * (tol * scale / err).powf(0.2) } else { 4.0 };
                h *= ratio.clamp(0.1, 4.0);
            }
        }
    }
    Ok((traj, st.evals))
}

pub fn integrate(pi: &PoissonStructure, spec: &FlowSpec, p0: &[f64]) -> Result<Trajectory> {
    Ok(run(pi, spec, p0, true)?.0)
}

/// End point of the flow only.
pub fn flow_point(pi: &PoissonStructure, spec: &FlowSpec, p0: &[f64]) -> Result<Vec<f64>> {
    let (traj, _) = run(pi, spec, p0, false)?;
    Ok(traj.points.last().cloned().unwrap_or_else(|| p0.to_vec()))
}

/// Sequential application of the flows in `specs`.
pub fn compose_flows(pi: &PoissonStructure, specs: &[FlowSpec], p0: &[f64]) -> Result<Vec<f64>> {
    let mut p = p0.to_vec();
    for s in specs {
        p = flow_point(pi, s, &p)?;
    }
    Ok(p)
}

/// The time-`t` flow as a map, differentiated by central differences.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub pi: PoissonStructure,
    pub spec: FlowSpec,
}

impl DiffMap for FlowMap {
    fn dim_in(&self) -> usize {
        self.pi.dim()
    }
    fn dim_out(&self) -> usize {
        self.pi.dim()
    }
    fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        flow_point(&self.pi, &self.spec, p)
    }
    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        numeric_jacobian(self, p, FLOW_JACOBIAN_STEP)
    }
}

/// Rank of the bivector at every grid node.
pub fn leaf_dim_map(pi: &PoissonStructure, grid: &Grid, tol_rank: f64) -> Result<Vec<usize>> {
    crate::par::install(|| {
        (0..grid.len())
            .into_par_iter()
            .map(|i| pi.rank_at(&grid.node(i), tol_rank))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Same,
    Different,
    Inconclusive,
}

/// Distance at which the greedy search declares `q` reached.
pub const REACH_TOL: f64 = 1e-4;
pub const DEFAULT_BUDGET: usize = 10_000;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Same-leaf test: atlas invariants and ranks first, then a greedy search
/// along coordinate Hamiltonian flows with step halving.
pub fn same_leaf_probe(pi: &PoissonStructure, atlas: &LeafAtlas, p: &[f64], q: &[f64], budget: usize, tol_rank: f64) -> Result<Verdict> {
    if pi.chart.check(p).is_err() || pi.chart.check(q).is_err() {
        return Ok(Verdict::Inconclusive);
    }
    if dist(p, q) <= REACH_TOL {
        return Ok(Verdict::Same);
    }
    let (lp, lq) = match (atlas.label(p), atlas.label(q)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Ok(Verdict::Inconclusive),
    };
    if let (Some(a), Some(b)) = (&lp, &lq) {
        if !a.same_leaf(b) {
            return Ok(Verdict::Different);
        }
    }
    match (pi.rank_at(p, tol_rank), pi.rank_at(q, tol_rank)) {
        (Ok(a), Ok(b)) if a != b => return Ok(Verdict::Different),
        (Ok(_), Ok(_)) => {}
        _ => return Ok(Verdict::Inconclusive),
    }

    let names = pi.chart.names();
    let coords: Vec<Arc<dyn Hamiltonian>> = (0..pi.dim())
        .map(|i| Arc::new(ScalarField::coordinate(i, &names)) as Arc<dyn Hamiltonian>)
        .collect();
    let mut c = p.to_vec();
    let mut used = 0usize;
    while used < budget {
        let d0 = dist(&c, q);
        if d0 <= REACH_TOL {
            return Ok(Verdict::Same);
        }
        // Rank generators by how well their field points at q.
        let mut cands: Vec<(f64, usize, f64)> = Vec::new();
        for (i, h) in coords.iter().enumerate() {
            used += 1;
            let x = pi.hamiltonian_vf_at(h.as_ref(), 0.0, &c)?;
            let nx = x.norm_squared();
            if nx <= 1e-24 {
                continue;
            }
            let dot: f64 = x.iter().zip(q.iter().zip(&c)).map(|(v, (a, b))| v * (a - b)).sum();
            cands.push((dot.abs() / nx.sqrt(), i, dot / nx));
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut moved = false;
        'cands: for &(score, i, tau0) in &cands {
            if score <= 0.0 {
                break;
            }
            let mut tau = tau0;
            for _ in 0..30 {
                let steps = ((tau.abs() / 0.05).ceil() as usize).clamp(4, 64);
                let spec = FlowSpec::new(coords[i].clone(), tau).with_step(tau.abs() / steps as f64);
                used += 4 * steps;
                if let Ok(next) = flow_point(pi, &spec, &c) {
                    if dist(&next, q) < d0 * (1.0 - 1e-12) {
                        c = next;
                        moved = true;
                        break 'cands;
                    }
                }
                if used >= budget {
                    break 'cands;
                }
                tau *= 0.5;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(if dist(&c, q) <= REACH_TOL {
        Verdict::Same
    } else {
        Verdict::Inconclusive
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::clean::{Membership, Region};
    use std::f64::consts::FRAC_PI_2;

    fn plane() -> PoissonStructure {
        let c = Chart::new(&[("x", -3.0, 3.0), ("y", -3.0, 3.0)]).unwrap();
        PoissonStructure::parse(c, &[("x", "y", "1")]).unwrap()
    }

    fn r3() -> PoissonStructure {
        let c = Chart::new(&[("x", -10.0, 10.0), ("y", -10.0, 10.0), ("z", -10.0, 10.0)]).unwrap();
        PoissonStructure::parse(c, &[("x", "y", "1")]).unwrap()
    }

    fn ham(pi: &PoissonStructure, text: &str) -> Arc<dyn Hamiltonian> {
        Arc::new(ScalarField::parse(text, &pi.chart.names(), &[]).unwrap())
    }

    #[test]
    fn rotation_quarter_turn() {
        let pi = plane();
        let spec = FlowSpec::new(ham(&pi, "(x^2 + y^2)/2"), FRAC_PI_2);
        let end = flow_point(&pi, &spec, &[1.0, 0.0]).unwrap();
        assert!(dist(&end, &[0.0, 1.0]) < 1e-6);
        let adaptive = flow_point(&pi, &spec.clone().adaptive(), &[1.0, 0.0]).unwrap();
        assert!(dist(&adaptive, &[0.0, 1.0]) < 1e-7);
    }

    #[test]
    fn casimir_flow_is_trivial() {
        let pi = r3();
        let p = [0.3, 0.2, 0.1];
        assert_eq!(flow_point(&pi, &FlowSpec::new(ham(&pi, "z"), 1.0), &p).unwrap(), p.to_vec());
    }

    #[test]
    fn compositions() {
        let pi = plane();
        assert_eq!(compose_flows(&pi, &[], &[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        let rot = FlowSpec::new(ham(&pi, "(x^2 + y^2)/2"), FRAC_PI_2);
        let end = compose_flows(&pi, &[rot.clone(), rot], &[1.0, 0.0]).unwrap();
        assert!(dist(&end, &[-1.0, 0.0]) < 1e-6);
        let end = compose_flows(&pi, &[FlowSpec::new(ham(&pi, "x"), 1.0), FlowSpec::new(ham(&pi, "y"), 1.0)], &[0.0, 0.0]).unwrap();
        assert!(dist(&end, &[-1.0, 1.0]) < 1e-12);
    }

    #[test]
    fn leaving_the_box_keeps_partial_trajectory() {
        let pi = plane();
        match integrate(&pi, &FlowSpec::new(ham(&pi, "x"), 10.0), &[0.0, 0.0]) {
            Err(Error::LeftDomain { trajectory }) => {
                assert!(trajectory.points.len() > 100);
                assert!(trajectory.times.windows(2).all(|w| w[0] < w[1]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let pi = plane();
        let spec = FlowSpec::new(ham(&pi, "x"), 1.0).with_step(0.0);
        assert!(matches!(integrate(&pi, &spec, &[0.0, 0.0]), Err(Error::InvalidFlow(_))));
    }

    #[test]
    fn probe_verdicts() {
        let pi = r3();
        let names = pi.chart.names();
        let atlas = LeafAtlas::new(vec![Region {
            name: "all".into(),
            membership: Membership::Always,
            rank: Some(2),
            invariants: vec![ScalarField::coordinate(2, &names)],
        }]);
        let p = [1.0, 0.0, 0.0];
        assert_eq!(same_leaf_probe(&pi, &atlas, &p, &p, DEFAULT_BUDGET, 1e-8).unwrap(), Verdict::Same);
        assert_eq!(same_leaf_probe(&pi, &atlas, &p, &[0.0, 0.0, 1.0], DEFAULT_BUDGET, 1e-8).unwrap(), Verdict::Different);
        assert_eq!(same_leaf_probe(&pi, &atlas, &p, &[0.0, 5.0, 0.0], DEFAULT_BUDGET, 1e-8).unwrap(), Verdict::Same);
    }

    #[test]
    fn leaf_dims_of_the_plane() {
        let pi = plane();
        let g = pi.chart.grid(5);
        assert!(leaf_dim_map(&pi, &g, 1e-8).unwrap().iter().all(|&r| r == 2));
    }
}
