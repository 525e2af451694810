//! C0-convergence experiments.
//!
//! Limits are evaluated in closed form and never differentiated; every
//! derivative-based check runs on the smooth members.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{Chart, Grid};
use crate::clean::LeafAtlas;
use crate::coiso::Submanifold;
use crate::error::{Error, Result};
use crate::exprcore::{Expr, Function, Hamiltonian, ScalarField, TimeDependent};
use crate::flows::{flow_point, FlowSpec};
use crate::linalg;
use crate::maps::{DiffMap, SmoothMap};
use crate::poisson::PoissonStructure;

/// Residual above which a member is rejected as non-Poisson.
pub const MEMBER_TOL: f64 = 1e-6;
/// Agreement of target leaf invariants.
pub const LEAF_TOL: f64 = 1e-6;
/// Largest admissible distance of an image point from its target.
pub const IMAGE_TOL: f64 = 1e-6;

pub const DEFAULT_INDICES: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

/// `sup_K |f - g|` over the given nodes.
pub fn c0_distance(f: &dyn DiffMap, g: &dyn DiffMap, nodes: &[Vec<f64>]) -> Result<f64> {
    let gaps: Vec<f64> = crate::par::install(|| {
        nodes
            .par_iter()
            .map(|p| {
                let a = f.apply(p)?;
                let b = g.apply(p)?;
                Ok(a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Binds whichever of `n` and `t` the field declares.
pub fn bind_nt(field: &ScalarField, n: f64, t: f64) -> Result<crate::exprcore::BoundField> {
    Ok(field.bind(&[("n", n), ("t", t)])?)
}

/// Smooth members indexed by `n` converging to a closed-form limit.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFamily {
    pub name: String,
    /// One component per target coordinate, with parameter `n`.
    pub members: Vec<ScalarField>,
    pub limit: SmoothMap,
    pub domain: Chart,
    pub indices: Vec<f64>,
    /// Compact probe box `K`.
    pub probe: Grid,
}

impl MapFamily {
    pub fn member(&self, n: f64) -> Result<SmoothMap> {
        let comps = self
            .members
            .iter()
            .map(|f| bind_nt(f, n, 0.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(SmoothMap::new(comps, self.domain.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub index: f64,
    pub residual: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub rows: Vec<FamilyRow>,
    pub non_increasing: bool,
}

impl FamilyReport {
    pub fn final_distance(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.distance)
    }
}

fn non_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15)
}

/// Poisson residual of every sampled member at `probes` and its distance to the limit on `K`.
pub fn verify_family(pi: &PoissonStructure, fam: &MapFamily, probes: &[Vec<f64>]) -> Result<FamilyReport> {
    let nodes = fam.probe.nodes();
    let mut rows = Vec::with_capacity(fam.indices.len());
    for &n in &fam.indices {
        let member = fam.member(n)?;
        let mut residual = 0.0_f64;
        for p in probes {
            let r = pi.poisson_map_check(pi, &member, p)?;
            if r > MEMBER_TOL {
                return Err(Error::MemberNotPoisson {
                    index: n,
                    point: p.clone(),
                    residual: r,
                });
            }
            residual = residual.max(r);
        }
        let distance = c0_distance(&member, &fam.limit, &nodes)?;
        rows.push(FamilyRow { index: n, residual, distance });
    }
    let d: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    Ok(FamilyReport {
        non_increasing: non_increasing(&d),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafMappingReport {
    pub groups: usize,
    /// Largest disagreement of target invariants inside a group.
    pub max_spread: f64,
    pub region_mismatches: usize,
    pub rank_mismatches: usize,
}

impl LeafMappingReport {
    pub fn preserved(&self) -> bool {
        self.max_spread <= LEAF_TOL && self.region_mismatches == 0 && self.rank_mismatches == 0
    }
}

/// Each group holds samples of one source leaf; their images should share a target leaf and rank.
pub fn leaf_mapping_check(pi: &PoissonStructure, map: &dyn DiffMap, atlas: &LeafAtlas, groups: &[Vec<Vec<f64>>], tol_rank: f64) -> Result<LeafMappingReport> {
    let mut rep = LeafMappingReport {
        groups: groups.len(),
        max_spread: 0.0,
        region_mismatches: 0,
        rank_mismatches: 0,
    };
    for group in groups {
        let mut first: Option<crate::clean::LeafLabel> = None;
        for p in group {
            let q = map.apply(p)?;
            if pi.rank_at(p, tol_rank)? != pi.rank_at(&q, tol_rank)? {
                rep.rank_mismatches += 1;
            }
            let Some(label) = atlas.label(&q)? else {
                rep.region_mismatches += 1;
                continue;
            };
            match &first {
                None => first = Some(label),
                Some(l0) if l0.region != label.region => rep.region_mismatches += 1,
                Some(l0) => {
                    for (a, b) in l0.values.iter().zip(&label.values) {
                        rep.max_spread = rep.max_spread.max((a - b).abs());
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Largest `|w_L(dphi u, dphi v) - w_L(u, v)|` over probes and pairs of a leaf basis.
pub fn leafwise_symplectic_check(pi: &PoissonStructure, map: &dyn DiffMap, probes: &[Vec<f64>], tol_rank: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for p in probes {
        let basis = linalg::column_space(&pi.matrix_at(p)?, tol_rank);
        if basis.ncols() == 0 {
            continue;
        }
        let j = map.jacobian(p)?;
        let q = map.apply(p)?;
        let src = pi.leafwise_gram(p, &basis)?;
        let pushed: DMatrix<f64> = &j * &basis;
        let dst = pi.leafwise_gram(&q, &pushed)?;
        worst = worst.max((dst - src).amax());
    }
    Ok(worst)
}

/// Time-dependent smooth Hamiltonians `H_n(t, .)` with a continuous limit.
#[derive(Debug, Clone, PartialEq)]
pub struct HameotopyFamily {
    pub name: String,
    /// Parameters among `n` and `t`.
    pub hamiltonian: ScalarField,
    pub limit_hamiltonian: Option<ScalarField>,
    /// Closed-form flow, parameters among `n` and `t`; `None` entries are not compared.
    pub closed_form: Option<Vec<Option<ScalarField>>>,
    pub indices: Vec<f64>,
    pub time: f64,
    pub step: f64,
    pub support: Chart,
}

impl HameotopyFamily {
    pub fn member(&self, n: f64) -> Result<Arc<dyn Hamiltonian>> {
        if self.hamiltonian.params().iter().any(|p| p == "t") {
            Ok(Arc::new(TimeDependent::new(self.hamiltonian.clone(), &[("n", n)])?))
        } else {
            Ok(Arc::new(bind_nt(&self.hamiltonian, n, 0.0)?))
        }
    }

    pub fn spec(&self, n: f64, t: f64) -> Result<FlowSpec> {
        Ok(FlowSpec::new(self.member(n)?, t).with_step(self.step))
    }

    /// Closed-form image of `p`, with `None` where the component is not given.
    pub fn closed_form_at(&self, n: f64, t: f64, p: &[f64]) -> Result<Option<Vec<Option<f64>>>> {
        let Some(cf) = &self.closed_form else {
            return Ok(None);
        };
        let vals = cf
            .iter()
            .map(|c| match c {
                Some(f) => Ok(Some(bind_nt(f, n, t)?.value(p)?)),
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(vals))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HameotopyReport {
    pub indices: Vec<f64>,
    /// `endpoints[k][s]` is the time-`t` image of seed `s` under member `k`.
    pub endpoints: Vec<Vec<Vec<f64>>>,
    /// C0 gap between consecutive members.
    pub gaps: Vec<f64>,
    /// Images under the largest sampled member.
    pub limit_points: Vec<Vec<f64>>,
    /// Per member, the largest deviation from the closed form on compared components.
    pub closed_form_errors: Vec<f64>,
}

fn masked_gap(a: &[f64], b: &[Option<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| y.map(|y| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Integrates every sampled member from every seed up to time `t`.
pub fn run_hameotopy(pi: &PoissonStructure, ham: &HameotopyFamily, seeds: &[Vec<f64>], t: f64) -> Result<HameotopyReport> {
    let mut endpoints = Vec::with_capacity(ham.indices.len());
    let mut closed_form_errors = Vec::new();
    for &n in &ham.indices {
        let spec = ham.spec(n, t)?;
        let ends: Vec<Vec<f64>> = crate::par::install(|| seeds.par_iter().map(|s| flow_point(pi, &spec, s)).collect::<Result<_>>())?;
        if ham.closed_form.is_some() {
            let mut worst = 0.0_f64;
            for (s, e) in seeds.iter().zip(&ends) {
                if let Some(cf) = ham.closed_form_at(n, t, s)? {
                    worst = worst.max(masked_gap(e, &cf));
                }
            }
            closed_form_errors.push(worst);
        }
        endpoints.push(ends);
    }
    let gaps = endpoints
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(HameotopyReport {
        indices: ham.indices.clone(),
        limit_points: endpoints.last().cloned().unwrap_or_default(),
        endpoints,
        gaps,
        closed_form_errors,
    })
}

/// A closed-form map whose components may depend on `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFlow {
    pub components: Vec<ScalarField>,
    pub domain: Chart,
}

impl ClosedFlow {
    pub fn at(&self, t: f64) -> Result<SmoothMap> {
        let comps = self
            .components
            .iter()
            .map(|f| bind_nt(f, 0.0, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(SmoothMap::new(comps, self.domain.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafImage {
    pub seed: Vec<f64>,
    pub source_dims: Vec<usize>,
    pub image_dims: Vec<usize>,
    pub max_residual: f64,
    /// Some image point has a lower characteristic dimension than its source.
    pub drop: bool,
    /// Some image point has a higher characteristic dimension than its source.
    pub jump: bool,
}

/// Trace through `p`, falling back to the partial trajectory at the domain boundary.
fn trace_or_partial(pi: &PoissonStructure, c: &Submanifold, p: &[f64], arc: f64) -> Result<Vec<Vec<f64>>> {
    match c.trace_characteristic_leaf(pi, p, arc) {
        Ok(t) => Ok(t.points),
        Err(Error::LeftDomain { trajectory }) => Ok(trajectory.points),
        Err(e) => Err(e),
    }
}

fn reversed(c: &Submanifold) -> Result<Submanifold> {
    let names = c.chart.names();
    let neg = c
        .defining
        .iter()
        .map(|f| ScalarField::from_expr(Expr::Neg(Box::new(f.ast().clone())), &names, &[]))
        .collect();
    Submanifold::unchecked(&c.name, c.chart.clone(), neg)
}

/// Samples of the characteristic leaf through `p` in both directions.
pub fn leaf_samples(pi: &PoissonStructure, c: &Submanifold, p: &[f64], arc: f64) -> Result<Vec<Vec<f64>>> {
    let mut back = trace_or_partial(pi, &reversed(c)?, p, arc)?;
    back.reverse();
    back.pop();
    back.extend(trace_or_partial(pi, c, p, arc)?);
    Ok(back)
}

/// Maps traced characteristic leaves of `src` through `map` and compares characteristic dimensions on `dst`.
pub fn char_leaf_image_analysis(pi: &PoissonStructure, src: &Submanifold, dst: &Submanifold, map: &dyn DiffMap, seeds: &[Vec<f64>], arc: f64, tol_rank: f64) -> Result<Vec<LeafImage>> {
    let mut out = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let p = src.project_to(seed)?;
        let trace = leaf_samples(pi, src, &p, arc)?;
        let mut img = LeafImage {
            seed: p.clone(),
            source_dims: Vec::new(),
            image_dims: Vec::new(),
            max_residual: 0.0,
            drop: false,
            jump: false,
        };
        for q in &trace {
            let image = map.apply(q)?;
            let r = dst.residual(&image)?;
            if r > IMAGE_TOL {
                return Err(Error::ImageOffTarget { point: image, residual: r });
            }
            img.max_residual = img.max_residual.max(r);
            let on = dst.project_to(&image)?;
            let ds = src.characteristic_data(pi, q, tol_rank)?.dim;
            let di = dst.characteristic_data(pi, &on, tol_rank)?.dim;
            img.drop |= di < ds;
            img.jump |= di > ds;
            img.source_dims.push(ds);
            img.image_dims.push(di);
        }
        out.push(img);
    }
    Ok(out)
}

/// A C0-Hamiltonian generator: its limit Hamiltonian and closed-form limit flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub hamiltonian: ScalarField,
    pub flow: ClosedFlow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionCloud {
    pub points: Vec<Vec<f64>>,
    pub smooth_leaf_dim: usize,
    /// Largest distance from a cloud point to the traced smooth leaf of the start point.
    pub leaf_distance: f64,
}

fn polyline_distance(q: &[f64], line: &[Vec<f64>]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    if line.len() == 1 {
        return dist(q, &line[0]);
    }
    let mut best = f64::INFINITY;
    for w in line.windows(2) {
        let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
        let dd: f64 = d.iter().map(|x| x * x).sum();
        let s = if dd == 0.0 {
            0.0
        } else {
            (q.iter().zip(&w[0]).zip(&d).map(|((x, a), e)| (x - a) * e).sum::<f64>() / dd).clamp(0.0, 1.0)
        };
        let foot: Vec<f64> = w[0].iter().zip(&d).map(|(a, e)| a + s * e).collect();
        best = best.min(dist(q, &foot));
    }
    best
}

/// Spread of each generator's limit Hamiltonian over `probes` on `C`, at every sampled time.
pub fn generator_spread(gens: &[Generator], probes: &[Vec<f64>], times: &[f64]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for g in gens {
        for &t in times {
            let h = bind_nt(&g.hamiltonian, 0.0, t)?;
            let vals = probes.iter().map(|p| h.value(p)).collect::<std::result::Result<Vec<_>, _>>()?;
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi >= lo {
                worst = worst.max(hi - lo);
            }
        }
    }
    Ok(worst)
}

/// Breadth-first closure of `{p}` under the generators' limit flows at the given times,
/// stopping at `budget` points. Images leaving the chart are skipped.
#[allow(clippy::too_many_arguments)]
pub fn c0_char_partition_probe(pi: &PoissonStructure, c: &Submanifold, gens: &[Generator], p: &[f64], budget: usize, times: &[f64], probes: &[Vec<f64>], arc: f64) -> Result<PartitionCloud> {
    let spread = generator_spread(gens, probes, times)?;
    if spread > IMAGE_TOL {
        return Err(Error::Precondition(format!("generator Hamiltonian is not constant on `{}` (spread {spread:e})", c.name)));
    }
    let start = c.project_to(p)?;
    let mut points = vec![start.clone()];
    let mut head = 0;
    let flows = gens
        .iter()
        .map(|g| times.iter().map(|&t| g.flow.at(t)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    'outer: while head < points.len() {
        let cur = points[head].clone();
        head += 1;
        for maps in &flows {
            for m in maps {
                if points.len() >= budget {
                    break 'outer;
                }
                let Ok(q) = m.apply(&cur) else { continue };
                if !pi.chart.contains(&q) {
                    continue;
                }
                let r = c.residual(&q)?;
                if r > IMAGE_TOL {
                    return Err(Error::OffSubmanifold { point: q, residual: r });
                }
                let fresh = points.iter().all(|e| e.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) > 1e-9);
                if fresh {
                    points.push(q);
                }
            }
        }
    }
    let smooth_leaf_dim = c.characteristic_data(pi, &start, crate::poisson::TOL_RANK)?.dim;
    let leaf = leaf_samples(pi, c, &start, arc)?;
    let leaf_distance = points.iter().map(|q| polyline_distance(q, &leaf)).fold(0.0, f64::max);
    Ok(PartitionCloud {
        points,
        smooth_leaf_dim,
        leaf_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clean::{Membership, Region};
    use crate::poisson::TOL_RANK;

    fn r3() -> (Chart, PoissonStructure) {
        let c = Chart::new(&[("x", -3.0, 3.0), ("y", -3.0, 3.0), ("z", -9.0, 9.0)]).unwrap();
        let pi = PoissonStructure::parse(c.clone(), &[("x", "y", "1")]).unwrap();
        (c, pi)
    }

    fn cube() -> Grid {
        Grid::new(vec![-1.0; 3], vec![1.0; 3], vec![11; 3])
    }

    #[test]
    fn distances() {
        let (c, _) = r3();
        let id = SmoothMap::identity(&c);
        let shift = SmoothMap::parse(&["x + 0.25", "y", "z"], &c).unwrap();
        let nodes = cube().nodes();
        assert_eq!(c0_distance(&id, &id, &nodes).unwrap(), 0.0);
        assert!((c0_distance(&shift, &id, &nodes).unwrap() - 0.25).abs() < 1e-15);
    }

    fn cbrt_family(c: &Chart, member_x: &str) -> MapFamily {
        let names = c.names();
        let members = [member_x, "y", "z"].iter().map(|t| ScalarField::parse(t, &names, &["n"]).unwrap()).collect();
        MapFamily {
            name: "psi".into(),
            members,
            limit: SmoothMap::parse(&["x + cbrt(z) - z", "y", "z"], c).unwrap(),
            domain: c.clone(),
            indices: DEFAULT_INDICES.to_vec(),
            probe: cube(),
        }
    }

    #[test]
    fn cbrt_shear_family_converges() {
        let (c, pi) = r3();
        let fam = cbrt_family(&c, "x + z*(z^2 + 1/n^3)^(-1/3) - z");
        let probes = cube().nodes().into_iter().step_by(37).collect::<Vec<_>>();
        let rep = verify_family(&pi, &fam, &probes).unwrap();
        assert!(rep.non_increasing);
        assert!(rep.final_distance() <= 1e-2);
        assert!(rep.rows.iter().all(|r| r.residual <= 1e-12));
    }

    #[test]
    fn broken_family_is_rejected() {
        let (c, pi) = r3();
        let fam = cbrt_family(&c, "2*x");
        let err = verify_family(&pi, &fam, &[vec![0.1, 0.2, 0.3]]).unwrap_err();
        assert!(matches!(err, Error::MemberNotPoisson { residual, .. } if (residual - 1.0).abs() < 1e-12));
    }

    #[test]
    fn symplectic_defect() {
        let (c, pi) = r3();
        let probes = vec![vec![0.1, -0.2, 0.3], vec![0.5, 0.5, -0.5]];
        let id = SmoothMap::identity(&c);
        assert!(leafwise_symplectic_check(&pi, &id, &probes, TOL_RANK).unwrap() < 1e-12);
        let shift = SmoothMap::parse(&["x + 0.3", "y - 0.1", "z"], &c).unwrap();
        assert!(leafwise_symplectic_check(&pi, &shift, &probes, TOL_RANK).unwrap() <= 1e-10);
        let scale = SmoothMap::parse(&["2*x", "y", "z"], &c).unwrap();
        assert!((leafwise_symplectic_check(&pi, &scale, &probes, TOL_RANK).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hameotopy_against_closed_form() {
        let (c, pi) = r3();
        let names = c.names();
        let ham = HameotopyFamily {
            name: "shear".into(),
            hamiltonian: ScalarField::parse("(z - z*(z^2 + 1/n^3)^(-1/3))*y", &names, &["n"]).unwrap(),
            limit_hamiltonian: None,
            closed_form: Some(vec![Some(ScalarField::parse("x + t*(cbrt(z) - z)", &names, &["t"]).unwrap()), None, None]),
            indices: vec![1e2, 1e6],
            time: 1.0,
            step: 1e-2,
            support: c.clone(),
        };
        let seeds = vec![vec![0.0, 0.5, 0.001], vec![0.3, -0.2, 0.7], vec![-1.0, 1.0, -1.0]];
        let rep = run_hameotopy(&pi, &ham, &seeds, 1.0).unwrap();
        assert!(rep.closed_form_errors[1] < 1e-3);
        assert!(rep.closed_form_errors[0] > rep.closed_form_errors[1]);
        let zero = HameotopyFamily {
            hamiltonian: ScalarField::parse("0*n", &names, &["n"]).unwrap(),
            closed_form: None,
            ..ham
        };
        let rep = run_hameotopy(&pi, &zero, &seeds, 1.0).unwrap();
        assert_eq!(rep.limit_points, seeds);
    }

    #[test]
    fn leaf_mapping_under_the_limit() {
        let (c, pi) = r3();
        let atlas = LeafAtlas::new(vec![Region {
            name: "all".into(),
            membership: Membership::Always,
            rank: Some(2),
            invariants: vec![ScalarField::coordinate(2, &c.names())],
        }]);
        let limit = SmoothMap::parse(&["x + cbrt(z) - z", "y", "z"], &c).unwrap();
        let groups: Vec<Vec<Vec<f64>>> = [-0.5, 0.0, 0.7]
            .iter()
            .map(|&z| (0..5).map(|k| vec![0.2 * k as f64 - 0.4, 0.1 * k as f64, z]).collect())
            .collect();
        let rep = leaf_mapping_check(&pi, &limit, &atlas, &groups, TOL_RANK).unwrap();
        assert!(rep.preserved());
    }

    #[test]
    fn image_analysis_reports_drop_and_jump() {
        let (c, pi) = r3();
        let plane = Submanifold::parse("C", &c, &["z - x"]).unwrap();
        let cubic = Submanifold::parse("C'", &c, &["z - x^3"]).unwrap();
        let limit = SmoothMap::parse(&["x + cbrt(z) - z", "y", "z"], &c).unwrap();
        let res = char_leaf_image_analysis(&pi, &plane, &cubic, &limit, &[vec![0.0, 0.5, 0.0]], 1.0, TOL_RANK).unwrap();
        assert!(res[0].drop && res[0].source_dims.iter().all(|&d| d == 1));

        let shift = SmoothMap::parse(&["x + 1", "y", "(cbrt(z) + 1)^3"], &c).unwrap();
        let res = char_leaf_image_analysis(&pi, &cubic, &cubic, &shift, &[vec![0.0, 0.0, 0.0]], 1.0, TOL_RANK).unwrap();
        assert!(res[0].jump);
        assert_eq!((res[0].source_dims[0], res[0].image_dims[0]), (0, 1));

        let id = SmoothMap::identity(&c);
        let res = char_leaf_image_analysis(&pi, &cubic, &cubic, &id, &[vec![0.5, 0.0, 0.125]], 1.0, TOL_RANK).unwrap();
        assert!(!res[0].drop && !res[0].jump);
    }

    #[test]
    fn partition_probe() {
        let (c, pi) = r3();
        let names = c.names();
        let cubic = Submanifold::parse("C", &c, &["z - x^3"]).unwrap();
        let gen = Generator {
            hamiltonian: ScalarField::parse("x - cbrt(z)", &names, &[]).unwrap(),
            flow: ClosedFlow {
                components: ["x", "y + t", "z"].iter().map(|s| ScalarField::parse(s, &names, &["t"]).unwrap()).collect(),
                domain: c.clone(),
            },
        };
        let probes = vec![vec![0.0, 0.0, 0.0], vec![0.5, 1.0, 0.125], vec![-1.0, 0.2, -1.0]];
        let cloud = c0_char_partition_probe(&pi, &cubic, &[gen], &[0.0, 0.0, 0.0], 20, &[-0.5, 0.5], &probes, 1.0).unwrap();
        assert_eq!(cloud.smooth_leaf_dim, 0);
        assert!(cloud.points.len() > 1);
        assert!(cloud.leaf_distance >= 0.5);

        let single = c0_char_partition_probe(&pi, &cubic, &[], &[0.0, 0.0, 0.0], 20, &[0.5], &probes, 1.0).unwrap();
        assert_eq!(single.points.len(), 1);
    }
}
