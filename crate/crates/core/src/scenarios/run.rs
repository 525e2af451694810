//! Check execution.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::format::split_value;
use super::model::{CheckSpec, Compiled, Scenario};
use super::report::{Artifact, ArtifactKind, CheckRecord, Report, Status};
use crate::c0lab::{self, Generator};
use crate::chart::Grid;
use crate::clean::{self, CleanParams, VerdictKind};
use crate::coiso::Submanifold;
use crate::error::{Error, Result};
use crate::exprcore::{Function, ScalarField};
use crate::flows::{self, FlowSpec, Verdict};
use crate::maps::DiffMap;
use crate::poisson;

/// Largest grid handled without coarsening.
pub const GRID_CAP: usize = 1_000_000;

/// Every check kind understood by [`run`].
pub const CHECK_KINDS: [&str; 21] = [
    "jacobi",
    "rank-map",
    "lower-semicontinuity",
    "coisotropy",
    "char-dim",
    "char-trace",
    "clean-scan",
    "classify",
    "leafwise-coisotropy",
    "char-coincidence",
    "vanishing-ideal",
    "energy",
    "reversal",
    "hameotopy",
    "c0-family",
    "leaf-mapping",
    "leafwise-symplectic",
    "map-image",
    "char-image",
    "partition-probe",
    "same-leaf",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub tol_rank: Option<f64>,
    /// Replaces the tolerance of every check.
    pub tol: Option<f64>,
    /// Runs only the named checks when non-empty.
    pub checks: Vec<String>,
}

struct Ctx<'a> {
    c: &'a Compiled,
    seed: u64,
    grid: usize,
    tol_rank: f64,
    tol: Option<f64>,
}

struct Outcome {
    status: Status,
    metric: Option<f64>,
    tolerance: Option<f64>,
    detail: String,
    artifacts: Vec<Artifact>,
}

impl Outcome {
    fn at_most(metric: f64, tol: f64) -> Outcome {
        Outcome::judged(metric <= tol, Some(metric), Some(tol), String::new())
    }

    fn judged(ok: bool, metric: Option<f64>, tolerance: Option<f64>, detail: String) -> Outcome {
        Outcome {
            status: if ok { Status::Pass } else { Status::Fail },
            metric,
            tolerance,
            detail,
            artifacts: Vec::new(),
        }
    }

    fn detail(mut self, d: impl Into<String>) -> Outcome {
        self.detail = d.into();
        self
    }

    fn with(mut self, a: Artifact) -> Outcome {
        self.artifacts.push(a);
        self
    }
}

struct Args<'a> {
    spec: &'a CheckSpec,
    ctx: &'a Ctx<'a>,
}

fn bad_arg(key: &str, msg: &str) -> Error {
    Error::Precondition(format!("argument `{key}`: {msg}"))
}

impl Args<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.spec.args.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn all(&self, key: &str) -> Vec<&str> {
        self.spec.args.iter().filter(|(k, _)| k == key).map(|(_, v)| v.as_str()).collect()
    }

    fn words(&self, key: &str) -> Result<Option<Vec<String>>> {
        self.raw(key).map(split_value).transpose()
    }

    fn word(&self, key: &str) -> Result<String> {
        let w = self.words(key)?.ok_or_else(|| bad_arg(key, "missing"))?;
        w.into_iter().next().ok_or_else(|| bad_arg(key, "empty"))
    }

    fn word_or(&self, key: &str, default: &str) -> Result<String> {
        Ok(match self.raw(key) {
            Some(_) => self.word(key)?,
            None => default.to_string(),
        })
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(_) => self.word(key)?.parse().map_err(|_| bad_arg(key, "not a number")),
        }
    }

    fn nums_of(value: &str, key: &str) -> Result<Vec<f64>> {
        split_value(value)?.iter().map(|w| w.parse().map_err(|_| bad_arg(key, "not a number"))).collect()
    }

    fn point(&self, key: &str) -> Result<Vec<f64>> {
        let v = Self::nums_of(self.raw(key).ok_or_else(|| bad_arg(key, "missing"))?, key)?;
        if v.len() != self.ctx.c.chart.dim() {
            return Err(bad_arg(key, "wrong number of coordinates"));
        }
        Ok(v)
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key).map(|v| Self::nums_of(v, key)).transpose()
    }

    /// Tolerance from `tol`, replaced by the run-wide override.
    fn tol(&self, default: f64) -> Result<f64> {
        match self.ctx.tol {
            Some(t) => Ok(t),
            None => self.num("tol", default),
        }
    }

    fn expr(&self, key: &str) -> Result<Option<ScalarField>> {
        let Some(w) = self.words(key)? else { return Ok(None) };
        let text = w.first().ok_or_else(|| bad_arg(key, "empty"))?;
        Ok(Some(ScalarField::parse(text, &self.ctx.c.chart.names(), &[])?))
    }

    fn submanifold(&self, key: &str) -> Result<&Submanifold> {
        self.ctx.c.submanifold(&self.word(key)?)
    }

    /// Sampling box from repeated `box = lo hi`, else the chart.
    fn sample_box(&self) -> Result<Vec<(f64, f64)>> {
        let rows = self.all("box");
        if rows.is_empty() {
            let ch = &self.ctx.c.chart;
            return Ok(ch.lo.iter().zip(&ch.hi).map(|(a, b)| (*a, *b)).collect());
        }
        if rows.len() != self.ctx.c.chart.dim() {
            return Err(bad_arg("box", "one `box = lo hi` per coordinate"));
        }
        rows.iter()
            .map(|r| {
                let v = Self::nums_of(r, "box")?;
                match v.as_slice() {
                    [lo, hi] => Ok((*lo, *hi)),
                    _ => Err(bad_arg("box", "expected two numbers")),
                }
            })
            .collect()
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.ctx.seed;
        for b in self.spec.name.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn uniform(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|(lo, hi)| if hi > lo { rng.random_range(*lo..=*hi) } else { *lo }).collect()
}

fn points_on(c: &Submanifold, rng: &mut ChaCha8Rng, bounds: &[(f64, f64)], count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count * 20 {
        if out.len() == count {
            break;
        }
        let s = uniform(rng, bounds);
        if let Ok(p) = c.project_to(&s) {
            if c.chart.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

fn points_in(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)], count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| uniform(rng, bounds)).collect()
}

/// `grid x grid` lattice on the projection plane, over `window` or the chart
/// inset by 1% per side; other coordinates start at 0 (clamped into the chart).
fn plane_grid(ctx: &Ctx, args: &Args, axes: (usize, usize)) -> Result<(Grid, Vec<Vec<f64>>)> {
    let ch = &ctx.c.chart;
    let (a, b) = axes;
    let (lo, hi) = match args.list("window")? {
        Some(w) if w.len() == 4 => ((w[0], w[2]), (w[1], w[3])),
        Some(_) => return Err(bad_arg("window", "expected lo_a hi_a lo_b hi_b")),
        None => {
            let inset = |i: usize| 0.01 * (ch.hi[i] - ch.lo[i]);
            ((ch.lo[a] + inset(a), ch.lo[b] + inset(b)), (ch.hi[a] - inset(a), ch.hi[b] - inset(b)))
        }
    };
    let n = ctx.grid;
    let g = Grid::new(vec![lo.0, lo.1], vec![hi.0, hi.1], vec![n, n]);
    let base: Vec<f64> = (0..ch.dim()).map(|i| 0.0_f64.clamp(ch.lo[i], ch.hi[i])).collect();
    let seeds = g
        .nodes()
        .into_iter()
        .map(|uv| {
            let mut p = base.clone();
            p[a] = uv[0];
            p[b] = uv[1];
            p
        })
        .collect();
    Ok((g, seeds))
}

fn plane_axes(ctx: &Ctx, args: &Args) -> Result<(usize, usize)> {
    match args.words("plane")? {
        Some(w) if w.len() == 2 => {
            let ix = |n: &str| ctx.c.chart.index_of(n).ok_or_else(|| bad_arg("plane", "unknown axis"));
            Ok((ix(&w[0])?, ix(&w[1])?))
        }
        Some(_) => Err(bad_arg("plane", "expected two axis names")),
        None => Ok(ctx.c.projection),
    }
}

fn kind_from(word: &str) -> Result<VerdictKind> {
    Ok(match word {
        "Transverse" => VerdictKind::Transverse,
        "CleanNonTransverse" => VerdictKind::CleanNonTransverse,
        "NonClean" => VerdictKind::NonClean,
        "Undetermined" => VerdictKind::Undetermined,
        other => return Err(bad_arg("expect", &format!("unknown verdict `{other}`"))),
    })
}

fn clean_params(ctx: &Ctx, args: &Args) -> Result<CleanParams> {
    let d = CleanParams::default();
    Ok(CleanParams {
        radius: args.num("radius", d.radius)?,
        n_samples: args.num("samples", d.n_samples)?,
        pca_rel: args.num("pca_rel", d.pca_rel)?,
        tol_rank: ctx.tol_rank,
        seed: ctx.seed,
    })
}

fn project2(p: &[f64], axes: (usize, usize)) -> [f64; 2] {
    [p[axes.0], p[axes.1]]
}

fn axis_names(ctx: &Ctx, axes: (usize, usize)) -> [String; 2] {
    [ctx.c.chart.names[axes.0].clone(), ctx.c.chart.names[axes.1].clone()]
}

fn bind_pairs(args: &Args) -> Result<Vec<(String, f64)>> {
    let Some(w) = args.words("bind")? else { return Ok(Vec::new()) };
    if w.len() % 2 != 0 {
        return Err(bad_arg("bind", "expected name value pairs"));
    }
    w.chunks(2)
        .map(|c| Ok((c[0].clone(), c[1].parse().map_err(|_| bad_arg("bind", "not a number"))?)))
        .collect()
}

fn smooth_hamiltonian(ctx: &Ctx, args: &Args) -> Result<Arc<crate::exprcore::BoundField>> {
    let h = ctx.c.hamiltonian(&args.word("hamiltonian")?)?;
    let pairs = bind_pairs(args)?;
    let refs: Vec<(&str, f64)> = pairs.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    Ok(Arc::new(h.bind(&refs)?))
}

fn check_jacobi(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let tol = args.tol(1e-8)?;
    let n = args.num("samples", 1000usize)?;
    let ch = ctx.c.chart.shrunk(1e-3);
    let bounds: Vec<(f64, f64)> = ch.lo.iter().zip(&ch.hi).map(|(a, b)| (*a, *b)).collect();
    let pts = points_in(&mut args.rng(), &bounds, n);
    let pi = &ctx.c.poisson;
    let vals: Vec<f64> = crate::par::install(|| pts.par_iter().map(|p| pi.max_coordinate_jacobiator(p)).collect::<Result<_>>())?;
    let worst = vals.into_iter().fold(0.0, f64::max);
    Ok(Outcome::at_most(worst, tol).detail(format!("{n} random points")))
}

fn check_rank_map(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let pi = &ctx.c.poisson;
    let mut grid = ctx.c.chart.grid(ctx.grid);
    let coarse = grid.coarsen_to(GRID_CAP);
    let nodes = grid.nodes();
    let atlas = &ctx.c.atlas;
    let tol_rank = ctx.tol_rank;
    let bad: usize = crate::par::install(|| {
        nodes
            .par_iter()
            .map(|p| {
                let expected = atlas.region_index(p).ok().flatten().and_then(|r| atlas.regions[r].rank);
                match (pi.rank_at(p, tol_rank), expected) {
                    (Ok(k), Some(e)) => usize::from(k != e),
                    (Ok(_), None) => 0,
                    (Err(_), _) => 1,
                }
            })
            .sum()
    });
    let axes = plane_axes(ctx, args)?;
    let (pg, seeds) = plane_grid(ctx, args, axes)?;
    // Full-dimensional grid that is flat off the plane.
    let mut g = Grid::new(seeds[0].clone(), seeds[0].clone(), vec![1; pi.dim()]);
    for (k, a) in [axes.0, axes.1].into_iter().enumerate() {
        g.lo[a] = pg.lo[k];
        g.hi[a] = pg.hi[k];
        g.counts[a] = pg.counts[k];
    }
    let dims = flows::leaf_dim_map(pi, &g, tol_rank)?;
    let (na, nb) = (pg.counts[0], pg.counts[1]);
    let values: Vec<Vec<usize>> = (0..na)
        .map(|i| (0..nb).map(|j| dims[if axes.0 < axes.1 { i * nb + j } else { j * na + i }]).collect())
        .collect();
    let art = Artifact {
        kind: ArtifactKind::Grid,
        name: format!("{}-leaf-dim", args.spec.name),
        data: json!({
            "axes": axis_names(ctx, axes),
            "lo": pg.lo, "hi": pg.hi, "counts": pg.counts,
            "values": values,
        }),
    };
    let tol = args.tol(0.0)?;
    let mut detail = format!("{} nodes", nodes.len());
    if coarse {
        detail.push_str(&format!("; grid coarsened to {:?}", grid.counts));
    }
    Ok(Outcome::at_most(bad as f64, tol).detail(detail).with(art))
}

fn check_lsc(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let r0 = args.num("r0", 0.05)?;
    let nodes = args.num("nodes", 11usize)?;
    let grid = ctx.c.chart.shrunk(r0).grid(nodes);
    let rep = poisson::lower_semicontinuity_check(&ctx.c.poisson, &grid, r0, ctx.tol_rank)?;
    Ok(Outcome::at_most(rep.violations.len() as f64, args.tol(0.0)?).detail(format!("{} nodes", rep.nodes)))
}

fn check_coisotropy(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let expect = args.word_or("expect", "true")? == "true";
    let tol = args.tol(crate::coiso::COISO_TOL)?;
    let pts = points_on(c, &mut args.rng(), &args.sample_box()?, args.num("probes", 50usize)?);
    let mut worst = 0.0_f64;
    for p in &pts {
        worst = worst.max(c.is_coisotropic_at(&ctx.c.poisson, p, tol)?.value);
    }
    let ok = if expect { worst <= tol } else { worst > tol };
    Ok(Outcome::judged(ok, Some(worst), Some(tol), format!("{} probes, expect coisotropic = {expect}", pts.len())))
}

fn check_char_dim(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let locus = args.expr("degenerate")?;
    let low = args.num("low", 0usize)?;
    let high = args.num("high", 1usize)?;
    let (_, seeds) = plane_grid(ctx, args, ctx.c.projection)?;
    let pi = &ctx.c.poisson;
    let tol_rank = ctx.tol_rank;
    let bad: usize = crate::par::install(|| {
        seeds
            .par_iter()
            .map(|s| {
                let Ok(p) = c.project_to(s) else { return 1 };
                let expected = match &locus {
                    Some(f) if f.eval(&p, &[]).map(|v| v.abs() <= 1e-12).unwrap_or(false) => low,
                    _ => high,
                };
                match c.characteristic_data(pi, &p, tol_rank) {
                    Ok(d) => usize::from(d.dim != expected),
                    Err(_) => 1,
                }
            })
            .sum()
    });
    Ok(Outcome::at_most(bad as f64, args.tol(0.0)?).detail(format!("{} grid points", seeds.len())))
}

fn check_char_trace(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let avoid = args.expr("avoid")?;
    let below = args.num("avoid_below", 0.05)?;
    let arc = args.num("arc", 1.0)?;
    let n = args.num("seeds", 20usize)?;
    let mut rng = args.rng();
    let bounds = args.sample_box()?;
    let mut seeds = Vec::new();
    for p in points_on(c, &mut rng, &bounds, 4 * n) {
        let keep = match &avoid {
            Some(f) => f.eval(&p, &[])?.abs() >= below,
            None => true,
        };
        if keep && seeds.len() < n {
            seeds.push(p);
        }
    }
    let mut worst = 0.0_f64;
    for s in &seeds {
        let pts = match c.trace_characteristic_leaf(&ctx.c.poisson, s, arc) {
            Ok(t) => t.points,
            Err(Error::LeftDomain { trajectory }) => trajectory.points,
            Err(e) => return Err(e),
        };
        for q in &pts {
            worst = worst.max(c.residual(q)?);
        }
    }
    Ok(Outcome::at_most(worst, args.tol(1e-7)?).detail(format!("{} traces", seeds.len())))
}

fn has_block(flags: &[bool], na: usize, nb: usize) -> bool {
    (0..na.saturating_sub(2)).any(|i| (0..nb.saturating_sub(2)).any(|j| (0..3).all(|di| (0..3).all(|dj| flags[(i + di) * nb + j + dj]))))
}

fn check_clean_scan(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let min_fraction = args.tol(0.99)?;
    let params = clean_params(ctx, args)?;
    let axes = ctx.c.projection;
    let (g, seeds) = plane_grid(ctx, args, axes)?;
    let res = clean::clean_locus_scan(&ctx.c.poisson, c, &ctx.c.atlas, &seeds, &params);
    let flags: Vec<bool> = res.verdicts.iter().map(|v| v.kind == VerdictKind::NonClean).collect();
    let block = has_block(&flags, g.counts[0], g.counts[1]);
    let frac = res.summary.clean_fraction;
    let mut ok = frac >= min_fraction && !block;
    let mut detail = format!("{} points, counts {:?}", res.summary.total, res.summary.counts);
    if block {
        detail.push_str("; a 3x3 block is entirely non-clean");
    }
    if let Some(locus) = args.expr("nonclean_locus")? {
        let elsewhere = kind_from(&args.word_or("elsewhere", "Transverse")?)?;
        let need = args.num("label_fraction", 0.99)?;
        let mut agree = 0usize;
        let mut opposite = 0usize;
        for (p, v) in res.points.iter().zip(&res.verdicts) {
            let on = locus.eval(p, &[])?.abs() <= 1e-12;
            let expected = if on { VerdictKind::NonClean } else { elsewhere };
            if v.kind == expected {
                agree += 1;
            } else if v.kind != VerdictKind::Undetermined {
                opposite += 1;
            }
        }
        let af = agree as f64 / res.points.len().max(1) as f64;
        ok &= af >= need && opposite == 0;
        detail.push_str(&format!("; label agreement {af:.4}, opposite labels {opposite}"));
    }
    let art = Artifact {
        kind: ArtifactKind::Cloud,
        name: format!("{}-nonclean", args.spec.name),
        data: json!({
            "axes": axis_names(ctx, axes),
            "background": res.points.iter().map(|p| project2(p, axes)).collect::<Vec<_>>(),
            "points": res.summary.non_clean.iter().map(|p| project2(p, axes)).collect::<Vec<_>>(),
        }),
    };
    Ok(Outcome::judged(ok, Some(frac), Some(min_fraction), detail).with(art))
}

fn check_classify(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let params = clean_params(ctx, args)?;
    let pi = &ctx.c.poisson;
    let n = ctx.c.chart.dim();
    let mut failures = 0usize;
    let mut notes = Vec::new();
    for row in args.all("expect") {
        let w = split_value(row)?;
        let kind = kind_from(w.first().ok_or_else(|| bad_arg("expect", "empty"))?)?;
        let p: Vec<f64> = w[1..].iter().map(|x| x.parse().map_err(|_| bad_arg("expect", "not a number"))).collect::<Result<_>>()?;
        if p.len() != n {
            return Err(bad_arg("expect", "wrong number of coordinates"));
        }
        let p = c.project_to(&p)?;
        let got = clean::classify(pi, c, &ctx.c.atlas, &p, &params).kind;
        if got != kind {
            failures += 1;
            notes.push(format!("{p:?}: {got:?} (expected {kind:?})"));
        }
    }
    for row in args.all("segment") {
        let w = split_value(row)?;
        if w.len() != 3 + 2 * n {
            return Err(bad_arg("segment", "expected kind fraction count a.. b.."));
        }
        let kind = kind_from(&w[0])?;
        let need: f64 = w[1].parse().map_err(|_| bad_arg("segment", "fraction"))?;
        let count: usize = w[2].parse().map_err(|_| bad_arg("segment", "count"))?;
        let nums: Vec<f64> = w[3..].iter().map(|x| x.parse().map_err(|_| bad_arg("segment", "not a number"))).collect::<Result<_>>()?;
        let (a, b) = nums.split_at(n);
        let mut hit = 0usize;
        for k in 0..count {
            let s = (k as f64 + 0.5) / count as f64;
            let q: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect();
            if let Ok(p) = c.project_to(&q) {
                if clean::classify(pi, c, &ctx.c.atlas, &p, &params).kind == kind {
                    hit += 1;
                }
            }
        }
        let frac = hit as f64 / count.max(1) as f64;
        if frac < need {
            failures += 1;
        }
        notes.push(format!("segment {kind:?}: {frac:.3}"));
    }
    Ok(Outcome::at_most(failures as f64, args.tol(0.0)?).detail(notes.join("; ")))
}

fn clean_probes(ctx: &Ctx, args: &Args, c: &Submanifold, count: usize) -> Result<Vec<Vec<f64>>> {
    let params = clean_params(ctx, args)?;
    let mut rng = args.rng();
    let cand = points_on(c, &mut rng, &args.sample_box()?, 4 * count);
    let pi = &ctx.c.poisson;
    let atlas = &ctx.c.atlas;
    let kinds: Vec<bool> = crate::par::install(|| cand.par_iter().map(|p| clean::classify(pi, c, atlas, p, &params).kind.is_clean()).collect());
    Ok(cand.into_iter().zip(kinds).filter(|(_, k)| *k).map(|(p, _)| p).take(count).collect())
}

fn check_leafwise(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let params = clean_params(ctx, args)?;
    let n = args.num("probes", 200usize)?;
    let probes = clean_probes(ctx, args, c, n)?;
    let pi = &ctx.c.poisson;
    let mut disagree = 0usize;
    for p in &probes {
        let a = c.is_coisotropic_at(pi, p, crate::coiso::COISO_TOL)?.coisotropic;
        let b = clean::leafwise_coisotropy_check(pi, c, &ctx.c.atlas, p, &params)?;
        disagree += usize::from(a != b);
    }
    Ok(Outcome::at_most(disagree as f64, args.tol(0.0)?).detail(format!("{} clean probes", probes.len())))
}

fn check_coincidence(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let probes = clean_probes(ctx, args, c, args.num("probes", 50usize)?)?;
    let mut worst = 0.0_f64;
    for p in &probes {
        let k = clean::char_kernel_coincidence(&ctx.c.poisson, c, p, ctx.tol_rank)?;
        worst = worst.max(if k.char_dim == k.kernel_dim { k.angle } else { 1.0 });
    }
    Ok(Outcome::at_most(worst, args.tol(1e-6)?).detail(format!("{} clean probes", probes.len())))
}

fn random_poly(rng: &mut ChaCha8Rng, names: &[&str]) -> String {
    let mut terms = vec![format!("{:.3}", rng.random_range(-1.0..1.0))];
    for a in names {
        terms.push(format!("{:.3}*{a}", rng.random_range(-1.0..1.0)));
        for b in names {
            if rng.random_bool(0.3) {
                terms.push(format!("{:.3}*{a}*{b}", rng.random_range(-1.0..1.0)));
            }
        }
    }
    terms.join(" + ")
}

fn check_vanishing(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let pairs = args.num("pairs", 50usize)?;
    let per = args.num("probes", 10usize)?;
    let mut rng = args.rng();
    let names = ctx.c.chart.names();
    let bounds = args.sample_box()?;
    let mut worst = 0.0_f64;
    for _ in 0..pairs {
        let make = |rng: &mut ChaCha8Rng| -> Result<ScalarField> {
            let text = c.defining.iter().map(|f| format!("({})*({})", random_poly(rng, &names), f.text())).collect::<Vec<_>>().join(" + ");
            Ok(ScalarField::parse(&text, &names, &[])?)
        };
        let f = make(&mut rng)?;
        let g = make(&mut rng)?;
        let probes = points_on(c, &mut rng, &bounds, per);
        worst = worst.max(c.vanishing_ideal_bracket_check(&ctx.c.poisson, &f, &g, &probes)?);
    }
    Ok(Outcome::at_most(worst, args.tol(1e-8)?).detail(format!("{pairs} pairs")))
}

type FlowSeeds = (Arc<crate::exprcore::BoundField>, Vec<Vec<f64>>, f64, f64);

fn flow_seeds(ctx: &Ctx, args: &Args) -> Result<FlowSeeds> {
    let h = smooth_hamiltonian(ctx, args)?;
    let seeds = points_in(&mut args.rng(), &args.sample_box()?, args.num("seeds", 100usize)?);
    Ok((h, seeds, args.num("time", 1.0)?, args.num("step", flows::DEFAULT_STEP)?))
}

fn check_energy(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let (h, seeds, t, step) = flow_seeds(ctx, args)?;
    let spec = FlowSpec::new(h.clone(), t).with_step(step);
    let pi = &ctx.c.poisson;
    let res: Vec<Option<f64>> = crate::par::install(|| {
        seeds
            .par_iter()
            .map(|s| match flows::flow_point(pi, &spec, s) {
                Ok(q) => Ok(Some((h.value(&q)? - h.value(s)?).abs())),
                Err(Error::LeftDomain { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()
    })?;
    let skipped = res.iter().filter(|r| r.is_none()).count();
    let worst = res.into_iter().flatten().fold(0.0, f64::max);
    Ok(Outcome::at_most(worst, args.tol(1e-6)?).detail(format!("{} seeds, {skipped} left the domain", seeds.len())))
}

fn check_reversal(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let (h, seeds, t, step) = flow_seeds(ctx, args)?;
    let fwd = FlowSpec::new(h.clone(), t).with_step(step);
    let back = FlowSpec::new(h, -t).with_step(step);
    let pi = &ctx.c.poisson;
    let res: Vec<Option<f64>> = crate::par::install(|| {
        seeds
            .par_iter()
            .map(|s| match flows::flow_point(pi, &fwd, s).and_then(|q| flows::flow_point(pi, &back, &q)) {
                Ok(r) => Ok(Some(r.iter().zip(s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))),
                Err(Error::LeftDomain { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()
    })?;
    let skipped = res.iter().filter(|r| r.is_none()).count();
    let worst = res.into_iter().flatten().fold(0.0, f64::max);
    Ok(Outcome::at_most(worst, args.tol(1e-7)?).detail(format!("{} seeds, {skipped} left the domain", seeds.len())))
}

fn curve(name: String, xlabel: &str, ylabel: &str, x: &[f64], y: &[f64]) -> Artifact {
    Artifact {
        kind: ArtifactKind::Curve,
        name,
        data: json!({ "xlabel": xlabel, "ylabel": ylabel, "x": x, "y": y }),
    }
}

fn check_hameotopy(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let name = args.word("hameotopy")?;
    let ham = ctx.c.hameotopy(&name)?;
    let seeds = ctx.c.hameotopy_seeds(&name)?;
    let rep = c0lab::run_hameotopy(&ctx.c.poisson, ham, seeds, ham.time)?;
    let mode = args.word_or("mode", "largest")?;
    let metric = match mode.as_str() {
        "each" => rep.closed_form_errors.iter().copied().fold(0.0, f64::max),
        "largest" => rep.closed_form_errors.last().copied().unwrap_or(0.0),
        other => return Err(bad_arg("mode", &format!("unknown mode `{other}`"))),
    };
    let mut out = Outcome::at_most(metric, args.tol(1e-3)?).detail(format!("{} seeds, closed-form errors {:?}, gaps {:?}", seeds.len(), rep.closed_form_errors, rep.gaps));
    if !rep.closed_form_errors.is_empty() {
        out = out.with(curve(format!("{}-closed-form-error", args.spec.name), "n", "error", &rep.indices, &rep.closed_form_errors));
    }
    Ok(out)
}

fn check_family(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let fam = ctx.c.family(&args.word("family")?)?;
    let tol = args.tol(1e-2)?;
    let stride = args.num("probe_stride", 7usize)?.max(1);
    let probes: Vec<Vec<f64>> = fam.probe.nodes().into_iter().step_by(stride).collect();
    match c0lab::verify_family(&ctx.c.poisson, fam, &probes) {
        Ok(rep) => {
            let d = rep.final_distance();
            let ok = rep.non_increasing && d <= tol;
            let idx: Vec<f64> = rep.rows.iter().map(|r| r.index).collect();
            let ds: Vec<f64> = rep.rows.iter().map(|r| r.distance).collect();
            let res = rep.rows.iter().map(|r| r.residual).fold(0.0, f64::max);
            Ok(Outcome::judged(ok, Some(d), Some(tol), format!("distances {ds:?}, non-increasing {}, max residual {res:e}", rep.non_increasing))
                .with(curve(format!("{}-distance", args.spec.name), "n", "d_K", &idx, &ds)))
        }
        Err(e @ Error::MemberNotPoisson { .. }) => Ok(Outcome::judged(false, None, Some(tol), e.to_string())),
        Err(e) => Err(e),
    }
}

/// The map named by `family` (its limit) or by `map` at `time`.
fn target_map(ctx: &Ctx, args: &Args, key: &str, time_key: &str, default_time: f64) -> Result<Box<dyn DiffMap>> {
    if key == "map" {
        if let Some(f) = args.raw("family") {
            let fam = ctx.c.family(&split_value(f)?[0])?;
            return Ok(Box::new(fam.limit.clone()));
        }
    }
    let m = ctx.c.map(&args.word(key)?)?;
    Ok(Box::new(m.at(args.num(time_key, default_time)?)?))
}

fn leaf_group(ctx: &Ctx, rng: &mut ChaCha8Rng, p: &[f64], size: usize, bounds: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
    let names = ctx.c.chart.names();
    let n = names.len();
    let mut group = vec![p.to_vec()];
    let mut cur = p.to_vec();
    let inside = |q: &[f64]| q.iter().zip(bounds).all(|(x, (lo, hi))| x >= lo && x <= hi);
    for _ in 0..size.saturating_sub(1) * 4 {
        if group.len() >= size {
            break;
        }
        let i = rng.random_range(0..n);
        let tau = rng.random_range(-0.3..0.3);
        let spec = FlowSpec::new(Arc::new(ScalarField::coordinate(i, &names)), tau).with_step(1e-2);
        match flows::flow_point(&ctx.c.poisson, &spec, &cur) {
            Ok(q) if inside(&q) => {
                cur = q.clone();
                group.push(q);
            }
            Ok(_) | Err(Error::LeftDomain { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(group)
}

fn check_leaf_mapping(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let map = target_map(ctx, args, "map", "time", 1.0)?;
    let bounds = match args.raw("family") {
        Some(f) if args.all("box").is_empty() => {
            let fam = ctx.c.family(&split_value(f)?[0])?;
            fam.probe.lo.iter().zip(&fam.probe.hi).map(|(a, b)| (*a, *b)).collect()
        }
        _ => args.sample_box()?,
    };
    let mut rng = args.rng();
    let groups = args.num("groups", 10usize)?;
    let size = args.num("group_size", 5usize)?;
    let mut all = Vec::new();
    for _ in 0..groups {
        let p = uniform(&mut rng, &bounds);
        all.push(leaf_group(ctx, &mut rng, &p, size, &bounds)?);
    }
    let rep = c0lab::leaf_mapping_check(&ctx.c.poisson, map.as_ref(), &ctx.c.atlas, &all, ctx.tol_rank)?;
    let tol = args.tol(c0lab::LEAF_TOL)?;
    let ok = rep.max_spread <= tol && rep.region_mismatches == 0 && rep.rank_mismatches == 0;
    Ok(Outcome::judged(ok, Some(rep.max_spread), Some(tol), format!("{} groups, region mismatches {}, rank mismatches {}", rep.groups, rep.region_mismatches, rep.rank_mismatches)))
}

fn check_leafwise_symplectic(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let fam = ctx.c.family(&args.word("family")?)?;
    let n = args.num("index", fam.indices.last().copied().unwrap_or(1.0))?;
    let member = fam.member(n)?;
    let bounds: Vec<(f64, f64)> = fam.probe.lo.iter().zip(&fam.probe.hi).map(|(a, b)| (*a, *b)).collect();
    let probes = points_in(&mut args.rng(), &bounds, args.num("probes", 20usize)?);
    let d = c0lab::leafwise_symplectic_check(&ctx.c.poisson, &member, &probes, ctx.tol_rank)?;
    Ok(Outcome::at_most(d, args.tol(1e-6)?).detail(format!("member n = {n}")))
}

#[allow(clippy::too_many_arguments)]
fn image_residuals(ctx: &Ctx, args: &Args, src: &Submanifold, dst: &Submanifold, map: &dyn DiffMap, rng: &mut ChaCha8Rng, bounds: &[(f64, f64)], count: usize) -> Result<(f64, usize, usize)> {
    let mut worst = 0.0_f64;
    let mut used = 0;
    let mut skipped = 0;
    let _ = args;
    for p in points_on(src, rng, bounds, count) {
        match map.apply(&p) {
            Ok(q) if ctx.c.chart.contains(&q) => {
                worst = worst.max(dst.residual(&q)?);
                used += 1;
            }
            Ok(_) | Err(Error::OutsideDomain { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((worst, used, skipped))
}

fn check_map_image(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let src = args.submanifold("source")?;
    let dst = args.submanifold("target")?;
    let time = args.num("time", 1.0)?;
    let map = target_map(ctx, args, "map", "time", 1.0)?;
    let bounds = args.sample_box()?;
    let count = args.num("probes", 50usize)?;
    let mut rng = args.rng();
    let (fwd, used, skipped) = image_residuals(ctx, args, src, dst, map.as_ref(), &mut rng, &bounds, count)?;
    let mut worst = fwd;
    let mut detail = format!("forward: {used} probes, {skipped} skipped");
    if args.raw("inverse").is_some() {
        let inv = ctx.c.map(&args.word("inverse")?)?.at(args.num("inverse_time", -time)?)?;
        let (back, used, skipped) = image_residuals(ctx, args, dst, src, &inv, &mut rng, &bounds, count)?;
        worst = worst.max(back);
        detail.push_str(&format!("; inverse: {used} probes, {skipped} skipped"));
    }
    if used == 0 {
        return Ok(Outcome::judged(false, None, None, "no probe image landed in the chart".into()));
    }
    Ok(Outcome::at_most(worst, args.tol(c0lab::IMAGE_TOL)?).detail(detail))
}

fn check_char_image(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let src = args.submanifold("source")?;
    let dst = args.submanifold("target")?;
    let map = target_map(ctx, args, "map", "time", 1.0)?;
    let seeds = args.all("seed").iter().map(|s| Args::nums_of(s, "seed")).collect::<Result<Vec<_>>>()?;
    let arc = args.num("arc", 1.0)?;
    let expect = args.word_or("expect", "none")?;
    let tol = args.tol(c0lab::IMAGE_TOL)?;
    match c0lab::char_leaf_image_analysis(&ctx.c.poisson, src, dst, map.as_ref(), &seeds, arc, ctx.tol_rank) {
        Ok(res) => {
            let worst = res.iter().map(|r| r.max_residual).fold(0.0, f64::max);
            let drop = res.iter().any(|r| r.drop);
            let jump = res.iter().any(|r| r.jump);
            let seen = match expect.as_str() {
                "drop" => drop,
                "jump" => jump,
                "none" => !drop && !jump,
                other => return Err(bad_arg("expect", &format!("unknown expectation `{other}`"))),
            };
            let summary: Vec<String> = res
                .iter()
                .map(|r| {
                    let lo = |v: &[usize]| v.iter().min().copied().unwrap_or(0);
                    let hi = |v: &[usize]| v.iter().max().copied().unwrap_or(0);
                    format!(
                        "seed {:?}: source dims {}..{}, image dims {}..{}, drop {}, jump {}",
                        r.seed,
                        lo(&r.source_dims),
                        hi(&r.source_dims),
                        lo(&r.image_dims),
                        hi(&r.image_dims),
                        r.drop,
                        r.jump
                    )
                })
                .collect();
            Ok(Outcome::judged(seen && worst <= tol, Some(worst), Some(tol), summary.join("; ")))
        }
        Err(e @ Error::ImageOffTarget { .. }) => Ok(Outcome::judged(false, None, Some(tol), e.to_string())),
        Err(e) => Err(e),
    }
}

fn check_partition(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let c = args.submanifold("submanifold")?;
    let gens = args
        .all("generator")
        .iter()
        .map(|g| {
            let w = split_value(g)?;
            Ok(Generator {
                hamiltonian: ctx.c.hamiltonian(&w[0])?.clone(),
                flow: ctx.c.map(&w[1])?.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let start = args.point("start")?;
    let budget = args.num("budget", 40usize)?;
    let times = args.list("times")?.unwrap_or_else(|| vec![-0.5, 0.5]);
    let arc = args.num("arc", 1.0)?;
    let expect = args.word_or("expect", "larger")?;
    let tol = args.tol(1e-6)?;
    let probes = points_on(c, &mut args.rng(), &args.sample_box()?, args.num("probes", 20usize)?);
    let cloud = c0lab::c0_char_partition_probe(&ctx.c.poisson, c, &gens, &start, budget, &times, &probes, arc)?;
    let ok = match expect.as_str() {
        "larger" => cloud.points.len() > 1 && cloud.leaf_distance > tol,
        "within" => cloud.leaf_distance <= tol,
        other => return Err(bad_arg("expect", &format!("unknown expectation `{other}`"))),
    };
    let axes = ctx.c.projection;
    let art = Artifact {
        kind: ArtifactKind::Cloud,
        name: format!("{}-cloud", args.spec.name),
        data: json!({
            "axes": axis_names(ctx, axes),
            "background": Vec::<[f64; 2]>::new(),
            "points": cloud.points.iter().map(|p| project2(p, axes)).collect::<Vec<_>>(),
        }),
    };
    Ok(Outcome::judged(ok, Some(cloud.leaf_distance), Some(tol), format!("{} points, smooth leaf dim {}", cloud.points.len(), cloud.smooth_leaf_dim)).with(art))
}

fn check_same_leaf(ctx: &Ctx, args: &Args) -> Result<Outcome> {
    let p = args.point("p")?;
    let q = args.point("q")?;
    let expect = args.word_or("expect", "same")?;
    let v = flows::same_leaf_probe(&ctx.c.poisson, &ctx.c.atlas, &p, &q, args.num("budget", flows::DEFAULT_BUDGET)?, ctx.tol_rank)?;
    let want = match expect.as_str() {
        "same" => Verdict::Same,
        "different" => Verdict::Different,
        other => return Err(bad_arg("expect", &format!("unknown verdict `{other}`"))),
    };
    let detail = format!("verdict {v:?}");
    if v == Verdict::Inconclusive {
        return Ok(Outcome {
            status: Status::Undetermined,
            metric: None,
            tolerance: None,
            detail,
            artifacts: Vec::new(),
        });
    }
    Ok(Outcome::judged(v == want, None, None, detail))
}

fn dispatch(ctx: &Ctx, spec: &CheckSpec) -> Result<Outcome> {
    let args = Args { spec, ctx };
    match spec.kind.as_str() {
        "jacobi" => check_jacobi(ctx, &args),
        "rank-map" => check_rank_map(ctx, &args),
        "lower-semicontinuity" => check_lsc(ctx, &args),
        "coisotropy" => check_coisotropy(ctx, &args),
        "char-dim" => check_char_dim(ctx, &args),
        "char-trace" => check_char_trace(ctx, &args),
        "clean-scan" => check_clean_scan(ctx, &args),
        "classify" => check_classify(ctx, &args),
        "leafwise-coisotropy" => check_leafwise(ctx, &args),
        "char-coincidence" => check_coincidence(ctx, &args),
        "vanishing-ideal" => check_vanishing(ctx, &args),
        "energy" => check_energy(ctx, &args),
        "reversal" => check_reversal(ctx, &args),
        "hameotopy" => check_hameotopy(ctx, &args),
        "c0-family" => check_family(ctx, &args),
        "leaf-mapping" => check_leaf_mapping(ctx, &args),
        "leafwise-symplectic" => check_leafwise_symplectic(ctx, &args),
        "map-image" => check_map_image(ctx, &args),
        "char-image" => check_char_image(ctx, &args),
        "partition-probe" => check_partition(ctx, &args),
        "same-leaf" => check_same_leaf(ctx, &args),
        other => Err(Error::Precondition(format!("unknown check kind `{other}`"))),
    }
}

/// Runs the scenario's checks. Compilation failures are returned as errors;
/// failures inside a check are recorded with status `error` and the run continues.
pub fn run(s: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut scenario = s.clone();
    if let Some(t) = opts.tol_rank {
        scenario.tol_rank = t;
    }
    let compiled = scenario.compile()?;
    let ctx = Ctx {
        c: &compiled,
        seed: opts.seed.unwrap_or(scenario.seed),
        grid: opts.grid.unwrap_or(scenario.grid).max(2),
        tol_rank: scenario.tol_rank,
        tol: opts.tol,
    };
    let selected: Vec<&CheckSpec> = scenario.checks.iter().filter(|c| opts.checks.is_empty() || opts.checks.contains(&c.name)).collect();
    let outcomes: Vec<(CheckRecord, Vec<Artifact>)> = crate::par::install(|| {
        selected
            .par_iter()
            .map(|spec| {
                let t0 = Instant::now();
                let out = dispatch(&ctx, spec);
                let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
                match out {
                    Ok(o) => (
                        CheckRecord {
                            name: spec.name.clone(),
                            status: o.status,
                            metric: o.metric.filter(|m| m.is_finite()),
                            tolerance: o.tolerance,
                            runtime_ms,
                            detail: o.detail,
                        },
                        o.artifacts,
                    ),
                    Err(e) => (
                        CheckRecord {
                            name: spec.name.clone(),
                            status: Status::Error,
                            metric: None,
                            tolerance: None,
                            runtime_ms,
                            detail: e.to_string(),
                        },
                        Vec::new(),
                    ),
                }
            })
            .collect()
    });
    let mut report = Report::empty(&scenario.name, ctx.seed);
    for (rec, arts) in outcomes {
        report.checks.push(rec);
        report.artifacts.extend(arts);
    }
    Ok(report)
}
