//! Clean intersection points of a submanifold with the symplectic foliation.
//!
//! Tangent data comes from the bivector alone: `T_pL` is the column space
//! of the Poisson matrix. The actual intersection `C ∩ L_p` is sampled by
//! solving `{F = 0, G = G(p)}` for the atlas invariants `G` near `p`, and its
//! dimension is read off a PCA of the solution cloud.

mod atlas;

pub use atlas::{LeafAtlas, LeafLabel, Membership, Region, INVARIANT_TOL, ZERO_TOL};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coiso::Submanifold;
use crate::error::{Error, Result};
use crate::linalg;
use crate::poisson::{PoissonStructure, TOL_RANK};

/// Residual tolerance of the joint solve.
pub const JOINT_TOL: f64 = 1e-10;
/// Relative pseudo-inverse cutoff of the joint solve.
pub const JOINT_CUTOFF: f64 = 1e-8;
pub const JOINT_ITERS: usize = 200;
pub const MIN_CONVERGED: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CleanParams {
    pub radius: f64,
    pub n_samples: usize,
    pub pca_rel: f64,
    pub tol_rank: f64,
    pub seed: u64,
}

impl Default for CleanParams {
    fn default() -> Self {
        CleanParams {
            radius: 1e-2,
            n_samples: 64,
            pca_rel: 1e-3,
            tol_rank: TOL_RANK,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VerdictKind {
    Transverse,
    CleanNonTransverse,
    NonClean,
    Undetermined,
}

impl VerdictKind {
    pub fn is_clean(self) -> bool {
        matches!(self, VerdictKind::Transverse | VerdictKind::CleanNonTransverse)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub seeds: usize,
    pub converged: usize,
    /// Eigenvalues of the normalized solution cloud, decreasing.
    pub pca: Vec<f64>,
    pub radius: f64,
    pub pca_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanVerdict {
    pub kind: VerdictKind,
    pub tangent_int_dim: usize,
    pub estimated_int_dim: Option<usize>,
    pub diagnostics: Diagnostics,
}

/// Orthonormal bases of `T_pC` and `T_pL`.
pub fn tangent_spaces(pi: &PoissonStructure, c: &Submanifold, p: &[f64], tol_rank: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let tc = c.tangent_basis(p)?;
    let tl = linalg::column_space(&pi.matrix_at(p)?, tol_rank);
    Ok((tc, tl))
}

/// `dim(T_pC ∩ T_pL)` and `dim(T_pC + T_pL)`.
fn tangent_dims(tc: &DMatrix<f64>, tl: &DMatrix<f64>, tol_rank: f64) -> (usize, usize) {
    let sum = linalg::sum_dim(tc, tl, tol_rank);
    ((tc.ncols() + tl.ncols()).saturating_sub(sum), sum)
}

pub fn tangent_leaf_intersection_dim(pi: &PoissonStructure, c: &Submanifold, p: &[f64], tol_rank: f64) -> Result<usize> {
    let (tc, tl) = tangent_spaces(pi, c, p, tol_rank)?;
    Ok(tangent_dims(&tc, &tl, tol_rank).0)
}

fn seed_for(base: u64, p: &[f64]) -> u64 {
    // FNV-1a over the coordinate bits keeps seeds stable per node.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ base;
    for x in p {
        for b in x.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
    }
    h
}

/// Gauss-Newton on `{F = 0, G = target}`; continues until the update is
/// negligible as well, so fold directions are squeezed out.
fn joint_solve(c: &Submanifold, atlas: &LeafAtlas, region: usize, target: &[f64], seed: Vec<f64>, radius: f64) -> Option<Vec<f64>> {
    let inv = &atlas.regions[region].invariants;
    let n = seed.len();
    let rows = c.codim() + inv.len();
    let mut q = seed;
    let step_tol = 1e-6 * radius;
    for _ in 0..JOINT_ITERS {
        let mut r = DVector::zeros(rows);
        let mut j = DMatrix::zeros(rows, n);
        for (a, f) in c.defining.iter().enumerate() {
            r[a] = f.eval(&q, &[]).ok()?;
            j.set_row(a, &f.grad(&q, &[]).ok()?.transpose());
        }
        for (b, g) in inv.iter().enumerate() {
            let row = c.codim() + b;
            r[row] = g.eval(&q, &[]).ok()? - target[b];
            j.set_row(row, &g.grad(&q, &[]).ok()?.transpose());
        }
        let step = linalg::pinv_solve(&j, &r, JOINT_CUTOFF);
        if !step.iter().all(|v| v.is_finite()) {
            return None;
        }
        let small = step.norm() <= step_tol;
        if r.amax() <= JOINT_TOL && small {
            return Some(q);
        }
        if small && r.amax() > JOINT_TOL {
            // Stalled away from a solution.
            return None;
        }
        for (x, s) in q.iter_mut().zip(step.iter()) {
            *x -= s;
        }
    }
    None
}

/// Eigenvalues of the covariance of `pts` after centering and scaling by `radius`.
pub fn pca_spectrum(pts: &[Vec<f64>], radius: f64) -> Vec<f64> {
    let n = pts.first().map_or(0, |p| p.len());
    if pts.is_empty() || n == 0 {
        return Vec::new();
    }
    let m = pts.len() as f64;
    let mean: Vec<f64> = (0..n).map(|i| pts.iter().map(|p| p[i]).sum::<f64>() / m).collect();
    let mut cov = DMatrix::zeros(n, n);
    for p in pts {
        let d = DVector::from_iterator(n, p.iter().zip(&mean).map(|(x, mu)| (x - mu) / radius));
        cov += &d * d.transpose();
    }
    cov /= m;
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn pca_dim(spectrum: &[f64], rel: f64) -> usize {
    let top = spectrum.first().copied().unwrap_or(0.0);
    if top <= 1e-14 {
        return 0;
    }
    spectrum.iter().filter(|&&v| v >= rel * top).count()
}

/// Sampled dimension of `C ∩ L_p` near `p`, or `None` when too few seeds converge.
pub fn intersection_dim_estimate(pi: &PoissonStructure, c: &Submanifold, atlas: &LeafAtlas, p: &[f64], params: &CleanParams) -> (Option<usize>, Diagnostics) {
    let mut diag = Diagnostics {
        seeds: params.n_samples,
        radius: params.radius,
        pca_rel: params.pca_rel,
        ..Diagnostics::default()
    };
    let Ok(Some(label)) = atlas.label(p) else {
        return (None, diag);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(params.seed, p));
    let r = params.radius;
    let mut cloud = Vec::new();
    for _ in 0..params.n_samples {
        let seed: Vec<f64> = p.iter().map(|x| x + r * rng.random_range(-1.0..=1.0)).collect();
        let Some(q) = joint_solve(c, atlas, label.region, &label.values, seed, r) else {
            continue;
        };
        let far = q.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() > 3.0 * r;
        if far || !pi.chart.contains(&q) {
            continue;
        }
        if atlas.region_index(&q).ok().flatten() != Some(label.region) {
            continue;
        }
        cloud.push(q);
    }
    diag.converged = cloud.len();
    if cloud.len() < MIN_CONVERGED {
        return (None, diag);
    }
    diag.pca = pca_spectrum(&cloud, r);
    (Some(pca_dim(&diag.pca, params.pca_rel)), diag)
}

pub fn classify(pi: &PoissonStructure, c: &Submanifold, atlas: &LeafAtlas, p: &[f64], params: &CleanParams) -> CleanVerdict {
    let undetermined = |t: usize| CleanVerdict {
        kind: VerdictKind::Undetermined,
        tangent_int_dim: t,
        estimated_int_dim: None,
        diagnostics: Diagnostics::default(),
    };
    let Ok((tc, tl)) = tangent_spaces(pi, c, p, params.tol_rank) else {
        return undetermined(0);
    };
    let (int_dim, sum_dim) = tangent_dims(&tc, &tl, params.tol_rank);
    if sum_dim == pi.dim() {
        return CleanVerdict {
            kind: VerdictKind::Transverse,
            tangent_int_dim: int_dim,
            estimated_int_dim: None,
            diagnostics: Diagnostics::default(),
        };
    }
    let (est, diagnostics) = intersection_dim_estimate(pi, c, atlas, p, params);
    let kind = match est {
        None => VerdictKind::Undetermined,
        Some(e) if e == int_dim => VerdictKind::CleanNonTransverse,
        Some(e) if e < int_dim => VerdictKind::NonClean,
        // A larger sampled dimension contradicts the tangent bound: the sample is unreliable.
        Some(_) => VerdictKind::Undetermined,
    };
    CleanVerdict {
        kind,
        tangent_int_dim: int_dim,
        estimated_int_dim: est,
        diagnostics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub total: usize,
    pub clean_fraction: f64,
    pub counts: Vec<(VerdictKind, usize)>,
    pub non_clean: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub points: Vec<Vec<f64>>,
    pub verdicts: Vec<CleanVerdict>,
    pub summary: ScanSummary,
}

/// Projects every seed onto `C` and classifies it; seeds that fail to project
/// are recorded as undetermined at the seed.
pub fn clean_locus_scan(pi: &PoissonStructure, c: &Submanifold, atlas: &LeafAtlas, seeds: &[Vec<f64>], params: &CleanParams) -> ScanResult {
    let rows: Vec<(Vec<f64>, CleanVerdict)> = crate::par::install(|| {
        seeds
            .par_iter()
            .map(|s| match c.project_to(s) {
                Ok(p) if pi.chart.contains(&p) => {
                    let v = classify(pi, c, atlas, &p, params);
                    (p, v)
                }
                _ => (
                    s.clone(),
                    CleanVerdict {
                        kind: VerdictKind::Undetermined,
                        tangent_int_dim: 0,
                        estimated_int_dim: None,
                        diagnostics: Diagnostics::default(),
                    },
                ),
            })
            .collect()
    });
    let (points, verdicts): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let summary = summarize(&points, &verdicts);
    ScanResult {
        points,
        verdicts,
        summary,
    }
}

fn summarize(points: &[Vec<f64>], verdicts: &[CleanVerdict]) -> ScanSummary {
    let kinds = [
        VerdictKind::Transverse,
        VerdictKind::CleanNonTransverse,
        VerdictKind::NonClean,
        VerdictKind::Undetermined,
    ];
    let counts: Vec<(VerdictKind, usize)> = kinds
        .iter()
        .map(|k| (*k, verdicts.iter().filter(|v| v.kind == *k).count()))
        .collect();
    let clean = verdicts.iter().filter(|v| v.kind.is_clean()).count();
    ScanSummary {
        total: verdicts.len(),
        clean_fraction: if verdicts.is_empty() { 1.0 } else { clean as f64 / verdicts.len() as f64 },
        counts,
        non_clean: points
            .iter()
            .zip(verdicts)
            .filter(|(_, v)| v.kind == VerdictKind::NonClean)
            .map(|(p, _)| p.clone())
            .collect(),
    }
}

/// `W = T_pC ∩ T_pL` and its leafwise symplectic orthogonal inside `T_pL`.
pub fn leafwise_orthogonal(pi: &PoissonStructure, c: &Submanifold, p: &[f64], tol_rank: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (tc, tl) = tangent_spaces(pi, c, p, tol_rank)?;
    let w = linalg::intersection(&tl, &tc, tol_rank);
    let n = p.len();
    if tl.ncols() == 0 {
        return Ok((w, DMatrix::zeros(n, 0)));
    }
    let mut both = DMatrix::zeros(n, tl.ncols() + w.ncols());
    both.view_mut((0, 0), (n, tl.ncols())).copy_from(&tl);
    if w.ncols() > 0 {
        both.view_mut((0, tl.ncols()), (n, w.ncols())).copy_from(&w);
    }
    let gram = pi.leafwise_gram(p, &both)?;
    // Coefficients c with w(sum c_i B_i, W_j) = 0 for every j.
    let cross = gram.view((0, tl.ncols()), (tl.ncols(), w.ncols())).into_owned();
    let coeffs = if w.ncols() == 0 {
        DMatrix::identity(tl.ncols(), tl.ncols())
    } else {
        let scale = cross.amax();
        linalg::null_space_abs(&cross.transpose(), (tol_rank * scale).max(1e-12))
    };
    let perp = &tl * coeffs;
    Ok((w, perp))
}

/// Whether `T_pC ∩ T_pL` is coisotropic in the leaf; requires a clean point.
pub fn leafwise_coisotropy_check(pi: &PoissonStructure, c: &Submanifold, atlas: &LeafAtlas, p: &[f64], params: &CleanParams) -> Result<bool> {
    let v = classify(pi, c, atlas, p, params);
    if !v.kind.is_clean() {
        return Err(Error::NotClean {
            point: p.to_vec(),
            kind: format!("{:?}", v.kind),
        });
    }
    let (w, perp) = leafwise_orthogonal(pi, c, p, params.tol_rank)?;
    if perp.ncols() == 0 {
        return Ok(true);
    }
    Ok(linalg::sum_dim(&w, &perp, params.tol_rank) == w.ncols())
}

/// Characteristic span versus the kernel of the leaf form restricted to `W`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coincidence {
    pub char_dim: usize,
    pub kernel_dim: usize,
    pub angle: f64,
}

pub fn char_kernel_coincidence(pi: &PoissonStructure, c: &Submanifold, p: &[f64], tol_rank: f64) -> Result<Coincidence> {
    let data = c.characteristic_data(pi, p, tol_rank)?;
    let span = if data.dim == 0 {
        DMatrix::zeros(p.len(), 0)
    } else {
        linalg::column_space(&data.matrix(), tol_rank)
    };
    let (w, perp) = leafwise_orthogonal(pi, c, p, tol_rank)?;
    let kernel = linalg::intersection(&w, &linalg::column_space(&perp, tol_rank), tol_rank);
    Ok(Coincidence {
        char_dim: span.ncols(),
        kernel_dim: kernel.ncols(),
        angle: linalg::subspace_distance(&span, &kernel),
    })
}
