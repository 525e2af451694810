//! Maps between charts.

use std::fmt;

use nalgebra::DMatrix;

use crate::chart::Chart;
use crate::error::Result;
use crate::exprcore::{BoundField, Function, ScalarField};

/// A map that can be evaluated, and differentiated where smooth.
pub trait DiffMap: Send + Sync + fmt::Debug {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, p: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>>;
}

/// Components given by expressions, one per target coordinate, on a domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    pub components: Vec<BoundField>,
    pub domain: Chart,
}

impl SmoothMap {
    pub fn new(components: Vec<BoundField>, domain: Chart) -> SmoothMap {
        SmoothMap { components, domain }
    }

    /// Parses parameterless components over the domain's coordinates.
    pub fn parse(texts: &[&str], domain: &Chart) -> Result<SmoothMap> {
        let names = domain.names();
        let components = texts
            .iter()
            .map(|t| Ok(ScalarField::parse(t, &names, &[])?.bound()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SmoothMap::new(components, domain.clone()))
    }

    pub fn identity(domain: &Chart) -> SmoothMap {
        let names = domain.names();
        let components = (0..domain.dim())
            .map(|i| ScalarField::coordinate(i, &names).bound())
            .collect();
        SmoothMap::new(components, domain.clone())
    }
}

impl DiffMap for SmoothMap {
    fn dim_in(&self) -> usize {
        self.domain.dim()
    }
    fn dim_out(&self) -> usize {
        self.components.len()
    }
    fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.domain.check(p)?;
        Ok(self
            .components
            .iter()
            .map(|c| c.value(p))
            .collect::<std::result::Result<Vec<_>, _>>()?)
    }
    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.domain.check(p)?;
        let mut j = DMatrix::zeros(self.components.len(), p.len());
        for (i, c) in self.components.iter().enumerate() {
            j.set_row(i, &c.gradient(p)?.transpose());
        }
        Ok(j)
    }
}

/// Jacobian of `f` by central differences with step `h`.
pub fn numeric_jacobian(f: &dyn DiffMap, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = p.len();
    let mut j = DMatrix::zeros(f.dim_out(), n);
    let mut q = p.to_vec();
    for k in 0..n {
        q[k] = p[k] + h;
        let plus = f.apply(&q)?;
        q[k] = p[k] - h;
        let minus = f.apply(&q)?;
        q[k] = p[k];
        for i in 0..plus.len() {
            j[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(j)
}
