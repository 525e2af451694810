//! Region-wise leaf invariants.

use crate::error::{Error, Result};
use crate::exprcore::ScalarField;

/// Threshold for the `Zero` membership test.
pub const ZERO_TOL: f64 = 1e-12;

/// Agreement tolerance for invariant values.
pub const INVARIANT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Always,
    Positive(ScalarField),
    Negative(ScalarField),
    Zero(ScalarField),
    NonZero(ScalarField),
}

impl Membership {
    pub fn test(&self, p: &[f64]) -> Result<bool> {
        Ok(match self {
            Membership::Always => true,
            Membership::Positive(f) => f.eval(p, &[])? > 0.0,
            Membership::Negative(f) => f.eval(p, &[])? < 0.0,
            Membership::Zero(f) => f.eval(p, &[])?.abs() <= ZERO_TOL,
            Membership::NonZero(f) => f.eval(p, &[])?.abs() > ZERO_TOL,
        })
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Membership::Always => "always",
            Membership::Positive(_) => "positive",
            Membership::Negative(_) => "negative",
            Membership::Zero(_) => "zero",
            Membership::NonZero(_) => "nonzero",
        }
    }

    pub fn field(&self) -> Option<&ScalarField> {
        match self {
            Membership::Always => None,
            Membership::Positive(f) | Membership::Negative(f) | Membership::Zero(f) | Membership::NonZero(f) => Some(f),
        }
    }
}

/// One region of the atlas: leaves inside it are level sets of `invariants`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub membership: Membership,
    /// Leaf dimension inside the region, when known.
    pub rank: Option<usize>,
    pub invariants: Vec<ScalarField>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LeafAtlas {
    pub regions: Vec<Region>,
}

/// Region index and invariant values of a point.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafLabel {
    pub region: usize,
    pub values: Vec<f64>,
}

impl LeafLabel {
    pub fn same_leaf(&self, other: &LeafLabel) -> bool {
        self.region == other.region
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a - b).abs() <= INVARIANT_TOL)
    }
}

impl LeafAtlas {
    pub fn new(regions: Vec<Region>) -> LeafAtlas {
        LeafAtlas { regions }
    }

    pub fn region_index(&self, p: &[f64]) -> Result<Option<usize>> {
        for (i, r) in self.regions.iter().enumerate() {
            if r.membership.test(p)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    pub fn label(&self, p: &[f64]) -> Result<Option<LeafLabel>> {
        let Some(region) = self.region_index(p)? else {
            return Ok(None);
        };
        let values = self.regions[region]
            .invariants
            .iter()
            .map(|g| g.eval(p, &[]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Some(LeafLabel { region, values }))
    }

    /// Largest drift of the invariants of the region of `start` along `path`,
    /// counting only samples that stay in that region.
    pub fn drift_along(&self, start: &[f64], path: &[Vec<f64>]) -> Result<f64> {
        let Some(l0) = self.label(start)? else {
            return Err(Error::Precondition("start point lies in no atlas region".into()));
        };
        let mut worst = 0.0_f64;
        for q in path {
            if let Some(l) = self.label(q)? {
                if l.region == l0.region {
                    for (a, b) in l.values.iter().zip(&l0.values) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_are_tried_in_order() {
        let names = ["x", "y", "z"];
        let r2 = ScalarField::parse("x^2 + y^2", &names, &[]).unwrap();
        let z = ScalarField::parse("z", &names, &[]).unwrap();
        let atlas = LeafAtlas::new(vec![
            Region {
                name: "axis".into(),
                membership: Membership::Zero(r2.clone()),
                rank: Some(0),
                invariants: (0..3).map(|i| ScalarField::coordinate(i, &names)).collect(),
            },
            Region {
                name: "rest".into(),
                membership: Membership::Always,
                rank: Some(2),
                invariants: vec![z],
            },
        ]);
        assert_eq!(atlas.region_index(&[0.0, 0.0, 1.0]).unwrap(), Some(0));
        let a = atlas.label(&[1.0, 0.0, 0.5]).unwrap().unwrap();
        let b = atlas.label(&[0.0, -3.0, 0.5]).unwrap().unwrap();
        assert!(a.same_leaf(&b));
        let c = atlas.label(&[0.0, 0.0, 0.5]).unwrap().unwrap();
        assert!(!a.same_leaf(&c));
    }
}
