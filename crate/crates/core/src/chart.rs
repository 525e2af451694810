//! Coordinate charts, boxes and lattices.

use crate::error::{Error, Result};

/// A coordinate box with named axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub names: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Chart {
    pub fn new(axes: &[(&str, f64, f64)]) -> Result<Chart> {
        if axes.is_empty() {
            return Err(Error::InvalidChart("no coordinates".into()));
        }
        for (i, (name, lo, hi)) in axes.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidChart(format!("empty interval for `{name}`")));
            }
            if axes[..i].iter().any(|(other, _, _)| other == name) {
                return Err(Error::InvalidChart(format!("duplicate coordinate `{name}`")));
            }
        }
        Ok(Chart {
            names: axes.iter().map(|a| a.0.to_string()).collect(),
            lo: axes.iter().map(|a| a.1).collect(),
            hi: axes.iter().map(|a| a.2).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.names.iter().map(|s| s.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: p.to_vec() })
        }
    }

    /// The box shrunk by `margin` on every side (clamped to a point).
    pub fn shrunk(&self, margin: f64) -> Chart {
        let mut c = self.clone();
        for i in 0..c.dim() {
            let mid = 0.5 * (c.lo[i] + c.hi[i]);
            c.lo[i] = (c.lo[i] + margin).min(mid);
            c.hi[i] = (c.hi[i] - margin).max(mid);
        }
        c
    }

    /// A uniform lattice over the box with `n` nodes per axis.
    pub fn grid(&self, n: usize) -> Grid {
        Grid::new(self.lo.clone(), self.hi.clone(), vec![n; self.dim()])
    }
}

/// Axis-aligned lattice with `counts[i]` nodes on axis `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Grid {
        Grid { lo, hi, counts }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        if self.counts[axis] < 2 {
            0.0
        } else {
            (self.hi[axis] - self.lo[axis]) / (self.counts[axis] - 1) as f64
        }
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        if self.counts[axis] < 2 {
            0.5 * (self.lo[axis] + self.hi[axis])
        } else if k + 1 == self.counts[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + k as f64 * self.spacing(axis)
        }
    }

    /// Multi-index of flat node `flat`; the first axis varies slowest.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.counts.len()];
        for axis in (0..self.counts.len()).rev() {
            idx[axis] = flat % self.counts[axis];
            flat /= self.counts[axis];
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &k)| self.coord(axis, k))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Reduces per-axis counts until the total is at most `cap`; returns whether it coarsened.
    /// Counts drop in steps of two so odd counts keep their midpoint node.
    pub fn coarsen_to(&mut self, cap: usize) -> bool {
        let mut changed = false;
        while self.len() > cap.max(1) {
            let axis = (0..self.counts.len()).max_by_key(|&a| self.counts[a]).unwrap_or(0);
            if self.counts[axis] <= 1 {
                break;
            }
            self.counts[axis] -= if self.counts[axis] > 2 { 2 } else { 1 };
            changed = true;
        }
        changed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_validation() {
        assert!(Chart::new(&[("x", 0.0, 1.0), ("x", 0.0, 1.0)]).is_err());
        assert!(Chart::new(&[("x", 1.0, 0.0)]).is_err());
        let c = Chart::new(&[("x", -1.0, 1.0), ("y", 0.0, 2.0)]).unwrap();
        assert!(c.contains(&[1.0, 2.0]));
        assert!(matches!(c.check(&[1.5, 0.0]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn grid_nodes_hit_both_ends() {
        let g = Grid::new(vec![-1.0, 0.0], vec![1.0, 1.0], vec![3, 2]);
        assert_eq!(g.len(), 6);
        assert_eq!(g.node(0), vec![-1.0, 0.0]);
        assert_eq!(g.node(5), vec![1.0, 1.0]);
        assert_eq!(g.node(2), vec![0.0, 0.0]);
    }

    #[test]
    fn coarsening_respects_cap() {
        let mut g = Grid::new(vec![0.0; 3], vec![1.0; 3], vec![101; 3]);
        assert!(g.coarsen_to(1_000_000));
        assert!(g.len() <= 1_000_000);
        let mut g4 = Grid::new(vec![-1.0; 4], vec![1.0; 4], vec![101; 4]);
        g4.coarsen_to(1_000_000);
        assert_eq!(g4.counts, vec![33, 31, 31, 31]);
        assert!(g4.counts.iter().all(|c| c % 2 == 1));
    }
}
