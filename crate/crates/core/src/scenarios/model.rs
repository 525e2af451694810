//! Scenario data model and its compiled form.

use crate::c0lab::{ClosedFlow, HameotopyFamily, MapFamily};
use crate::chart::{Chart, Grid};
use crate::clean::{LeafAtlas, Membership, Region};
use crate::coiso::Submanifold;
use crate::error::{Error, Result};
use crate::exprcore::ScalarField;
use crate::maps::SmoothMap;
use crate::poisson::{PoissonStructure, TOL_RANK};

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub a: String,
    pub b: String,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmanifoldSpec {
    pub name: String,
    pub define: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub name: String,
    /// `always`, `positive`, `negative`, `zero` or `nonzero`.
    pub member: String,
    pub field: Option<String>,
    pub rank: Option<usize>,
    pub invariants: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub name: String,
    pub params: Vec<String>,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub name: String,
    pub params: Vec<String>,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub name: String,
    /// Components with parameter `n`.
    pub members: Vec<String>,
    pub limit: Vec<String>,
    pub indices: Vec<f64>,
    pub probe: Vec<(f64, f64)>,
    pub probe_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HameotopySpec {
    pub name: String,
    pub hamiltonian: String,
    pub limit: Option<String>,
    /// `None` marks a component that is not compared; empty means no closed form.
    pub closed_form: Vec<Option<String>>,
    pub indices: Vec<f64>,
    pub time: f64,
    pub step: f64,
    pub seeds: Vec<(f64, f64)>,
    pub seed_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub name: String,
    pub kind: String,
    /// Raw `key = value` pairs in file order.
    pub args: Vec<(String, String)>,
}

impl CheckSpec {
    pub fn new(name: &str, kind: &str, args: &[(&str, &str)]) -> CheckSpec {
        CheckSpec {
            name: name.into(),
            kind: kind.into(),
            args: args.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub seed: u64,
    pub grid: usize,
    pub tol_rank: f64,
    pub projection: (String, String),
    pub chart: Vec<Axis>,
    pub poisson: Vec<Entry>,
    pub submanifolds: Vec<SubmanifoldSpec>,
    pub regions: Vec<RegionSpec>,
    pub hamiltonians: Vec<HamiltonianSpec>,
    pub maps: Vec<MapSpec>,
    pub families: Vec<FamilySpec>,
    pub hameotopies: Vec<HameotopySpec>,
    pub checks: Vec<CheckSpec>,
}

impl Scenario {
    pub fn new(name: &str, description: &str) -> Scenario {
        Scenario {
            name: name.into(),
            description: description.into(),
            seed: 0,
            grid: 101,
            tol_rank: TOL_RANK,
            projection: ("x".into(), "y".into()),
            chart: Vec::new(),
            poisson: Vec::new(),
            submanifolds: Vec::new(),
            regions: Vec::new(),
            hamiltonians: Vec::new(),
            maps: Vec::new(),
            families: Vec::new(),
            hameotopies: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn compile(&self) -> Result<Compiled> {
        Compiled::new(self)
    }
}

/// Parsed objects ready for the checks.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub chart: Chart,
    pub poisson: PoissonStructure,
    pub submanifolds: Vec<Submanifold>,
    pub atlas: LeafAtlas,
    pub hamiltonians: Vec<(String, ScalarField)>,
    pub maps: Vec<(String, ClosedFlow)>,
    pub families: Vec<MapFamily>,
    pub hameotopies: Vec<HameotopyFamily>,
    /// Seed lattice of each hameotopy, in the same order.
    pub hameotopy_seeds: Vec<Vec<Vec<f64>>>,
    pub projection: (usize, usize),
}

fn field(text: &str, coords: &[&str], params: &[&str]) -> Result<ScalarField> {
    Ok(ScalarField::parse(text, coords, params)?)
}

fn unresolved(message: String) -> Error {
    Error::Unresolved { line: 0, message }
}

impl Compiled {
    pub fn new(s: &Scenario) -> Result<Compiled> {
        let axes: Vec<(&str, f64, f64)> = s.chart.iter().map(|a| (a.name.as_str(), a.lo, a.hi)).collect();
        let chart = Chart::new(&axes)?;
        let names = chart.names();
        let entries: Vec<(&str, &str, &str)> = s.poisson.iter().map(|e| (e.a.as_str(), e.b.as_str(), e.expr.as_str())).collect();
        let poisson = PoissonStructure::parse(chart.clone(), &entries)?;
        let submanifolds = s
            .submanifolds
            .iter()
            .map(|m| {
                let fs = m.define.iter().map(|t| field(t, &names, &[])).collect::<Result<Vec<_>>>()?;
                Submanifold::new(&m.name, chart.clone(), fs)
            })
            .collect::<Result<Vec<_>>>()?;
        let regions = s
            .regions
            .iter()
            .map(|r| {
                let f = r.field.as_deref().map(|t| field(t, &names, &[])).transpose()?;
                let membership = match (r.member.as_str(), f) {
                    ("always", None) => Membership::Always,
                    ("positive", Some(f)) => Membership::Positive(f),
                    ("negative", Some(f)) => Membership::Negative(f),
                    ("zero", Some(f)) => Membership::Zero(f),
                    ("nonzero", Some(f)) => Membership::NonZero(f),
                    (k, _) => return Err(unresolved(format!("bad membership `{k}` in region `{}`", r.name))),
                };
                Ok(Region {
                    name: r.name.clone(),
                    membership,
                    rank: r.rank,
                    invariants: r.invariants.iter().map(|t| field(t, &names, &[])).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let hamiltonians = s
            .hamiltonians
            .iter()
            .map(|h| {
                let ps: Vec<&str> = h.params.iter().map(String::as_str).collect();
                Ok((h.name.clone(), field(&h.expr, &names, &ps)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let maps = s
            .maps
            .iter()
            .map(|m| {
                if m.components.len() != chart.dim() {
                    return Err(Error::Dimension {
                        expected: chart.dim(),
                        got: m.components.len(),
                    });
                }
                let ps: Vec<&str> = m.params.iter().map(String::as_str).collect();
                let components = m.components.iter().map(|t| field(t, &names, &ps)).collect::<Result<_>>()?;
                Ok((
                    m.name.clone(),
                    ClosedFlow {
                        components,
                        domain: chart.clone(),
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let families = s
            .families
            .iter()
            .map(|f| {
                if f.members.len() != chart.dim() || f.limit.len() != chart.dim() || f.probe.len() != chart.dim() {
                    return Err(Error::Dimension {
                        expected: chart.dim(),
                        got: f.members.len().min(f.limit.len()).min(f.probe.len()),
                    });
                }
                let limit = f.limit.iter().map(|t| Ok(field(t, &names, &[])?.bound())).collect::<Result<Vec<_>>>()?;
                Ok(MapFamily {
                    name: f.name.clone(),
                    members: f.members.iter().map(|t| field(t, &names, &["n"])).collect::<Result<_>>()?,
                    limit: SmoothMap::new(limit, chart.clone()),
                    domain: chart.clone(),
                    indices: f.indices.clone(),
                    probe: box_grid(&f.probe, f.probe_nodes),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let find_ham = |name: &str| {
            hamiltonians
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, f)| f.clone())
                .ok_or_else(|| unresolved(format!("unknown hamiltonian `{name}`")))
        };
        let hameotopies = s
            .hameotopies
            .iter()
            .map(|h| {
                let closed_form = if h.closed_form.is_empty() {
                    None
                } else {
                    if h.closed_form.len() != chart.dim() {
                        return Err(Error::Dimension {
                            expected: chart.dim(),
                            got: h.closed_form.len(),
                        });
                    }
                    Some(
                        h.closed_form
                            .iter()
                            .map(|c| c.as_deref().map(|t| field(t, &names, &["n", "t"])).transpose())
                            .collect::<Result<Vec<_>>>()?,
                    )
                };
                Ok(HameotopyFamily {
                    name: h.name.clone(),
                    hamiltonian: find_ham(&h.hamiltonian)?,
                    limit_hamiltonian: h.limit.as_deref().map(find_ham).transpose()?,
                    closed_form,
                    indices: h.indices.clone(),
                    time: h.time,
                    step: h.step,
                    support: chart.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let axis = |name: &str| chart.index_of(name).ok_or_else(|| unresolved(format!("unknown projection axis `{name}`")));
        let projection = (axis(&s.projection.0)?, axis(&s.projection.1)?);
        Ok(Compiled {
            chart,
            poisson,
            submanifolds,
            atlas: LeafAtlas::new(regions),
            hamiltonians,
            maps,
            families,
            hameotopies,
            hameotopy_seeds: s.hameotopies.iter().map(|h| box_grid(&h.seeds, h.seed_nodes).nodes()).collect(),
            projection,
        })
    }

    pub fn submanifold(&self, name: &str) -> Result<&Submanifold> {
        self.submanifolds
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| unresolved(format!("unknown submanifold `{name}`")))
    }

    pub fn hamiltonian(&self, name: &str) -> Result<&ScalarField> {
        self.hamiltonians
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| unresolved(format!("unknown hamiltonian `{name}`")))
    }

    pub fn map(&self, name: &str) -> Result<&ClosedFlow> {
        self.maps
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| unresolved(format!("unknown map `{name}`")))
    }

    pub fn family(&self, name: &str) -> Result<&MapFamily> {
        self.families
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| unresolved(format!("unknown family `{name}`")))
    }

    pub fn hameotopy(&self, name: &str) -> Result<&HameotopyFamily> {
        self.hameotopies
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| unresolved(format!("unknown hameotopy `{name}`")))
    }

    pub fn hameotopy_seeds(&self, name: &str) -> Result<&[Vec<f64>]> {
        self.hameotopies
            .iter()
            .position(|f| f.name == name)
            .map(|i| self.hameotopy_seeds[i].as_slice())
            .ok_or_else(|| unresolved(format!("unknown hameotopy `{name}`")))
    }
}

/// Grid over a box with `nodes` per axis.
pub fn box_grid(bounds: &[(f64, f64)], nodes: usize) -> Grid {
    Grid::new(
        bounds.iter().map(|b| b.0).collect(),
        bounds.iter().map(|b| b.1).collect(),
        vec![nodes.max(1); bounds.len()],
    )
}
