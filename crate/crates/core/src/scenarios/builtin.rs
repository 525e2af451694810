//! The shipped scenarios.

use super::model::*;
use crate::error::{Error, Result};

const NAMES: [(&str, &str); 8] = [
    ("cubic-graph", "graph z = x^3 in R^3 with leaves z = const; transverse off x = 0"),
    ("quadratic-singular", "(x^2 + y^2) dx^dy with N = {z = x^2}; clean origin, non-clean y-axis"),
    ("clean-not-open", "bumped hypersurface whose non-clean points accumulate on a clean one"),
    ("clean-to-nonclean-flow", "C0 limit of Hamiltonian flows taking z = x onto z = x^3"),
    ("translation-cubic", "Poisson homeomorphism (x, y, z) -> (x + 1, y, (cbrt(z) + 1)^3)"),
    ("zero-poisson-cbrt", "zero structure with coordinatewise cube roots as a C0 limit"),
    ("interpolating-surface", "hypersurface interpolating z = x and z = x^3 along y; non-clean band"),
    ("b-poisson", "dx^dy + u du^dz in R^4 with C = {u = f(x, y)}"),
];

/// Names and one-line descriptions of the built-in scenarios.
pub fn names_and_descriptions() -> Vec<(&'static str, &'static str)> {
    NAMES.to_vec()
}

pub fn builtin(name: &str) -> Result<Scenario> {
    Ok(match name {
        "cubic-graph" => cubic_graph(),
        "quadratic-singular" => quadratic_singular(),
        "clean-not-open" => clean_not_open(),
        "clean-to-nonclean-flow" => clean_to_nonclean_flow(),
        "translation-cubic" => translation_cubic(),
        "zero-poisson-cbrt" => zero_poisson_cbrt(),
        "interpolating-surface" => interpolating_surface(),
        "b-poisson" => b_poisson(),
        other => return Err(Error::UnknownScenario(other.to_string())),
    })
}

fn describe(name: &str) -> &'static str {
    NAMES.iter().find(|(n, _)| *n == name).map(|(_, d)| *d).unwrap_or("")
}

fn base(name: &str, axes: &[(&str, f64, f64)]) -> Scenario {
    let mut s = Scenario::new(name, describe(name));
    s.chart = axes
        .iter()
        .map(|(n, lo, hi)| Axis {
            name: n.to_string(),
            lo: *lo,
            hi: *hi,
        })
        .collect();
    s
}

fn entry(a: &str, b: &str, e: &str) -> Entry {
    Entry {
        a: a.into(),
        b: b.into(),
        expr: e.into(),
    }
}

fn sub(name: &str, define: &[&str]) -> SubmanifoldSpec {
    SubmanifoldSpec {
        name: name.into(),
        define: define.iter().map(|d| d.to_string()).collect(),
    }
}

fn region(name: &str, member: &str, field: Option<&str>, rank: usize, invariants: &[&str]) -> RegionSpec {
    RegionSpec {
        name: name.into(),
        member: member.into(),
        field: field.map(str::to_string),
        rank: Some(rank),
        invariants: invariants.iter().map(|i| i.to_string()).collect(),
    }
}

fn ham(name: &str, params: &[&str], expr: &str) -> HamiltonianSpec {
    HamiltonianSpec {
        name: name.into(),
        params: params.iter().map(|p| p.to_string()).collect(),
        expr: expr.into(),
    }
}

fn map(name: &str, params: &[&str], components: &[&str]) -> MapSpec {
    MapSpec {
        name: name.into(),
        params: params.iter().map(|p| p.to_string()).collect(),
        components: components.iter().map(|c| c.to_string()).collect(),
    }
}

fn check(name: &str, kind: &str, args: &[(&str, &str)]) -> CheckSpec {
    CheckSpec::new(name, kind, args)
}

fn q(e: &str) -> String {
    format!("\"{e}\"")
}

/// Smooth monotone approximation of the cube root, in the parameter `n`.
fn hn(s: &str) -> String {
    format!("({s})*(({s})^2 + 1/n^3)^(-1/3)")
}

const DECADES: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

fn unit_box(dim: usize) -> Vec<(f64, f64)> {
    vec![(-1.0, 1.0); dim]
}

fn cubic_graph() -> Scenario {
    let mut s = base("cubic-graph", &[("x", -2.0, 2.0), ("y", -2.0, 2.0), ("z", -8.0, 8.0)]);
    s.poisson = vec![entry("x", "y", "1")];
    s.submanifolds = vec![sub("C", &["z - x^3"]), sub("A", &["x", "y"])];
    s.regions = vec![region("all", "always", None, 2, &["z"])];
    s.hamiltonians = vec![ham("H0", &[], "x - cbrt(z)"), ham("E", &[], "x^2/2 + y^2/2 + z")];
    s.maps = vec![map("flowY", &["t"], &["x", "y + t", "z"])];
    let x = q("x");
    s.checks = vec![
        check("jacobi", "jacobi", &[]),
        check("rank-map", "rank-map", &[]),
        check("lsc", "lower-semicontinuity", &[]),
        check("coisotropic-C", "coisotropy", &[("submanifold", "C")]),
        check("axis-not-coisotropic", "coisotropy", &[("submanifold", "A"), ("expect", "false")]),
        check("char-dim", "char-dim", &[("submanifold", "C"), ("degenerate", &x), ("low", "0"), ("high", "1")]),
        check("char-trace", "char-trace", &[("submanifold", "C"), ("avoid", &x), ("box", "-1.5 1.5"), ("box", "-1.5 1.5"), ("box", "-3 3")]),
        check("clean-scan", "clean-scan", &[("submanifold", "C"), ("window", "-1 1 -1 1"), ("nonclean_locus", &x), ("elsewhere", "Transverse")]),
        check("classify", "classify", &[("submanifold", "C"), ("expect", "Transverse 1 0 1"), ("expect", "NonClean 0 0 0")]),
        check("leafwise-coisotropy", "leafwise-coisotropy", &[("submanifold", "C")]),
        check("leafwise-coisotropy-axis", "leafwise-coisotropy", &[("submanifold", "A"), ("probes", "50")]),
        check("char-coincidence", "char-coincidence", &[("submanifold", "C")]),
        check("vanishing-ideal", "vanishing-ideal", &[("submanifold", "C")]),
        check("energy", "energy", &[("hamiltonian", "E")]),
        check("reversal", "reversal", &[("hamiltonian", "E")]),
        check("partition-probe", "partition-probe", &[("submanifold", "C"), ("generator", "H0 flowY"), ("start", "0 0 0"), ("expect", "larger")]),
        check("same-leaf", "same-leaf", &[("p", "1 0 1"), ("q", "0.5 0.3 1"), ("expect", "same")]),
        check("different-leaf", "same-leaf", &[("p", "1 0 1"), ("q", "1 0 0.5"), ("expect", "different")]),
    ];
    s
}

fn quadratic_singular() -> Scenario {
    let mut s = base("quadratic-singular", &[("x", -1.0, 1.0), ("y", -1.0, 1.0), ("z", -2.0, 2.0)]);
    let r2 = "x^2 + y^2";
    s.poisson = vec![entry("x", "y", r2)];
    s.submanifolds = vec![sub("N", &["z - x^2"])];
    s.regions = vec![
        region("axis", "zero", Some(r2), 0, &["x", "y", "z"]),
        region("off-axis", "positive", Some(r2), 2, &["z"]),
    ];
    s.hamiltonians = vec![ham("H", &[], "(x^2 + y^2)/2")];
    s.checks = vec![
        check("jacobi", "jacobi", &[]),
        check("rank-map", "rank-map", &[("plane", "x z")]),
        check("lsc", "lower-semicontinuity", &[]),
        check("coisotropic-N", "coisotropy", &[("submanifold", "N")]),
        check("classify", "classify", &[("submanifold", "N"), ("expect", "CleanNonTransverse 0 0 0"), ("segment", "NonClean 0.95 40 0 -1 0 0 1 0")]),
        check("clean-scan", "clean-scan", &[("submanifold", "N")]),
        check("leafwise-coisotropy", "leafwise-coisotropy", &[("submanifold", "N")]),
        check("char-coincidence", "char-coincidence", &[("submanifold", "N")]),
        check("vanishing-ideal", "vanishing-ideal", &[("submanifold", "N")]),
        check("energy", "energy", &[("hamiltonian", "H")]),
        check("reversal", "reversal", &[("hamiltonian", "H")]),
    ];
    s
}

fn bump_sum() -> String {
    (1..=6)
        .map(|n| format!("exp(-{})*(1 - min(exp({n})*((x - 1/{n})^2 + y^2), 1))^3", n * n))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn clean_not_open() -> Scenario {
    let mut s = base("clean-not-open", &[("x", -0.5, 1.5), ("y", -1.0, 1.0), ("z", -1.0, 1.0), ("w", -1.0, 1.0)]);
    s.poisson = vec![entry("y", "w", "1")];
    let f = format!("z - ({})", bump_sum());
    s.submanifolds = vec![sub("N", &[&f])];
    s.regions = vec![region("all", "always", None, 2, &["x", "z"])];
    s.hamiltonians = vec![ham("E", &[], "y^2/2 + w^2/2 + x*z")];
    s.checks = vec![
        check("jacobi", "jacobi", &[]),
        check("rank-map", "rank-map", &[]),
        check("lsc", "lower-semicontinuity", &[("nodes", "7")]),
        check("coisotropic-N", "coisotropy", &[("submanifold", "N")]),
        check(
            "classify",
            "classify",
            &[
                ("submanifold", "N"),
                ("expect", "CleanNonTransverse 0 0 0 0"),
                ("expect", "NonClean 1 0 0 0"),
                ("expect", "NonClean 0.5 0 0 0"),
                ("expect", "NonClean 0.3333333333333333 0 0 0"),
            ],
        ),
        check("clean-scan", "clean-scan", &[("submanifold", "N")]),
        check("leafwise-coisotropy", "leafwise-coisotropy", &[("submanifold", "N")]),
        check("char-coincidence", "char-coincidence", &[("submanifold", "N")]),
        check("vanishing-ideal", "vanishing-ideal", &[("submanifold", "N")]),
        check("energy", "energy", &[("hamiltonian", "E")]),
        check("reversal", "reversal", &[("hamiltonian", "E")]),
    ];
    s
}

fn clean_to_nonclean_flow() -> Scenario {
    let mut s = base("clean-to-nonclean-flow", &[("x", -2.0, 2.0), ("y", -2.0, 2.0), ("z", -2.0, 2.0)]);
    s.poisson = vec![entry("x", "y", "1")];
    s.submanifolds = vec![sub("C", &["z - x"]), sub("Cp", &["z - x^3"])];
    s.regions = vec![region("all", "always", None, 2, &["z"])];
    s.hamiltonians = vec![
        ham("Hn", &["n"], &format!("(z - {})*y", hn("z"))),
        ham("H", &[], "(z - cbrt(z))*y"),
        ham("G", &[], "y*(z - x)"),
    ];
    s.maps = vec![
        map("phi", &["t"], &["x + t*(cbrt(z) - z)", "y", "z"]),
        map("flowG", &["t"], &["z + (x - z)*exp(t)", "y*exp(-t)", "z"]),
    ];
    s.families = vec![FamilySpec {
        name: "psi".into(),
        members: vec![format!("x + {} - z", hn("z")), "y".into(), "z".into()],
        limit: vec!["x + cbrt(z) - z".into(), "y".into(), "z".into()],
        indices: DECADES.to_vec(),
        probe: unit_box(3),
        probe_nodes: 21,
    }];
    s.hameotopies = vec![
        HameotopySpec {
            name: "F".into(),
            hamiltonian: "Hn".into(),
            limit: Some("H".into()),
            closed_form: vec![Some(format!("x + t*({} - z)", hn("z"))), Some("y".into()), Some("z".into())],
            indices: vec![1e1, 1e4],
            time: 1.0,
            step: 1e-2,
            seeds: unit_box(3),
            seed_nodes: 21,
        },
        HameotopySpec {
            name: "FL".into(),
            hamiltonian: "Hn".into(),
            limit: Some("H".into()),
            closed_form: vec![Some("x + t*(cbrt(z) - z)".into()), Some("y".into()), Some("z".into())],
            indices: DECADES.to_vec(),
            time: 1.0,
            step: 1e-2,
            seeds: unit_box(3),
            seed_nodes: 5,
        },
    ];
    s.checks = vec![
        check("jacobi", "jacobi", &[]),
        check("rank-map", "rank-map", &[]),
        check("coisotropic-C", "coisotropy", &[("submanifold", "C")]),
        check("coisotropic-Cp", "coisotropy", &[("submanifold", "Cp")]),
        check("flow-closed-form", "hameotopy", &[("hameotopy", "F"), ("mode", "each"), ("tol", "1e-8")]),
        check("flow-limit", "hameotopy", &[("hameotopy", "FL"), ("mode", "largest"), ("tol", "1e-3")]),
        check("c0-family", "c0-family", &[("family", "psi"), ("tol", "1e-2")]),
        check("leaf-mapping", "leaf-mapping", &[("family", "psi")]),
        check("leafwise-symplectic", "leafwise-symplectic", &[("family", "psi")]),
        check("image-of-C", "map-image", &[("source", "C"), ("target", "Cp"), ("map", "phi"), ("time", "1"), ("inverse", "phi"), ("box", "-1 1"), ("box", "-1 1"), ("box", "-1 1")]),
        check("char-image", "char-image", &[("source", "C"), ("target", "Cp"), ("map", "phi"), ("time", "1"), ("seed", "0 0.5 0"), ("expect", "drop")]),
        check("energy", "energy", &[("hamiltonian", "Hn"), ("bind", "n 1000"), ("step", "1e-2"), ("box", "-1 1"), ("box", "-1 1"), ("box", "-1 1")]),
        check("reversal", "reversal", &[("hamiltonian", "Hn"), ("bind", "n 1000"), ("step", "1e-2"), ("box", "-1 1"), ("box", "-1 1"), ("box", "-1 1")]),
        check("clean-scan-C", "clean-scan", &[("submanifold", "C")]),
        check("clean-scan-Cp", "clean-scan", &[("submanifold", "Cp"), ("window", "-1 1 -1 1")]),
        check("leafwise-coisotropy-C", "leafwise-coisotropy", &[("submanifold", "C")]),
        check("leafwise-coisotropy-Cp", "leafwise-coisotropy", &[("submanifold", "Cp")]),
        check("vanishing-ideal-C", "vanishing-ideal", &[("submanifold", "C")]),
        check("vanishing-ideal-Cp", "vanishing-ideal", &[("submanifold", "Cp")]),
        check("smooth-partition", "partition-probe", &[("submanifold", "C"), ("generator", "G flowG"), ("start", "0.3 0.5 0.3"), ("expect", "within")]),
    ];
    s
}

fn translation_cubic() -> Scenario {
    let mut s = base("translation-cubic", &[("x", -1.0, 3.0), ("y", -1.0, 1.0), ("z", -1.0, 9.0)]);
    s.poisson = vec![entry("x", "y", "1")];
    s.submanifolds = vec![sub("C", &["z - x^3"])];
    s.regions = vec![region("all", "always", None, 2, &["z"])];
    s.hamiltonians = vec![ham("E", &[], "x^2/2 + y^2/2 + z")];
    let h = hn("z");
    s.maps = vec![
        map("tau", &[], &["x + 1", "y", "(cbrt(z) + 1)^3"]),
        map("tauinv", &[], &["x - 1", "y", "(cbrt(z) - 1)^3"]),
    ];
    s.families = vec![FamilySpec {
        name: "psi".into(),
        members: vec!["x + 1".into(), "y".into(), format!("({h} + 1)^3 + ({h} + 1)/n")],
        limit: vec!["x + 1".into(), "y".into(), "(cbrt(z) + 1)^3".into()],
        indices: DECADES.to_vec(),
        probe: unit_box(3),
        probe_nodes: 21,
    }];
    s.checks = vec![
        check("jacobi", "jacobi", &[]),
        check("rank-map", "rank-map", &[]),
        check("coisotropic-C", "coisotropy", &[("submanifold", "C")]),
        check("c0-family", "c0-family", &[("family", "psi"), ("tol", "1e-2")]),
        check("leaf-mapping", "leaf-mapping", &[("family", "psi")]),
        check("leafwise-symplectic", "leafwise-symplectic", &[("family", "psi")]),
        check("image-of-C", "map-image", &[("source", "C"), ("target", "C"), ("map", "tau"), ("inverse", "tauinv"), ("box", "-1 1"), ("box", "-1 1"), ("box", "-1 1")]),
        check("char-image", "char-image", &[("source", "C"), ("target", "C"), ("map", "tau"), ("seed", "0 0 0"), ("expect", "jump")]),
        check("clean-scan", "clean-scan", &[("submanifold", "C"), ("window", "-1 1 -1 1")]),
        check("leafwise-coisotropy", "leafwise-coisotropy", &[("submanifold", "C")]),
        check("vanishing-ideal", "vanishing-ideal", &[("submanifold", "C")]),
        check("energy", "energy", &[("hamiltonian", "E"), ("box", "-0.5 0.5"), ("box", "-0.5 0.5"), ("box", "0 1")]),
        check("reversal", "reversal", &[("hamiltonian", "E"), ("box", "-0.5 0.5"), ("box", "-0.5 0.5"), ("box", "0 1")]),
    ];
    s
}

fn zero_poisson_cbrt() -> Scenario {
    let mut s = base("zero-poisson-cbrt", &[("x", -1.5, 1.5), ("y", -1.5, 1.5), ("z", -1.5, 1.5)]);
    s.regions = vec![region("all", "always", None, 0, &["x", "y", "z"])];
    s.families = vec![FamilySpec {
        name: "cbrt".into(),
        members: vec![hn("x"), hn("y"), hn("z")],
        limit: vec!["cbrt(x)".into(), "cbrt(y)".into(), "cbrt(z)".into()],
        indices: DECADES.to_vec(),
        probe: unit_box(3),
        probe_nodes: 21,
    }];
    s.checks = vec![
        check("jacobi", "jacobi", &[]),
        check("rank-map", "rank-map", &[]),
        check("lsc", "lower-semicontinuity", &[]),
        check("c0-family", "c0-family", &[("family", "cbrt"), ("tol", "1e-2")]),
        check("leaf-mapping", "leaf-mapping", &[("family", "cbrt")]),
        check("leafwise-symplectic", "leafwise-symplectic", &[("family", "cbrt")]),
    ];
    s
}

/// Implicit inverse of `r -> (1 - w) r + w r^3 (+ r/n^2)` at `level`.
fn implicit(w: &str, level: &str, regularized: bool) -> String {
    let reg = if regularized { " + r/n^2" } else { "" };
    format!("root(r: (1 - {w})*r + {w}*r^3{reg} - {level})")
}

fn interp_weight(y: &str) -> String {
    format!("smoothstep((1.5 - ({y}))/0.5)*smoothstep((1.5 + ({y}))/0.5)")
}

fn interpolating_surface() -> Scenario {
    let mut s = base("interpolating-surface", &[("x", -2.0, 2.0), ("y", -3.0, 3.0), ("z", -2.0, 2.0)]);
    s.poisson = vec![entry("x", "y", "1")];
    let w = interp_weight("y");
    s.submanifolds = vec![sub("C", &[&format!("z - ((1 - {w})*x + {w}*x^3)")])];
    s.regions = vec![region("all", "always", None, 2, &["z"])];
    let g = |y: &str| implicit(&interp_weight(y), "z", false);
    s.hamiltonians = vec![
        ham("Hn", &["n"], &format!("x - {}", implicit(&w, "z", true))),
        ham("H", &[], &format!("x - {}", g("y"))),
    ];
    let shift = format!("x + {} - {}", g("y + t"), g("y"));
    s.maps = vec![map("flow", &["t"], &[&shift, "y + t", "z"])];
    s.hameotopies = vec![HameotopySpec {
        name: "F".into(),
        hamiltonian: "Hn".into(),
        limit: Some("H".into()),
        closed_form: vec![Some(shift.clone()), Some("y + t".into()), Some("z".into())],
        indices: vec![1e2, 1e4, 1e6],
        time: 1.0,
        step: 1e-2,
        seeds: vec![(-1.0, 1.0), (-2.0, 0.0), (-1.0, 1.0)],
        seed_nodes: 5,
    }];
    let flow_box: [(&str, &str); 3] = [("box", "-1 1"), ("box", "-2 2"), ("box", "-1 1")];
    let with_box = |head: &[(&'static str, &'static str)]| -> Vec<(&'static str, &'static str)> { head.iter().copied().chain(flow_box).collect() };
    s.checks = vec![
        check("jacobi", "jacobi", &[]),
        check("coisotropic-C", "coisotropy", &[("submanifold", "C")]),
        check("clean-scan", "clean-scan", &[("submanifold", "C"), ("window", "-1 1 -2 2")]),
        check("hameotopy", "hameotopy", &[("hameotopy", "F"), ("mode", "largest"), ("tol", "1e-3")]),
        check("image-of-C", "map-image", &with_box(&[("source", "C"), ("target", "C"), ("map", "flow"), ("time", "1"), ("inverse", "flow")])),
        check("partition-probe", "partition-probe", &[("submanifold", "C"), ("generator", "H flow"), ("start", "0 -1.8 0"), ("expect", "larger")]),
        check("char-image", "char-image", &[("source", "C"), ("target", "C"), ("map", "flow"), ("time", "1"), ("seed", "0 -1.8 0"), ("expect", "drop")]),
        check("energy", "energy", &with_box(&[("hamiltonian", "Hn"), ("bind", "n 1000"), ("step", "1e-3")])),
        check("reversal", "reversal", &with_box(&[("hamiltonian", "Hn"), ("bind", "n 1000"), ("step", "1e-2")])),
        check("leafwise-coisotropy", "leafwise-coisotropy", &[("submanifold", "C")]),
        check("vanishing-ideal", "vanishing-ideal", &[("submanifold", "C")]),
    ];
    s
}

fn b_weight(y: &str) -> String {
    format!("smoothstep((({y}) + 1)/2)")
}

fn b_poisson() -> Scenario {
    let mut s = base("b-poisson", &[("x", -4.0, 4.0), ("y", -4.0, 4.0), ("z", -4.0, 4.0), ("u", -1.0, 1.0)]);
    s.poisson = vec![entry("x", "y", "1"), entry("z", "u", "-u")];
    let w = b_weight("y");
    s.submanifolds = vec![sub("C", &[&format!("u - ((1 - {w})*x + {w}*x^3)")])];
    s.regions = vec![
        region("degenerate", "zero", Some("u"), 2, &["z", "u"]),
        region("upper", "positive", Some("u"), 4, &[]),
        region("lower", "negative", Some("u"), 4, &[]),
    ];
    let g = |y: &str| implicit(&b_weight(y), "u", false);
    s.hamiltonians = vec![
        ham("Hn", &["n"], &format!("x - {}", implicit(&w, "u", true))),
        ham("H", &[], &format!("x - {}", g("y"))),
    ];
    let shift = format!("x + {} - {}", g("y + t"), g("y"));
    s.maps = vec![map("flow", &["t"], &[&shift, "y + t", "z", "u"])];
    s.hameotopies = vec![HameotopySpec {
        name: "F".into(),
        hamiltonian: "Hn".into(),
        limit: Some("H".into()),
        closed_form: vec![Some(shift.clone()), Some("y + t".into()), None, Some("u".into())],
        indices: vec![1e2, 1e4, 1e6],
        time: 2.0,
        step: 1e-2,
        seeds: vec![(-1.0, 1.0), (-2.0, 0.0), (0.0, 0.0), (-1.0, 1.0)],
        seed_nodes: 3,
    }];
    let flow_box: [(&str, &str); 4] = [("box", "-1 1"), ("box", "-2 1"), ("box", "-1 1"), ("box", "-1 1")];
    let with_box = |head: &[(&'static str, &'static str)]| -> Vec<(&'static str, &'static str)> { head.iter().copied().chain(flow_box).collect() };
    s.checks = vec![
        check("jacobi", "jacobi", &[]),
        check("rank-map", "rank-map", &[("plane", "y u")]),
        check("lsc", "lower-semicontinuity", &[("nodes", "9")]),
        check("coisotropic-C", "coisotropy", &[("submanifold", "C")]),
        check("clean-scan", "clean-scan", &[("submanifold", "C"), ("window", "-0.9 0.9 -3 3")]),
        check("hameotopy", "hameotopy", &[("hameotopy", "F"), ("mode", "largest"), ("tol", "1e-3")]),
        check("image-of-C", "map-image", &with_box(&[("source", "C"), ("target", "C"), ("map", "flow"), ("time", "3")])),
        check("char-image", "char-image", &[("source", "C"), ("target", "C"), ("map", "flow"), ("time", "3"), ("arc", "1"), ("seed", "0 -1.5 0 0"), ("expect", "drop")]),
        check("energy", "energy", &with_box(&[("hamiltonian", "Hn"), ("bind", "n 1000"), ("step", "1e-2")])),
        check("reversal", "reversal", &with_box(&[("hamiltonian", "Hn"), ("bind", "n 1000"), ("step", "1e-2")])),
        check("leafwise-coisotropy", "leafwise-coisotropy", &[("submanifold", "C")]),
        check("char-coincidence", "char-coincidence", &[("submanifold", "C")]),
        check("vanishing-ideal", "vanishing-ideal", &[("submanifold", "C")]),
    ];
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_compiles() {
        for (name, _) in names_and_descriptions() {
            let s = builtin(name).unwrap();
            assert_eq!(s.name, name);
            s.compile().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(builtin("nonexistent"), Err(Error::UnknownScenario(_))));
    }
}
