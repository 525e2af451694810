use proptest::prelude::*;

use poissonlab::c0lab::c0_distance;
use poissonlab::chart::Chart;
use poissonlab::exprcore::{Covector, ScalarField};
use poissonlab::flows::{self, FlowSpec};
use poissonlab::maps::SmoothMap;
use poissonlab::poisson::{PoissonStructure, TOL_RANK};
use poissonlab::scenarios::{self, Axis, CheckSpec, Entry, Scenario, SubmanifoldSpec};

fn cube(dim: usize, r: f64) -> Chart {
    let names = ["x", "y", "z", "u"];
    let axes: Vec<(&str, f64, f64)> = names[..dim].iter().map(|n| (*n, -r, r)).collect();
    Chart::new(&axes).unwrap()
}

/// Linear structure of so(3)*: {x, y} = z and cyclic.
fn so3() -> PoissonStructure {
    PoissonStructure::parse(cube(3, 2.0), &[("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y")]).unwrap()
}

fn quadratic() -> PoissonStructure {
    PoissonStructure::parse(cube(3, 2.0), &[("x", "y", "x^2 + y^2")]).unwrap()
}

/// Random polynomial of degree at most two in x, y, z.
fn poly() -> impl Strategy<Value = String> {
    prop::collection::vec(-3i32..=3, 10).prop_map(|c| {
        let monos = ["1", "x", "y", "z", "x*x", "x*y", "x*z", "y*y", "y*z", "z*z"];
        let terms: Vec<String> = c.iter().zip(monos).filter(|(k, _)| **k != 0).map(|(k, m)| format!("({k})*{m}")).collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 3)
}

fn field(text: &str) -> ScalarField {
    ScalarField::parse(text, &["x", "y", "z"], &[]).unwrap()
}

/// Random expression text over x, y, z built from the grammar's operators.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("z".to_string()),
        (1u8..9).prop_map(|k| k.to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("({a})^2")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cbrt({a})")),
            inner.prop_map(|a| format!("exp(({a})/10)")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(f in poly(), g in poly(), p in point()) {
        let pi = quadratic();
        let (f, g) = (field(&f), field(&g));
        let a = pi.bracket(&f, &g, &p).unwrap();
        let b = pi.bracket(&g, &f, &p).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn bracket_is_a_derivation(f in poly(), g in poly(), h in poly(), p in point()) {
        let pi = so3();
        let gh = field(&format!("({g})*({h})"));
        let (ff, gf, hf) = (field(&f), field(&g), field(&h));
        let lhs = pi.bracket(&ff, &gh, &p).unwrap();
        let rhs = pi.bracket(&ff, &gf, &p).unwrap() * hf.eval(&p, &[]).unwrap() + gf.eval(&p, &[]).unwrap() * pi.bracket(&ff, &hf, &p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn linear_structure_satisfies_jacobi(f in poly(), g in poly(), h in poly(), p in point()) {
        let pi = so3();
        let j = pi.jacobiator(&field(&f), &field(&g), &field(&h), &p).unwrap();
        prop_assert!(j.abs() <= 1e-6, "jacobiator {}", j);
    }

    #[test]
    fn pairing_matches_sharp(a in prop::collection::vec(-2.0f64..2.0, 3), b in prop::collection::vec(-2.0f64..2.0, 3), p in point()) {
        let pi = so3();
        let (a, b) = (Covector::from_vec(a), Covector::from_vec(b));
        let pair = pi.pair(&p, &a, &b).unwrap();
        let via_sharp = a.dot(&pi.sharp(&p, &b).unwrap());
        prop_assert!((pair.abs() - via_sharp.abs()).abs() <= 1e-12 * (1.0 + pair.abs()));
        prop_assert!((pair + pi.pair(&p, &b, &a).unwrap()).abs() <= 1e-12 * (1.0 + pair.abs()));
    }

    #[test]
    fn casimir_brackets_vanish(f in poly(), p in point()) {
        let pi = so3();
        let casimir = field("x^2 + y^2 + z^2");
        prop_assert!(pi.bracket(&casimir, &field(&f), &p).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn constant_bivectors_have_even_rank(c in prop::collection::vec(-2i32..=2, 6)) {
        let names = ["x", "y", "z", "u"];
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let texts: Vec<String> = c.iter().map(|k| k.to_string()).collect();
        let entries: Vec<(&str, &str, &str)> = pairs.iter().zip(&texts).map(|((i, j), t)| (names[*i], names[*j], t.as_str())).collect();
        let pi = PoissonStructure::parse(cube(4, 1.0), &entries).unwrap();
        let r = pi.rank_at(&[0.1, 0.2, 0.3, 0.4], TOL_RANK).unwrap();
        prop_assert_eq!(r % 2, 0);
    }

    #[test]
    fn text_reparses_to_the_same_function(e in expr_text(), p in point()) {
        let f = field(&e);
        let g = field(&f.text());
        let (a, b) = (f.eval(&p, &[]), g.eval(&p, &[]));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} vs {}", a, b),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn energy_is_conserved_on_so3(h in poly(), p in prop::collection::vec(-0.5f64..0.5, 3)) {
        let pi = so3();
        let hf = std::sync::Arc::new(field(&h));
        let spec = FlowSpec::new(hf.clone(), 0.2).with_step(1e-3);
        match flows::flow_point(&pi, &spec, &p) {
            Ok(q) => {
                let d = (hf.eval(&q, &[]).unwrap() - hf.eval(&p, &[]).unwrap()).abs();
                prop_assert!(d <= 1e-7, "energy drift {}", d);
                let c0 = p.iter().map(|v| v * v).sum::<f64>();
                let c1 = q.iter().map(|v| v * v).sum::<f64>();
                prop_assert!((c0 - c1).abs() <= 1e-7, "casimir drift {}", (c0 - c1).abs());
            }
            Err(poissonlab::Error::LeftDomain { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn c0_distance_is_a_pseudometric(
        a in prop::collection::vec(-2.0f64..2.0, 3),
        b in prop::collection::vec(-2.0f64..2.0, 3),
        c in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let chart = cube(3, 1.0);
        let shift = |v: &[f64]| {
            let t: Vec<String> = ["x", "y", "z"].iter().zip(v).map(|(n, s)| format!("{n} + ({s})*{n}*{n}")).collect();
            let refs: Vec<&str> = t.iter().map(String::as_str).collect();
            SmoothMap::parse(&refs, &chart).unwrap()
        };
        let (f, g, h) = (shift(&a), shift(&b), shift(&c));
        let nodes = chart.grid(5).nodes();
        let d = |x: &SmoothMap, y: &SmoothMap| c0_distance(x, y, &nodes).unwrap();
        prop_assert_eq!(d(&f, &f), 0.0);
        prop_assert!((d(&f, &g) - d(&g, &f)).abs() <= 1e-15);
        prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
    }

    #[test]
    fn scenario_files_round_trip(
        lo in -5.0f64..0.0,
        hi in 0.1f64..5.0,
        seed in any::<u64>(),
        grid in 2usize..300,
        coef in -9i32..9,
        args in prop::collection::vec(("[a-z_]{1,8}", "[a-zA-Z0-9 .-]{1,12}"), 0..4),
    ) {
        let mut s = Scenario::new("random", "generated \"scenario\"");
        s.seed = seed;
        s.grid = grid;
        s.chart = ["x", "y", "z"].iter().map(|n| Axis { name: n.to_string(), lo, hi }).collect();
        s.poisson = vec![Entry { a: "x".into(), b: "y".into(), expr: format!("{coef}*z + x^2") }];
        s.submanifolds = vec![SubmanifoldSpec { name: "S".into(), define: vec![format!("z - {coef}*x")] }];
        let mut check = CheckSpec::new("c", "jacobi", &[]);
        check.args = args.into_iter().map(|(k, v)| (k, v.trim().to_string())).filter(|(_, v)| !v.is_empty()).collect();
        s.checks = vec![check];
        let back = scenarios::load_str(&scenarios::save_str(&s)).unwrap();
        prop_assert_eq!(back, s);
    }
}
