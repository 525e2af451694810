//! Brackets, Jacobi identity and rank of a few structures on R^3.

use poissonlab::chart::Chart;
use poissonlab::exprcore::ScalarField;
use poissonlab::poisson::{lower_semicontinuity_check, PoissonStructure, TOL_RANK};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chart = Chart::new(&[("x", -1.0, 1.0), ("y", -1.0, 1.0), ("z", -1.0, 1.0)])?;
    let coords = ["x", "y", "z"];
    let f = ScalarField::parse("x*z", &coords, &[])?;
    let g = ScalarField::parse("y^2 + z", &coords, &[])?;
    let h = ScalarField::parse("x + y*z", &coords, &[])?;
    let p = [0.3, -0.2, 0.7];

    let structures = [
        ("so(3)*", vec![("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y")]),
        ("quadratic", vec![("x", "y", "x^2 + y^2")]),
        ("not Poisson", vec![("x", "y", "1"), ("y", "z", "x"), ("x", "z", "z")]),
    ];
    for (name, entries) in structures {
        let pi = PoissonStructure::parse(chart.clone(), &entries)?;
        println!("{name}");
        println!("  {{f, g}}       {:+.6}", pi.bracket(&f, &g, &p)?);
        println!("  jacobiator   {:.3e}", pi.jacobiator(&f, &g, &h, &p)?);
        println!("  rank at p    {}", pi.rank_at(&p, TOL_RANK)?);
        println!("  rank at 0    {}", pi.rank_at(&[0.0; 3], TOL_RANK)?);
        let lsc = lower_semicontinuity_check(&pi, &chart.shrunk(0.1).grid(9), 0.1, TOL_RANK)?;
        println!("  rank drops   {} of {} nodes violate lower semicontinuity", lsc.violations.len(), lsc.nodes);
    }
    Ok(())
}
