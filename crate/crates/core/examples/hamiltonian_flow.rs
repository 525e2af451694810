//! Integrates a Hamiltonian flow, checks energy and Casimir drift, then flows back.

use std::sync::Arc;

use poissonlab::chart::Chart;
use poissonlab::exprcore::ScalarField;
use poissonlab::flows::{flow_point, integrate, FlowSpec};
use poissonlab::poisson::PoissonStructure;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chart = Chart::new(&[("x", -2.0, 2.0), ("y", -2.0, 2.0), ("z", -2.0, 2.0)])?;
    let pi = PoissonStructure::parse(chart, &[("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y")])?;
    let coords = ["x", "y", "z"];
    let h = Arc::new(ScalarField::parse("x^2/2 + y^2 + 3*z^2/2", &coords, &[])?);
    let casimir = ScalarField::parse("x^2 + y^2 + z^2", &coords, &[])?;

    let p0 = vec![0.6, 0.1, 0.5];
    let traj = integrate(&pi, &FlowSpec::new(h.clone(), 5.0).with_step(1e-3), &p0)?;
    let end = traj.last().unwrap().clone();
    println!("{} steps, end point {:.6?}", traj.points.len() - 1, end);
    println!("energy drift   {:.3e}", (h.eval(&end, &[])? - h.eval(&p0, &[])?).abs());
    println!("casimir drift  {:.3e}", (casimir.eval(&end, &[])? - casimir.eval(&p0, &[])?).abs());

    let back = flow_point(&pi, &FlowSpec::new(h.clone(), -5.0).with_step(1e-3), &end)?;
    let err = back.iter().zip(&p0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("reversal error {err:.3e}");

    let adaptive = flow_point(&pi, &FlowSpec::new(h, 5.0).adaptive(), &p0)?;
    let gap = adaptive.iter().zip(&end).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("adaptive vs fixed step {gap:.3e}");
    Ok(())
}
