//! Coisotropy, characteristic dimension and a traced characteristic leaf of z = x^3.

use poissonlab::chart::Chart;
use poissonlab::coiso::Submanifold;
use poissonlab::poisson::{PoissonStructure, TOL_RANK};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chart = Chart::new(&[("x", -2.0, 2.0), ("y", -2.0, 2.0), ("z", -8.0, 8.0)])?;
    let pi = PoissonStructure::parse(chart.clone(), &[("x", "y", "1")])?;
    let c = Submanifold::parse("C", &chart, &["z - x^3"])?;
    let axis = Submanifold::parse("A", &chart, &["x", "y"])?;

    for p in [[0.0, 0.0, 0.0], [1.0, 0.5, 1.0], [-0.7, 0.0, -0.343]] {
        let w = c.is_coisotropic_at(&pi, &p, 1e-10)?;
        let ch = c.characteristic_data(&pi, &p, TOL_RANK)?;
        println!("C at {p:?}: coisotropic {} (witness {:.1e}), char dim {}", w.coisotropic, w.value, ch.dim);
    }
    let w = axis.is_coisotropic_at(&pi, &[0.0, 0.0, 1.0], 1e-10)?;
    println!("z-axis: coisotropic {} with |Pi(d{}, d{})| = {}", w.coisotropic, w.pair.0, w.pair.1, w.value);

    let start = c.project_to(&[1.0, 0.0, 1.2])?;
    let leaf = c.trace_characteristic_leaf(&pi, &start, 1.0)?;
    println!("leaf through {start:.4?}");
    for q in leaf.points.iter().step_by(leaf.points.len().div_ceil(6)) {
        println!("  {q:+.4?} residual {:.1e}", c.residual(q)?);
    }
    Ok(())
}
