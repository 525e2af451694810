//! Classifies points of z = x^2 under the quadratic structure and scans a patch.

use poissonlab::clean::{classify, clean_locus_scan, CleanParams};
use poissonlab::scenarios::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("quadratic-singular")?.compile()?;
    let (pi, atlas) = (&model.poisson, &model.atlas);
    let n = &model.submanifolds[0];
    let params = CleanParams::default();

    for p in [[0.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.5, 0.5, 0.25]] {
        let v = classify(pi, n, atlas, &p, &params);
        println!(
            "{p:?}: {:?} (tangent dim {}, estimated {:?}, {}/{} seeds converged)",
            v.kind, v.tangent_int_dim, v.estimated_int_dim, v.diagnostics.converged, v.diagnostics.seeds
        );
    }

    let seeds: Vec<Vec<f64>> = (0..9).flat_map(|i| (0..9).map(move |j| vec![-0.8 + 0.2 * i as f64, -0.8 + 0.2 * j as f64, 0.0])).collect();
    let scan = clean_locus_scan(pi, n, atlas, &seeds, &params);
    println!("scan of {} points, clean fraction {:.3}", scan.summary.total, scan.summary.clean_fraction);
    for (kind, count) in &scan.summary.counts {
        println!("  {kind:?}: {count}");
    }
    Ok(())
}
