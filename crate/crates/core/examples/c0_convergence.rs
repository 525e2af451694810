//! Smooth Poisson maps converging in C0 to a non-smooth limit, and a hameotopy
//! whose members converge to a closed-form flow.

use poissonlab::c0lab::{run_hameotopy, verify_family};
use poissonlab::scenarios::builtin;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = builtin("translation-cubic")?.compile()?;
    let fam = &model.families[0];
    let probes = fam.probe.nodes();
    let report = verify_family(&model.poisson, fam, &probes)?;
    println!("family {}", fam.name);
    println!("{:>8} {:>12} {:>12}", "n", "residual", "d_K");
    for row in &report.rows {
        println!("{:>8.0e} {:>12.3e} {:>12.3e}", row.index, row.residual, row.distance);
    }
    println!("distances non-increasing: {}", report.non_increasing);

    let model = builtin("clean-to-nonclean-flow")?.compile()?;
    let ham = &model.hameotopies[0];
    let seeds = &model.hameotopy_seeds[0];
    let rep = run_hameotopy(&model.poisson, ham, seeds, ham.time)?;
    println!("hameotopy {} over {} seeds up to t = {}", ham.name, seeds.len(), ham.time);
    for (k, n) in rep.indices.iter().enumerate() {
        let gap = if k == 0 { String::from("-") } else { format!("{:.3e}", rep.gaps[k - 1]) };
        let cf = rep.closed_form_errors.get(k).map_or(String::from("-"), |e| format!("{e:.3e}"));
        println!("  n = {n:.0e}: gap {gap:>10}, closed-form error {cf:>10}");
    }
    Ok(())
}
