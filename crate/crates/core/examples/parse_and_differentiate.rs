//! Parses a few expressions, prints their canonical text, values and gradients.

use poissonlab::exprcore::ScalarField;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coords = ["x", "y", "z"];
    let p = [0.5, -1.0, 2.0];
    for text in ["x^2*y + sin(z)", "cbrt(z) - x", "smoothstep(x) * exp(-y^2)", "max(x, y) + root(r: r^3 + r - z)"] {
        let f = ScalarField::parse(text, &coords, &[])?;
        let g = f.grad(&p, &[])?;
        println!("{text}");
        println!("  canonical  {}", f.text());
        println!("  value      {:.6}", f.eval(&p, &[])?);
        println!("  gradient   [{:.6}, {:.6}, {:.6}]", g[0], g[1], g[2]);
    }

    let e = ScalarField::parse("x / (y + 1)", &coords, &[])?;
    match e.eval(&[1.0, -1.0, 0.0], &[]) {
        Ok(v) => println!("x/(y+1) at y=-1 gave {v}"),
        Err(err) => println!("x/(y+1) at y=-1: {err}"),
    }
    Ok(())
}
