//! Runs a built-in scenario (or a scenario file) and writes its report to a temporary directory.

use poissonlab::scenarios::{self, write_report, Format, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "quadratic-singular".into());
    let scenario = match std::path::Path::new(&arg).exists() {
        true => scenarios::load(std::path::Path::new(&arg))?,
        false => scenarios::builtin(&arg)?,
    };
    let report = scenarios::run(&scenario, &RunOptions::default())?;
    for c in &report.checks {
        let metric = c.metric.map_or(String::from("-"), |m| format!("{m:.3e}"));
        println!("{:<28} {:<13} {metric:>10}  {}", c.name, format!("{:?}", c.status), c.detail);
    }
    let dir = std::env::temp_dir().join(format!("poissonlab-{}", scenario.name));
    write_report(&report, &dir, &[Format::Json, Format::Csv, Format::Svg])?;
    println!("wrote {} artifacts to {}", report.artifacts.len(), dir.display());
    println!("exit code {}", report.exit_code());
    Ok(())
}
