use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use poissonlab::scenarios::{self, Format, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "poissonlab", version, about = "Numerical checks for Poisson geometry scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a scenario file.
    Run {
        /// Built-in name or path to a scenario file.
        scenario: String,
        /// Nodes per axis for grid checks.
        #[arg(long)]
        grid: Option<usize>,
        /// Relative singular-value cutoff for ranks.
        #[arg(long = "tol-rank")]
        tol_rank: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; nothing is written without it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json,csv,svg")]
        formats: String,
        /// Run only this check (repeatable).
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Replace the tolerance of every check.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List built-in scenarios.
    List,
    /// Parse a scenario file without running it.
    Validate { path: PathBuf },
}

fn resolve(name: &str) -> poissonlab::Result<Scenario> {
    let path = Path::new(name);
    if path.is_file() {
        scenarios::load(path)
    } else {
        scenarios::builtin(name)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::List => {
            for (name, desc) in scenarios::names_and_descriptions() {
                println!("{name:<24} {desc}");
            }
            0
        }
        Command::Validate { path } => match scenarios::load(&path).and_then(|s| s.compile().map(|_| s)) {
            Ok(s) => {
                println!("{}: ok ({} checks)", s.name, s.checks.len());
                0
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                2
            }
        },
        Command::Run { scenario, grid, tol_rank, seed, out, formats, checks, tol } => {
            let opts = RunOptions { seed, grid, tol_rank, tol, checks };
            let result = Format::parse_list(&formats).and_then(|fmts| {
                let s = resolve(&scenario)?;
                let report = scenarios::run(&s, &opts)?;
                if let Some(dir) = &out {
                    scenarios::write_report(&report, dir, &fmts)?;
                }
                Ok(report)
            });
            match result {
                Ok(report) => {
                    for c in &report.checks {
                        let status = serde_json::to_value(c.status).unwrap_or_default();
                        let metric = c.metric.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "-".into());
                        println!("{:<28} {:<12} {:>10}  {}", c.name, status.as_str().unwrap_or(""), metric, c.detail);
                    }
                    report.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
