//! Piecewise load and a wavy obstacle on the L-shaped domain. Writes the
//! convergence history and the last estimator breakdown as CSV, and prints
//! the data oscillation next to the estimator.
//!
//! Usage: `oscillating_obstacle [degree] [max_dof] [out_dir]`

use std::fs::{self, File};
use std::path::PathBuf;

use kirchhoff_obstacle::adapt::{adaptive_solve, AdaptConfig, RefineMode};
use kirchhoff_obstacle::cli::write_history;
use kirchhoff_obstacle::problems::{default_sigma, example3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let degree: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let max_dof: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/example3".into()));

    let run = adaptive_solve(&example3(), &AdaptConfig::new(degree, default_sigma(degree), RefineMode::Adaptive, max_dof))?;
    fs::create_dir_all(&out)?;
    write_history(&run.history, File::create(out.join("history.csv"))?)?;
    let last = run.last();
    last.report.write_csv(File::create(out.join("estimator_last.csv"))?)?;

    for r in &run.history {
        println!("{:>7} eta {:.4e}  |lambda| {:.5}", r.ndof, r.eta, r.lambda_mass);
    }
    println!(
        "final level: eta {:.4e}, oscillation {:.4e}, {} active vertices",
        last.report.total,
        last.report.osc_total,
        last.solution.num_active()
    );
    println!("wrote {}", out.display());
    Ok(())
}
