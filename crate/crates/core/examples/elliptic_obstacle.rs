//! Plate on the L-shaped domain pushed up by an elliptic obstacle, with no
//! load. Runs uniform and adaptive refinement side by side and reports the
//! fitted decay of the estimator for each.
//!
//! Usage: `elliptic_obstacle [degree] [max_dof]`

use kirchhoff_obstacle::adapt::{adaptive_solve, fit_rate, AdaptConfig, RefineMode};
use kirchhoff_obstacle::problems::{default_sigma, example2};

fn main() -> kirchhoff_obstacle::Result<()> {
    let mut args = std::env::args().skip(1);
    let degree: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let max_dof: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(30_000);
    let problem = example2();

    for mode in [RefineMode::Uniform, RefineMode::Adaptive] {
        let run = adaptive_solve(&problem, &AdaptConfig::new(degree, default_sigma(degree), mode, max_dof))?;
        println!("{mode:?}");
        println!("{:>7} {:>11} {:>11} {:>11} {:>6}", "ndof", "eta", "Q_1", "Q_2", "pdas");
        for r in &run.history {
            println!("{:>7} {:>11.4e} {:>11.4e} {:>11.4e} {:>6}", r.ndof, r.eta, r.q1, r.q2, r.pdas_iters);
        }
        let ndofs: Vec<usize> = run.history.iter().map(|r| r.ndof).collect();
        let eta: Vec<f64> = run.history.iter().map(|r| r.eta).collect();
        let window = ndofs.len().min(6);
        if window >= 3 {
            println!("eta slope {:.3}\n", fit_rate(&ndofs, &eta, window)?);
        }
    }
    Ok(())
}
