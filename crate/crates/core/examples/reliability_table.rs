//! Uniform quadratic refinement of the radially symmetric plate: compares
//! the true error with the computable reliability bound at every level.

use kirchhoff_obstacle::adapt::{adaptive_solve, AdaptConfig, RefineMode};
use kirchhoff_obstacle::estimator::reliability_bound;
use kirchhoff_obstacle::problems::{example1, RadialPlate};

fn main() -> kirchhoff_obstacle::Result<()> {
    let max_dof = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let problem = example1();
    let run = adaptive_solve(&problem, &AdaptConfig::new(2, 6.0, RefineMode::Uniform, max_dof))?;
    let mass = RadialPlate::new().multiplier_mass();
    println!(
        "{:>7} {:>10} {:>12} {:>12} {:>12} {:>8} {:>10} {:>6} {:>10} {:>10}",
        "ndof", "h_max", "err_h", "eta", "Q_h", "ratio", "|lambda|", "pdas", "Q_1", "Q_2"
    );
    for r in &run.history {
        let q = reliability_bound(r.eta, r.q1, r.q2, 0.32, mass);
        let err = r.err_h.unwrap_or(f64::NAN);
        println!(
            "{:>7} {:>10.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>8.4} {:>10.5} {:>6} {:>10.4e} {:>10.4e}",
            r.ndof, r.h_max, err, r.eta, q, err / q, r.lambda_mass, r.pdas_iters, r.q1, r.q2
        );
    }
    Ok(())
}
