//! Adaptive cubic solve of the radially symmetric plate pushed up by the
//! paraboloid `1 - |x|^2`. The exact solution is known, so the table shows the true
//! error next to the estimator and the multiplier mass converging to 8*pi*C1.
//!
//! Usage: `radial_plate_adaptive [max_dof]`

use kirchhoff_obstacle::adapt::{adaptive_solve, fit_rate, AdaptConfig, RefineMode};
use kirchhoff_obstacle::problems::{example1, RadialPlate};

fn main() -> kirchhoff_obstacle::Result<()> {
    let max_dof = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let run = adaptive_solve(&example1(), &AdaptConfig::new(3, 18.0, RefineMode::Adaptive, max_dof))?;
    let mass = RadialPlate::new().multiplier_mass();

    println!("{:>5} {:>7} {:>11} {:>11} {:>7} {:>10} {:>10}", "level", "ndof", "err_h", "eta", "eff", "|lambda|", "Lambda*N");
    for r in &run.history {
        let err = r.err_h.unwrap_or(f64::NAN);
        let gap = r.lambda_gap.map(|g| format!("{:.2}", g * r.ndof as f64)).unwrap_or_default();
        println!(
            "{:>5} {:>7} {:>11.4e} {:>11.4e} {:>7.2} {:>10.5} {:>10}",
            r.level, r.ndof, err, r.eta, r.eta / err, r.lambda_mass, gap
        );
    }

    let ndofs: Vec<usize> = run.history.iter().map(|r| r.ndof).collect();
    let window = ndofs.len().min(6);
    if window >= 3 {
        let eta: Vec<f64> = run.history.iter().map(|r| r.eta).collect();
        let err: Vec<f64> = run.history.iter().map(|r| r.err_h.unwrap_or(f64::NAN)).collect();
        println!("eta slope {:.3}, error slope {:.3} (vs ndof)", fit_rate(&ndofs, &eta, window)?, fit_rate(&ndofs, &err, window)?);
    }
    println!("8*pi*C1 = {mass:.5}");
    Ok(())
}
