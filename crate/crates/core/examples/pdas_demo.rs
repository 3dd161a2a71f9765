//! The active-set solver on a single mesh: cold start versus a start from
//! the prolongated coarse solution, with the discrete optimality residuals.

use kirchhoff_obstacle::adapt::solve_level;
use kirchhoff_obstacle::mesh::Mesh;
use kirchhoff_obstacle::problems::example2;
use kirchhoff_obstacle::vi_solver::PdasOptions;

fn main() -> kirchhoff_obstacle::Result<()> {
    let problem = example2();
    let opts = PdasOptions::default();
    let coarse_mesh = Mesh::build_initial(problem.domain).uniform_refine().uniform_refine().uniform_refine();
    let fine_mesh = coarse_mesh.uniform_refine();

    let coarse = solve_level(&problem, coarse_mesh, 2, 6.0, None, &opts)?;
    let cold = solve_level(&problem, fine_mesh.clone(), 2, 6.0, None, &opts)?;
    let warm = solve_level(&problem, fine_mesh, 2, 6.0, Some(&coarse), &opts)?;

    for (name, s) in [("coarse", &coarse), ("fine, cold start", &cold), ("fine, warm start", &warm)] {
        let c = &s.kkt.complementarity;
        println!(
            "{name:>17}: {} dofs, {} iterations, {} of {} vertices active, lambda mass {:.5}",
            s.dofmap.num_dofs(),
            s.solution.iterations,
            s.solution.num_active(),
            s.solution.constrained.len(),
            s.solution.lambda_mass()
        );
        println!(
            "{:>17}  negative lambda {:.1e}, infeasibility {:.1e}, complementarity {:.1e}, stationarity {:.1e}",
            "", c.max_negative_lambda, c.max_infeasibility, c.complementarity, s.kkt.stationarity
        );
    }
    let diff = cold.u.iter().zip(&warm.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("max |u_cold - u_warm| = {diff:.1e}");
    Ok(())
}
