//! Splits the a posteriori estimator of one solve into its element and edge
//! contributions and shows which entities bulk marking selects.
//!
//! Usage: `estimator_breakdown [example1|example2|example3] [degree]`

use kirchhoff_obstacle::adapt::{dorfler_mark, solve_level};
use kirchhoff_obstacle::estimator::Entity;
use kirchhoff_obstacle::mesh::Mesh;
use kirchhoff_obstacle::problems::{default_sigma, ProblemSpec};
use kirchhoff_obstacle::vi_solver::PdasOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "example3".into());
    let degree: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let problem = ProblemSpec::by_name(&name).ok_or("unknown problem")?;
    let mesh = Mesh::build_initial(problem.domain).uniform_refine().uniform_refine();
    let level = solve_level(&problem, mesh, degree, default_sigma(degree), None, &PdasOptions::default())?;
    let rep = &level.report;

    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let parts = [
        ("h^2 ||f||", sq(&rep.eta_t)),
        ("first-derivative jumps", sq(&rep.eta_e1)),
        ("second-derivative jumps", sq(&rep.eta_e2)),
        ("third-derivative jumps", sq(&rep.eta_e3)),
    ];
    let total2 = rep.total * rep.total;
    println!("{name}, k = {degree}, {} dofs: eta = {:.4e}", level.dofmap.num_dofs(), rep.total);
    for (label, v) in parts {
        println!("  {label:<24} {v:>11.4e}  ({:5.1}%)", 100.0 * v / total2);
    }
    println!("  oscillation {:.4e}, Q_1 {:.4e}, Q_2 {:.4e}", rep.osc_total, level.q1, level.q2);

    let marked = dorfler_mark(&rep.indicators(), 0.5)?;
    let tris = marked.iter().filter(|e| matches!(e, Entity::Triangle(_))).count();
    println!(
        "bulk marking with theta = 0.5: {tris} of {} triangles, {} of {} edges",
        level.mesh.num_triangles(),
        marked.len() - tris,
        level.mesh.num_edges()
    );
    Ok(())
}
