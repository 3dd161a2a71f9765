//! Newest-vertex bisection towards the re-entrant corner of the L-shape.
//! Prints mesh sizes and the smallest angle after each round, then dumps the
//! final mesh in the text format used by the driver.
//!
//! Usage: `mesh_refinement [rounds] [out_file]`

use std::fs::File;

use kirchhoff_obstacle::mesh::{Domain, Mesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let rounds: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let out = args.next();

    let mut mesh = Mesh::build_initial(Domain::LShape);
    let angle = |m: &Mesh| (0..m.num_triangles()).map(|t| m.min_angle(t)).fold(f64::INFINITY, f64::min).to_degrees();
    println!("{:>5} {:>9} {:>9} {:>7} {:>10}", "round", "vertices", "triangles", "edges", "min angle");
    for round in 0..=rounds {
        mesh.check_invariants()?;
        println!("{:>5} {:>9} {:>9} {:>7} {:>10.3}", round, mesh.num_vertices(), mesh.num_triangles(), mesh.num_edges(), angle(&mesh));
        if round == rounds {
            break;
        }
        let corner: Vec<usize> = (0..mesh.num_triangles())
            .filter(|&t| mesh.triangles()[t].vertices.iter().any(|&v| mesh.vertices()[v] == [0.0, 0.0]))
            .collect();
        mesh = mesh.refine(&corner, &[])?;
    }
    if let Some(path) = out {
        mesh.write_text(File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
