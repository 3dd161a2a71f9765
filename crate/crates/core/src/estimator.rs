//! Residual error estimator and the monitoring quantities of the adaptive
//! loop.

use std::io::Write;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::problems::ExactSolution;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::space::{evaluate_in, reference_basis, DofMap, ElementMap, RefDerivs};
use crate::traces::EdgeJumps;
use crate::vi_solver::DiscreteSolution;

/// How boundary edges enter the first jump term.
#[derive(Clone, Copy)]
pub enum BoundaryData<'a> {
    /// Clamped: the one-sided normal derivative of `u_h`.
    Homogeneous,
    /// Nonhomogeneous data from an exact solution: the mismatch
    /// `d(u_h - u)/dn`.
    Exact(&'a dyn ExactSolution),
}

/// Marking entity; triangles sort before edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Triangle(usize),
    Edge(usize),
}

#[derive(Debug, Clone)]
pub struct EstimatorReport {
    /// `sigma |e|^{-1/2} ||[[du_h/dn]]||` on every edge.
    pub eta_e1: Vec<f64>,
    /// `|e|^{1/2} ||[[d2u_h/dn2]]||`, zero on boundary edges.
    pub eta_e2: Vec<f64>,
    /// `|e|^{3/2} ||[[d3u_h/dn3]]||`, zero on boundary edges.
    pub eta_e3: Vec<f64>,
    /// `h_T^2 ||f||_{L2(T)}` (the bilaplacian of `u_h` vanishes for `k <= 3`).
    pub eta_t: Vec<f64>,
    pub total: f64,
    pub osc_t: Vec<f64>,
    pub osc_total: f64,
}

impl EstimatorReport {
    /// `eta_h` recomputed from the individual contributions.
    pub fn reassembled_total(&self) -> f64 {
        let edges: f64 = (0..self.eta_e1.len())
            .map(|e| self.eta_e1[e].powi(2) + self.eta_e2[e].powi(2) + self.eta_e3[e].powi(2))
            .sum();
        let tris: f64 = self.eta_t.iter().map(|v| v * v).sum();
        (edges + tris).sqrt()
    }

    /// Squared marking indicators: `eta_T^2` per triangle and
    /// `eta_e1^2 + eta_e2^2 + eta_e3^2` per edge.
    pub fn indicators(&self) -> Vec<(Entity, f64)> {
        let mut out: Vec<(Entity, f64)> = self.eta_t.iter().enumerate().map(|(t, v)| (Entity::Triangle(t), v * v)).collect();
        out.extend(
            (0..self.eta_e1.len())
                .map(|e| (Entity::Edge(e), self.eta_e1[e].powi(2) + self.eta_e2[e].powi(2) + self.eta_e3[e].powi(2))),
        );
        out
    }

    /// CSV with columns `entity_type,entity_id,term,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "entity_type,entity_id,term,value")?;
        for (t, v) in self.eta_t.iter().enumerate() {
            writeln!(out, "triangle,{t},eta_T,{v:.16e}")?;
            writeln!(out, "triangle,{t},osc_T,{:.16e}", self.osc_t[t])?;
        }
        for e in 0..self.eta_e1.len() {
            writeln!(out, "edge,{e},eta_e1,{:.16e}", self.eta_e1[e])?;
            writeln!(out, "edge,{e},eta_e2,{:.16e}", self.eta_e2[e])?;
            writeln!(out, "edge,{e},eta_e3,{:.16e}", self.eta_e3[e])?;
        }
        Ok(())
    }
}

/// `||[[d(u_h - u)/dn]]||_{L2(e)}` for every edge, with the boundary
/// convention of `bc`.
pub fn first_jump_norms(mesh: &Mesh, dofmap: &DofMap, uh: &[f64], bc: BoundaryData<'_>) -> Vec<f64> {
    let k = dofmap.degree();
    let interior_rule = edge_rule(2 * k);
    let boundary_rule = edge_rule(2 * k + 6);
    (0..mesh.num_edges())
        .map(|e| {
            let edge = &mesh.edges()[e];
            match (edge.boundary, bc) {
                (true, BoundaryData::Exact(u)) => {
                    let j = EdgeJumps::new(mesh, dofmap, uh, e, &boundary_rule);
                    j.jump
                        .iter()
                        .zip(&j.quad.points)
                        .zip(&j.quad.weights)
                        .map(|((ju, &p), w)| {
                            let g = u.grad(p);
                            let jexact = -(g[0] * j.quad.normal[0] + g[1] * j.quad.normal[1]);
                            w * (ju[0] - jexact).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt()
                }
                _ => EdgeJumps::new(mesh, dofmap, uh, e, &interior_rule).jump_norm(1),
            }
        })
        .collect()
}

/// Evaluates all estimator contributions.
pub fn estimate(
    mesh: &Mesh,
    dofmap: &DofMap,
    uh: &[f64],
    f: &dyn Fn(Point) -> f64,
    sigma: f64,
    bc: BoundaryData<'_>,
) -> Result<EstimatorReport> {
    let k = dofmap.degree();
    if k > 3 {
        return Err(Error::UnsupportedDegree(k));
    }
    let rule = edge_rule(2 * k);
    let j1 = first_jump_norms(mesh, dofmap, uh, bc);
    let ne = mesh.num_edges();
    let mut eta_e1 = vec![0.0; ne];
    let mut eta_e2 = vec![0.0; ne];
    let mut eta_e3 = vec![0.0; ne];
    for e in 0..ne {
        let len = mesh.edge_length(e);
        eta_e1[e] = sigma * len.powf(-0.5) * j1[e];
        if !mesh.edges()[e].boundary {
            let j = EdgeJumps::new(mesh, dofmap, uh, e, &rule);
            eta_e2[e] = len.sqrt() * j.jump_norm(2);
            eta_e3[e] = if k == 2 { 0.0 } else { len.powf(1.5) * j.jump_norm(3) };
        }
    }
    let (osc_t, osc_total, f_norms) = oscillation_parts(mesh, f)?;
    let eta_t: Vec<f64> = (0..mesh.num_triangles()).map(|t| mesh.h(t).powi(2) * f_norms[t]).collect();
    let mut report = EstimatorReport {
        eta_e1,
        eta_e2,
        eta_e3,
        eta_t,
        total: 0.0,
        osc_t,
        osc_total,
    };
    report.total = report.reassembled_total();
    Ok(report)
}

/// Per-triangle `h_T^2 ||f - mean_T f||` and their root-sum-square. The
/// mean is the `L2` projection onto constants, which is the right
/// projection for every supported degree.
pub fn oscillation(mesh: &Mesh, f: &dyn Fn(Point) -> f64) -> Result<(Vec<f64>, f64)> {
    let (per, total, _) = oscillation_parts(mesh, f)?;
    Ok((per, total))
}

fn oscillation_parts(mesh: &Mesh, f: &dyn Fn(Point) -> f64) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let rule = triangle_rule(8)?;
    let mut osc = Vec::with_capacity(mesh.num_triangles());
    let mut norms = Vec::with_capacity(mesh.num_triangles());
    let mut vals = vec![0.0; rule.len()];
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        let area = map.det.abs() * 0.5;
        let mut int = 0.0;
        let mut sq = 0.0;
        for (q, (xi, w)) in rule.iter().enumerate() {
            vals[q] = f(map.to_physical(xi));
            int += w * map.det.abs() * vals[q];
            sq += w * map.det.abs() * vals[q] * vals[q];
        }
        let mean = int / area;
        let dev: f64 = rule.iter().enumerate().map(|(q, (_, w))| w * map.det.abs() * (vals[q] - mean).powi(2)).sum();
        let h2 = mesh.h(t).powi(2);
        osc.push(h2 * dev.sqrt());
        norms.push(sq.sqrt());
    }
    let total = osc.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((osc, total, norms))
}

/// `sqrt(max_T h_T sum_{e in edge star of T} |e|^{-1/2} ||[[du_h/dn]]||)`,
/// given the per-edge jump norms.
pub fn q1_from_jumps(mesh: &Mesh, jump_norms: &[f64]) -> f64 {
    let scaled: Vec<f64> = (0..mesh.num_edges()).map(|e| mesh.edge_length(e).powf(-0.5) * jump_norms[e]).collect();
    (0..mesh.num_triangles())
        .map(|t| mesh.h(t) * mesh.edge_star(t).iter().map(|&e| scaled[e]).sum::<f64>())
        .fold(0.0, f64::max)
        .sqrt()
}

pub fn q1(mesh: &Mesh, dofmap: &DofMap, uh: &[f64], bc: BoundaryData<'_>) -> f64 {
    q1_from_jumps(mesh, &first_jump_norms(mesh, dofmap, uh, bc))
}

/// Barycentric lattice points `(i, j, l) / 5` with `i, j, l >= 1`.
const Q2_LATTICE: [[f64; 3]; 6] = [
    [0.2, 0.2, 0.6],
    [0.2, 0.6, 0.2],
    [0.6, 0.2, 0.2],
    [0.2, 0.4, 0.4],
    [0.4, 0.2, 0.4],
    [0.4, 0.4, 0.2],
];

/// `sqrt(max (psi - u_h)^+)` over the Lagrange nodes and six interior
/// lattice points per triangle.
pub fn q2(mesh: &Mesh, dofmap: &DofMap, uh: &[f64], psi: &dyn Fn(Point) -> f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, &p) in dofmap.nodes().iter().enumerate() {
        worst = worst.max(psi(p) - uh[i]);
    }
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        for l in Q2_LATTICE {
            let xi = [l[1], l[2]];
            let v = evaluate_in(mesh, dofmap, uh, t, xi, 0)?;
            worst = worst.max(psi(map.to_physical(xi)) - v.value);
        }
    }
    Ok(worst.max(0.0).sqrt())
}

/// `|lambda_h| = sum_p lambda_h(p)`
pub fn lambda_mass(sol: &DiscreteSolution) -> f64 {
    sol.lambda_mass()
}

/// `| |lambda_prev| - |lambda_cur| |`
pub fn lambda_gap(prev: f64, cur: f64) -> f64 {
    (prev - cur).abs()
}

/// `C (eta_h + |lambda|^{1/2} Q_1) + |lambda|^{1/2} Q_2`.
pub fn reliability_bound(eta: f64, q1: f64, q2: f64, c: f64, lam_mass: f64) -> f64 {
    let s = lam_mass.max(0.0).sqrt();
    c * (eta + s * q1) + s * q2
}

/// What to measure the discrete solution against.
#[derive(Clone, Copy)]
pub enum Truth<'a> {
    Exact(&'a dyn ExactSolution),
    /// A discrete solution on a mesh nested in (refining) the current one.
    Reference { mesh: &'a Mesh, dofmap: &'a DofMap, u: &'a [f64] },
}

/// `||u - u_h||_h`: broken `H^2` seminorm plus
/// `sum_e sigma/|e| ||[[d(u - u_h)/dn]]||^2` over the edges of `mesh`.
pub fn error_norm(mesh: &Mesh, dofmap: &DofMap, uh: &[f64], truth: Truth<'_>, sigma: f64) -> Result<f64> {
    match truth {
        Truth::Exact(u) => exact_error(mesh, dofmap, uh, u, sigma),
        Truth::Reference { mesh: fm, dofmap: fd, u } => reference_error(mesh, dofmap, uh, fm, fd, u, sigma),
    }
}

fn exact_error(mesh: &Mesh, dofmap: &DofMap, uh: &[f64], u: &dyn ExactSolution, sigma: f64) -> Result<f64> {
    let k = dofmap.degree();
    let rule = triangle_rule((2 * k + 6).min(12))?;
    let basis = reference_basis(k)?;
    let mut r = RefDerivs::default();
    let mut sum = 0.0;
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        let dofs = dofmap.cell_dofs(t);
        for (xi, w) in rule.iter() {
            basis.eval(xi, 2, &mut r);
            let mut h = u.hessian(map.to_physical(xi));
            for (i, &d) in dofs.iter().enumerate() {
                let hi = map.hessian(&r, i);
                for s in 0..3 {
                    h[s] -= uh[d] * hi[s];
                }
            }
            sum += w * map.det.abs() * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
        }
    }
    let jumps = first_jump_norms(mesh, dofmap, uh, BoundaryData::Exact(u));
    for (e, j) in jumps.iter().enumerate() {
        sum += sigma / mesh.edge_length(e) * j * j;
    }
    Ok(sum.sqrt())
}

/// Interpolates the coarse function into the fine space. Exact when the
/// fine mesh refines the coarse one, since the coarse function is then a
/// polynomial of the same degree on every fine triangle.
pub fn prolongate(coarse: &Mesh, cdofs: &DofMap, uc: &[f64], fine: &Mesh, fdofs: &DofMap) -> Result<Vec<f64>> {
    if cdofs.degree() != fdofs.degree() {
        return Err(Error::NonNested);
    }
    if coarse.vertices() == fine.vertices() && coarse.triangles().iter().map(|t| t.vertices).eq(fine.triangles().iter().map(|t| t.vertices)) {
        return Ok(uc.to_vec());
    }
    let mut out = vec![0.0; fdofs.num_dofs()];
    let mut done = vec![false; fdofs.num_dofs()];
    let mut hint = None;
    for t in 0..fine.num_triangles() {
        let [a, b, c] = fine.triangle_points(t);
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        let ct = coarse.locate(centroid, hint).ok_or(Error::NonNested)?;
        hint = Some(ct);
        for p in [a, b, c] {
            if coarse.barycentric(ct, p).iter().any(|&l| l < -1e-10) {
                return Err(Error::NonNested);
            }
        }
        let map = ElementMap::new(coarse, ct);
        for &d in fdofs.cell_dofs(t) {
            if !done[d] {
                let xi = map.to_reference(fdofs.node(d));
                out[d] = evaluate_in(coarse, cdofs, uc, ct, xi, 0)?.value;
                done[d] = true;
            }
        }
    }
    Ok(out)
}

fn reference_error(
    mesh: &Mesh,
    dofmap: &DofMap,
    uh: &[f64],
    fine: &Mesh,
    fdofs: &DofMap,
    uf: &[f64],
    sigma: f64,
) -> Result<f64> {
    let transferred = prolongate(mesh, dofmap, uh, fine, fdofs)?;
    let w: Vec<f64> = uf.iter().zip(&transferred).map(|(a, b)| a - b).collect();
    let k = fdofs.degree();
    let rule = triangle_rule(2 * k)?;
    let basis = reference_basis(k)?;
    let mut r = RefDerivs::default();
    let mut sum = 0.0;
    for t in 0..fine.num_triangles() {
        let map = ElementMap::new(fine, t);
        let dofs = fdofs.cell_dofs(t);
        for (xi, wq) in rule.iter() {
            basis.eval(xi, 2, &mut r);
            let mut h = [0.0; 3];
            for (i, &d) in dofs.iter().enumerate() {
                let hi = map.hessian(&r, i);
                for s in 0..3 {
                    h[s] += w[d] * hi[s];
                }
            }
            sum += wq * map.det.abs() * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
        }
    }
    // Penalty part over the coarse edges: every fine edge lying on a coarse
    // edge contributes with the coarse edge length.
    let erule = edge_rule(2 * k);
    let mut hint = None;
    for e in 0..fine.num_edges() {
        let [a, b] = fine.edges()[e].vertices.map(|v| fine.vertices()[v]);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let ct = mesh.locate(mid, hint).ok_or(Error::NonNested)?;
        hint = Some(ct);
        let bary = mesh.barycentric(ct, mid);
        let Some(local) = (0..3).find(|&i| bary[i].abs() < 1e-10) else {
            continue;
        };
        let ce = mesh.triangle_edges(ct)[local];
        let j = EdgeJumps::new(fine, fdofs, &w, e, &erule).jump_norm(1);
        sum += sigma / mesh.edge_length(ce) * j * j;
    }
    Ok(sum.sqrt())
}
