//! C0 interior penalty stiffness matrix, load vectors and boundary
//! elimination.
//!
//! Sign conventions (shared with the estimator): on an interior edge with
//! unit normal `n` pointing from `triangles[0]` to `triangles[1]`,
//! `[[dv/dn]] = dv/dn|_1 - dv/dn|_0` and `{{d2v/dn2}}` is the arithmetic
//! mean. On a boundary edge `n` is outward, `[[dv/dn]] = -dv/dn` and the
//! mean is the one-sided second normal derivative.

mod sparse;

pub use sparse::SymSparseMatrix;

use crate::mesh::{Mesh, Point};
use crate::problems::ExactSolution;
use crate::quadrature::{edge_rule, triangle_rule, QuadRule};
use crate::space::{reference_basis, DofMap, ElementMap, RefDerivs, MAX_LOCAL};
use crate::traces::{EdgeQuad, SideTrace};

pub type LoadVector = Vec<f64>;

/// Which parts of the bilinear form to assemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terms {
    pub element: bool,
    pub consistency: bool,
    /// Penalty parameter; `0.0` drops the penalty term.
    pub sigma: f64,
    /// Treat `triangles[1]` as the first side of every interior edge and
    /// reverse the normal. The bilinear form must not change.
    pub swap_sides: bool,
}

impl Terms {
    pub fn full(sigma: f64) -> Terms {
        Terms {
            element: true,
            consistency: true,
            sigma,
            swap_sides: false,
        }
    }

    /// Only `sum_e 1/|e| int [[dw/dn]][[dv/dn]]`.
    pub fn penalty_only() -> Terms {
        Terms {
            element: false,
            consistency: false,
            sigma: 1.0,
            swap_sides: false,
        }
    }
}

/// Sparsity pattern of the interior penalty form: dof `i` couples with
/// every dof of every triangle that contains `i` or shares an edge with a
/// triangle containing `i`.
pub fn ip_pattern(mesh: &Mesh, dofmap: &DofMap) -> SymSparseMatrix {
    let n = dofmap.num_dofs();
    let nt = mesh.num_triangles();
    let mut count = vec![0usize; n + 1];
    for t in 0..nt {
        for &d in dofmap.cell_dofs(t) {
            count[d + 1] += 1;
        }
    }
    for i in 0..n {
        count[i + 1] += count[i];
    }
    let mut fill = count.clone();
    let mut dof_tris = vec![0usize; count[n]];
    for t in 0..nt {
        for &d in dofmap.cell_dofs(t) {
            dof_tris[fill[d]] = t;
            fill[d] += 1;
        }
    }
    let mut marker = vec![usize::MAX; n];
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut cols = Vec::new();
        for &t in &dof_tris[count[i]..count[i + 1]] {
            let mut patch = [t, usize::MAX, usize::MAX, usize::MAX];
            for (j, slot) in patch.iter_mut().skip(1).enumerate() {
                if let Some(s) = mesh.neighbor(t, j) {
                    *slot = s;
                }
            }
            for &s in patch.iter().filter(|&&s| s != usize::MAX) {
                for &c in dofmap.cell_dofs(s) {
                    if marker[c] != i {
                        marker[c] = i;
                        cols.push(c);
                    }
                }
            }
        }
        rows.push(cols);
    }
    SymSparseMatrix::from_pattern(rows)
}

/// `a_h` with penalty `sigma`.
pub fn assemble_stiffness(mesh: &Mesh, dofmap: &DofMap, sigma: f64) -> SymSparseMatrix {
    assemble_terms(mesh, dofmap, Terms::full(sigma))
}

/// The penalty-only matrix `P`, so that `A(s) - A(s') = (s - s') P`.
pub fn assemble_penalty(mesh: &Mesh, dofmap: &DofMap) -> SymSparseMatrix {
    assemble_terms(mesh, dofmap, Terms::penalty_only())
}

/// Assembles the selected parts of the bilinear form. Entities are visited
/// in id order, so the result is bitwise reproducible.
pub fn assemble_terms(mesh: &Mesh, dofmap: &DofMap, terms: Terms) -> SymSparseMatrix {
    let mut a = ip_pattern(mesh, dofmap);
    let k = dofmap.degree();
    if terms.element {
        let rule = triangle_rule(2 * k).expect("degree within the tabulated range");
        for t in 0..mesh.num_triangles() {
            add_element(&mut a, mesh, dofmap, t, &rule);
        }
    }
    if terms.consistency || terms.sigma != 0.0 {
        let rule = edge_rule(2 * k);
        for e in 0..mesh.num_edges() {
            add_edge(&mut a, mesh, dofmap, e, &rule, terms);
        }
    }
    a
}

fn add_element(a: &mut SymSparseMatrix, mesh: &Mesh, dofmap: &DofMap, t: usize, rule: &QuadRule) {
    let basis = reference_basis(dofmap.degree()).expect("supported degree");
    let map = ElementMap::new(mesh, t);
    let n = basis.len();
    let mut r = RefDerivs::default();
    let mut local = [[0.0; MAX_LOCAL]; MAX_LOCAL];
    for (xi, w) in rule.iter() {
        basis.eval(xi, 2, &mut r);
        let hs: Vec<[f64; 3]> = (0..n).map(|i| map.hessian(&r, i)).collect();
        let wq = w * map.det.abs();
        for i in 0..n {
            for j in 0..n {
                let (p, q) = (hs[i], hs[j]);
                local[i][j] += wq * (p[0] * q[0] + 2.0 * p[1] * q[1] + p[2] * q[2]);
            }
        }
    }
    let dofs = dofmap.cell_dofs(t);
    for i in 0..n {
        for j in 0..n {
            a.add(dofs[i], dofs[j], local[i][j]);
        }
    }
}

/// Per-side coefficient arrays of the jump and mean operators at each
/// quadrature point: `jump[q][i]`, `mean[q][i]` for the local basis `i` of
/// one side.
struct SideOps {
    dofs: Vec<usize>,
    jump: Vec<[f64; MAX_LOCAL]>,
    mean: Vec<[f64; MAX_LOCAL]>,
}

fn edge_sides(mesh: &Mesh, dofmap: &DofMap, e: usize, quad: &EdgeQuad, swap: bool) -> Vec<SideOps> {
    let edge = &mesh.edges()[e];
    if edge.boundary {
        let t = edge.triangles[0];
        let tr = SideTrace::new(mesh, dofmap, t, quad, quad.normal);
        let jump = tr.dn.iter().map(|row| row.map(|v| -v)).collect();
        return vec![SideOps {
            dofs: dofmap.cell_dofs(t).to_vec(),
            jump,
            mean: tr.dnn,
        }];
    }
    let (first, second, normal) = if swap {
        (edge.triangles[1], edge.triangles[0], [-quad.normal[0], -quad.normal[1]])
    } else {
        (edge.triangles[0], edge.triangles[1], quad.normal)
    };
    [(first, -1.0), (second, 1.0)]
        .into_iter()
        .map(|(t, sign)| {
            let tr = SideTrace::new(mesh, dofmap, t, quad, normal);
            SideOps {
                dofs: dofmap.cell_dofs(t).to_vec(),
                jump: tr.dn.iter().map(|row| row.map(|v| sign * v)).collect(),
                mean: tr.dnn.iter().map(|row| row.map(|v| 0.5 * v)).collect(),
            }
        })
        .collect()
}

fn add_edge(a: &mut SymSparseMatrix, mesh: &Mesh, dofmap: &DofMap, e: usize, rule: &QuadRule, terms: Terms) {
    let quad = EdgeQuad::new(mesh, e, rule);
    let sides = edge_sides(mesh, dofmap, e, &quad, terms.swap_sides);
    let n = dofmap.local_dim();
    let pen = terms.sigma / quad.length;
    let c = if terms.consistency { 1.0 } else { 0.0 };
    for si in &sides {
        for sj in &sides {
            let mut local = [[0.0; MAX_LOCAL]; MAX_LOCAL];
            for (q, &w) in quad.weights.iter().enumerate() {
                let (ji, mi) = (&si.jump[q], &si.mean[q]);
                let (jj, mj) = (&sj.jump[q], &sj.mean[q]);
                for i in 0..n {
                    for j in 0..n {
                        local[i][j] += w * (c * (mj[j] * ji[i] + mi[i] * jj[j]) + pen * ji[i] * jj[j]);
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    a.add(si.dofs[i], sj.dofs[j], local[i][j]);
                }
            }
        }
    }
}

/// `(f, phi_i)` for every global basis function.
pub fn assemble_load(mesh: &Mesh, dofmap: &DofMap, f: &dyn Fn(Point) -> f64) -> LoadVector {
    let k = dofmap.degree();
    let rule = triangle_rule(2 * k + 2).expect("degree within the tabulated range");
    let basis = reference_basis(k).expect("supported degree");
    let n = basis.len();
    let mut b = vec![0.0; dofmap.num_dofs()];
    let mut r = RefDerivs::default();
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        let mut local = [0.0; MAX_LOCAL];
        for (xi, w) in rule.iter() {
            basis.eval(xi, 0, &mut r);
            let fw = f(map.to_physical(xi)) * w * map.det.abs();
            for i in 0..n {
                local[i] += fw * r.val[i];
            }
        }
        for (i, &d) in dofmap.cell_dofs(t).iter().enumerate() {
            b[d] += local[i];
        }
    }
    b
}

/// Boundary part of the load functional for nonhomogeneous clamped data:
/// `sum_{e on boundary} int_e ({{d2v/dn2}} + sigma/|e| [[dv/dn]]) [[du/dn]]`.
pub fn assemble_inhomogeneous(mesh: &Mesh, dofmap: &DofMap, exact: &dyn ExactSolution, sigma: f64) -> LoadVector {
    inhomogeneous_parts(mesh, dofmap, exact, sigma, 1.0)
}

/// As [`assemble_inhomogeneous`] with every boundary normal multiplied by
/// `normal_sign`.
pub fn inhomogeneous_parts(
    mesh: &Mesh,
    dofmap: &DofMap,
    exact: &dyn ExactSolution,
    sigma: f64,
    normal_sign: f64,
) -> LoadVector {
    let rule = edge_rule(2 * dofmap.degree() + 2);
    let mut b = vec![0.0; dofmap.num_dofs()];
    for e in 0..mesh.num_edges() {
        let edge = &mesh.edges()[e];
        if !edge.boundary {
            continue;
        }
        let mut quad = EdgeQuad::new(mesh, e, &rule);
        quad.normal = [normal_sign * quad.normal[0], normal_sign * quad.normal[1]];
        let t = edge.triangles[0];
        let tr = SideTrace::new(mesh, dofmap, t, &quad, quad.normal);
        let pen = sigma / quad.length;
        let dofs = dofmap.cell_dofs(t);
        for (q, (&p, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
            let g = exact.grad(p);
            let ju = -(g[0] * quad.normal[0] + g[1] * quad.normal[1]);
            for (i, &d) in dofs.iter().enumerate() {
                b[d] += w * (tr.dnn[q][i] - pen * tr.dn[q][i]) * ju;
            }
        }
    }
    b
}

/// Essential boundary data.
#[derive(Debug, Clone, Copy)]
pub enum BoundaryCondition<'a> {
    /// All boundary dofs fixed to zero.
    Homogeneous,
    /// Boundary dofs fixed to the matching entries of a full-length nodal
    /// vector (other entries are ignored).
    Interpolated(&'a [f64]),
}

/// System restricted to the free (non-boundary) dofs.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: SymSparseMatrix,
    pub rhs: Vec<f64>,
    /// Free dofs in increasing order; reduced index `r` is `free[r]`.
    pub free: Vec<usize>,
    /// Full index to reduced index, `usize::MAX` for fixed dofs.
    pub full_to_free: Vec<usize>,
    /// Full-length vector holding the fixed values (zero on free dofs).
    pub fixed_values: Vec<f64>,
}

impl ReducedSystem {
    /// Full coefficient vector from reduced unknowns.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.fixed_values.clone();
        for (r, &i) in self.free.iter().enumerate() {
            full[i] = x[r];
        }
        full
    }

    /// Reduced unknowns of a full vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }
}

/// Eliminates boundary dofs symmetrically: fixed columns move to the
/// right-hand side, fixed rows are dropped.
pub fn impose_boundary(a: &SymSparseMatrix, b: &[f64], dofmap: &DofMap, bc: BoundaryCondition<'_>) -> ReducedSystem {
    let n = dofmap.num_dofs();
    let mut fixed_values = vec![0.0; n];
    if let BoundaryCondition::Interpolated(g) = bc {
        for i in dofmap.boundary_dofs() {
            fixed_values[i] = g[i];
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !dofmap.is_boundary(i)).collect();
    let mut full_to_free = vec![usize::MAX; n];
    for (r, &i) in free.iter().enumerate() {
        full_to_free[i] = r;
    }
    let rhs = free
        .iter()
        .map(|&i| {
            let mut s = b[i];
            for (j, v) in a.row(i) {
                if dofmap.is_boundary(j) {
                    s -= v * fixed_values[j];
                }
            }
            s
        })
        .collect();
    ReducedSystem {
        matrix: a.principal_submatrix(&free),
        rhs,
        free,
        full_to_free,
        fixed_values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Domain;
    use crate::problems::example1;

    fn setup(domain: Domain, k: usize, refinements: usize) -> (Mesh, DofMap) {
        let mut m = Mesh::build_initial(domain);
        for _ in 0..refinements {
            m = m.uniform_refine();
        }
        let d = DofMap::new(&m, k).unwrap();
        (m, d)
    }

    #[test]
    fn constants_lie_in_the_kernel() {
        for k in [2, 3] {
            let (m, d) = setup(Domain::LShape, k, 1);
            let a = assemble_stiffness(&m, &d, 18.0);
            let r = a.matvec(&vec![1.0; d.num_dofs()]);
            let worst = r.iter().fold(0.0f64, |w, v| w.max(v.abs()));
            assert!(worst <= 1e-11 * a.max_abs(), "k={k}: {worst}");
        }
    }

    #[test]
    fn stiffness_is_symmetric() {
        let (m, d) = setup(Domain::Square, 3, 1);
        let a = assemble_stiffness(&m, &d, 18.0);
        assert!(a.asymmetry() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn penalty_enters_linearly() {
        let (m, d) = setup(Domain::Square, 2, 0);
        let a6 = assemble_stiffness(&m, &d, 6.0);
        let a9 = assemble_stiffness(&m, &d, 9.0);
        let p = assemble_penalty(&m, &d);
        let diff = a9.add_scaled(&a6, -1.0).unwrap().add_scaled(&p, -3.0).unwrap();
        assert!(diff.max_abs() <= 1e-12 * a9.max_abs());
    }

    #[test]
    fn swapping_interior_sides_changes_nothing() {
        let (m, d) = setup(Domain::LShape, 3, 0);
        let a = assemble_stiffness(&m, &d, 18.0);
        let mut t = Terms::full(18.0);
        t.swap_sides = true;
        let b = assemble_terms(&m, &d, t);
        let diff = a.add_scaled(&b, -1.0).unwrap();
        assert!(diff.max_abs() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn load_of_one_sums_to_area() {
        for (domain, area) in [(Domain::Square, 1.0), (Domain::LShape, 0.75)] {
            for k in [2, 3] {
                let (m, d) = setup(domain, k, 0);
                let s: f64 = assemble_load(&m, &d, &|_| 1.0).iter().sum();
                assert!((s - area).abs() < 1e-13);
                assert!(assemble_load(&m, &d, &|_| 0.0).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn homogeneous_elimination_zeroes_boundary() {
        let (m, d) = setup(Domain::Square, 2, 0);
        let a = assemble_stiffness(&m, &d, 6.0);
        let b = assemble_load(&m, &d, &|_| 1.0);
        let red = impose_boundary(&a, &b, &d, BoundaryCondition::Homogeneous);
        assert_eq!(red.free.len(), d.num_dofs() - d.boundary_dofs().len());
        let full = red.expand(&vec![1.0; red.free.len()]);
        for i in d.boundary_dofs() {
            assert_eq!(full[i], 0.0);
        }
        assert!(red.matrix.asymmetry() <= 1e-12 * red.matrix.max_abs());
    }

    #[test]
    fn interpolated_elimination_keeps_vertex_values() {
        let (m, d) = setup(Domain::Square, 3, 0);
        let p = example1();
        let u = p.exact.clone().unwrap();
        let g = d.interpolate(|x| u.value(x));
        let a = assemble_stiffness(&m, &d, 18.0);
        let b = assemble_load(&m, &d, &|_| 0.0);
        let red = impose_boundary(&a, &b, &d, BoundaryCondition::Interpolated(&g));
        let full = red.expand(&vec![0.0; red.free.len()]);
        for v in 0..m.num_vertices() {
            if m.is_boundary_vertex(v) {
                assert_eq!(full[v], u.value(m.vertices()[v]));
            }
        }
    }

    #[test]
    fn boundary_functional_splits_under_normal_flip() {
        // The mean term changes sign with the normal, the penalty term
        // (a product of two jumps) does not.
        let (m, d) = setup(Domain::Square, 2, 0);
        let u = example1().exact.unwrap();
        let mean_plus = inhomogeneous_parts(&m, &d, u.as_ref(), 0.0, 1.0);
        let mean_minus = inhomogeneous_parts(&m, &d, u.as_ref(), 0.0, -1.0);
        let full_plus = inhomogeneous_parts(&m, &d, u.as_ref(), 6.0, 1.0);
        let full_minus = inhomogeneous_parts(&m, &d, u.as_ref(), 6.0, -1.0);
        let scale = full_plus.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        assert!(scale > 0.0);
        for i in 0..d.num_dofs() {
            assert!((mean_plus[i] + mean_minus[i]).abs() <= 1e-13 * scale);
            let pen_plus = full_plus[i] - mean_plus[i];
            let pen_minus = full_minus[i] - mean_minus[i];
            assert!((pen_plus - pen_minus).abs() <= 1e-13 * scale);
        }
    }
}
