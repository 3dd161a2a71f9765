//! Continuous `P_k` Lagrange spaces (`k = 2, 3`) on a [`Mesh`].

pub mod basis;

use std::cell::Cell;

pub use basis::{eval_basis, local_dim, reference_basis, BasisEval, ElementMap, RefDerivs, ReferenceBasis, MAX_LOCAL};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Vertex,
    EdgeNode,
    CellNode,
}

/// Global numbering of the Lagrange nodes: vertices first, then `k-1` nodes
/// per edge ordered from the lower to the higher vertex id, then cell nodes.
#[derive(Debug, Clone)]
pub struct DofMap {
    degree: usize,
    local: usize,
    cell_dofs: Vec<usize>,
    kind: Vec<DofKind>,
    owner: Vec<usize>,
    boundary: Vec<bool>,
    nodes: Vec<Point>,
    interior_vertices: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, k: usize) -> Result<DofMap> {
        let basis = reference_basis(k)?;
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let nt = mesh.num_triangles();
        let per_edge = k - 1;
        let per_cell = (k - 1) * (k - 2) / 2;
        let n = nv + per_edge * ne + per_cell * nt;
        let local = basis.len();

        let mut kind = Vec::with_capacity(n);
        let mut owner = Vec::with_capacity(n);
        let mut boundary = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        for (v, &p) in mesh.vertices().iter().enumerate() {
            kind.push(DofKind::Vertex);
            owner.push(v);
            boundary.push(mesh.is_boundary_vertex(v));
            nodes.push(p);
        }
        for (e, edge) in mesh.edges().iter().enumerate() {
            let a = mesh.vertices()[edge.vertices[0]];
            let b = mesh.vertices()[edge.vertices[1]];
            for j in 1..k {
                let s = j as f64 / k as f64;
                kind.push(DofKind::EdgeNode);
                owner.push(e);
                boundary.push(edge.boundary);
                nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        let mut cell_dofs = Vec::with_capacity(nt * local);
        for t in 0..nt {
            let tv = mesh.triangles()[t].vertices;
            let te = mesh.triangle_edges(t);
            cell_dofs.extend_from_slice(&tv);
            for i in 0..3 {
                let from = tv[(i + 1) % 3];
                let base = nv + per_edge * te[i];
                let forward = from == mesh.edges()[te[i]].vertices[0];
                for j in 1..k {
                    cell_dofs.push(if forward { base + j - 1 } else { base + k - 1 - j });
                }
            }
            if per_cell == 1 {
                let id = nv + per_edge * ne + t;
                cell_dofs.push(id);
                kind.push(DofKind::CellNode);
                owner.push(t);
                boundary.push(false);
                let p = mesh.triangle_points(t);
                nodes.push([(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]);
            }
        }
        let interior_vertices = (0..nv).filter(|&v| !boundary[v]).collect();
        Ok(DofMap {
            degree: k,
            local,
            cell_dofs,
            kind,
            owner,
            boundary,
            nodes,
            interior_vertices,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_dofs(&self) -> usize {
        self.kind.len()
    }

    pub fn local_dim(&self) -> usize {
        self.local
    }

    /// Global dofs of triangle `t` in local node order.
    pub fn cell_dofs(&self, t: usize) -> &[usize] {
        &self.cell_dofs[t * self.local..(t + 1) * self.local]
    }

    pub fn kind(&self, dof: usize) -> DofKind {
        self.kind[dof]
    }

    /// Vertex, edge or triangle owning `dof`.
    pub fn owner(&self, dof: usize) -> usize {
        self.owner[dof]
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.boundary[dof]
    }

    pub fn boundary_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs()).filter(|&d| self.boundary[d]).collect()
    }

    /// Physical coordinates of the Lagrange node of `dof`.
    pub fn node(&self, dof: usize) -> Point {
        self.nodes[dof]
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Dofs of interior vertices; vertex dofs share the vertex id.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate<F: Fn(Point) -> f64>(&self, g: F) -> Vec<f64> {
        self.nodes.iter().map(|&p| g(p)).collect()
    }
}

/// Value and physical derivatives of a discrete function at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub grad: [f64; 2],
    /// `[xx, xy, yy]`
    pub hessian: [f64; 3],
    /// `[xxx, xxy, xyy, yyy]`
    pub third: [f64; 4],
}

/// Evaluates a discrete function at a reference point of triangle `t`.
pub fn evaluate_in(mesh: &Mesh, dofmap: &DofMap, uh: &[f64], t: usize, xi: [f64; 2], max_deriv: usize) -> Result<PointValue> {
    if max_deriv > 3 {
        return Err(Error::DerivativeOrder(max_deriv));
    }
    let basis = reference_basis(dofmap.degree())?;
    let map = ElementMap::new(mesh, t);
    let mut r = RefDerivs::default();
    basis.eval(xi, max_deriv, &mut r);
    let mut out = PointValue::default();
    for (i, &d) in dofmap.cell_dofs(t).iter().enumerate() {
        let c = uh[d];
        out.value += c * r.val[i];
        if max_deriv >= 1 {
            let g = map.grad(&r, i);
            out.grad[0] += c * g[0];
            out.grad[1] += c * g[1];
        }
        if max_deriv >= 2 {
            let h = map.hessian(&r, i);
            for s in 0..3 {
                out.hessian[s] += c * h[s];
            }
        }
        if max_deriv >= 3 {
            let t3 = map.third(&r, i);
            for s in 0..4 {
                out.third[s] += c * t3[s];
            }
        }
    }
    Ok(out)
}

/// Point evaluation with a caller-local walk cache.
#[derive(Debug)]
pub struct Evaluator<'a> {
    mesh: &'a Mesh,
    dofmap: &'a DofMap,
    uh: &'a [f64],
    last: Cell<Option<usize>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(mesh: &'a Mesh, dofmap: &'a DofMap, uh: &'a [f64]) -> Self {
        Evaluator {
            mesh,
            dofmap,
            uh,
            last: Cell::new(None),
        }
    }

    /// Triangle containing `p`, or an error outside the domain.
    pub fn locate(&self, p: Point) -> Result<usize> {
        let t = self.mesh.locate(p, self.last.get()).ok_or(Error::PointOutside(p[0], p[1]))?;
        self.last.set(Some(t));
        Ok(t)
    }

    pub fn evaluate(&self, p: Point, max_deriv: usize) -> Result<PointValue> {
        let t = self.locate(p)?;
        let xi = ElementMap::new(self.mesh, t).to_reference(p);
        evaluate_in(self.mesh, self.dofmap, self.uh, t, xi, max_deriv)
    }
}

/// Evaluates `uh` at a physical point (value and derivatives up to `max_deriv`).
pub fn evaluate(mesh: &Mesh, dofmap: &DofMap, uh: &[f64], p: Point, max_deriv: usize) -> Result<PointValue> {
    Evaluator::new(mesh, dofmap, uh).evaluate(p, max_deriv)
}
