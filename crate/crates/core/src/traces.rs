//! One-sided normal-derivative traces of basis functions along mesh edges.
//!
//! Edge quadrature points live on the physical edge (parametrized from the
//! lower to the higher vertex id) and are pulled back into each adjacent
//! triangle, so no assumption about local edge numbering is needed.

use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadRule;
use crate::space::{reference_basis, DofMap, ElementMap, RefDerivs, MAX_LOCAL};

/// Physical quadrature on one edge.
#[derive(Debug, Clone)]
pub struct EdgeQuad {
    pub points: Vec<Point>,
    /// Physical weights (they sum to the edge length).
    pub weights: Vec<f64>,
    pub normal: Point,
    pub length: f64,
}

impl EdgeQuad {
    pub fn new(mesh: &Mesh, e: usize, rule: &QuadRule) -> EdgeQuad {
        let [lo, hi] = mesh.edges()[e].vertices;
        let a = mesh.vertices()[lo];
        let b = mesh.vertices()[hi];
        let length = mesh.edge_length(e);
        let points = rule
            .points
            .iter()
            .map(|p| [a[0] + p[0] * (b[0] - a[0]), a[1] + p[0] * (b[1] - a[1])])
            .collect();
        let weights = rule.weights.iter().map(|w| w * length).collect();
        EdgeQuad {
            points,
            weights,
            normal: mesh.unit_normal(e),
            length,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// First, second and third derivatives along a fixed direction of every
/// local basis function of one triangle, at the points of an [`EdgeQuad`].
#[derive(Debug, Clone)]
pub struct SideTrace {
    pub triangle: usize,
    pub n_local: usize,
    /// `dn[q][i]`
    pub dn: Vec<[f64; MAX_LOCAL]>,
    pub dnn: Vec<[f64; MAX_LOCAL]>,
    pub dnnn: Vec<[f64; MAX_LOCAL]>,
}

impl SideTrace {
    /// Traces of the basis of triangle `t` along `direction`.
    pub fn new(mesh: &Mesh, dofmap: &DofMap, t: usize, quad: &EdgeQuad, direction: Point) -> SideTrace {
        let basis = reference_basis(dofmap.degree()).expect("dofmap degree is supported");
        let map = ElementMap::new(mesh, t);
        let d = map.reference_direction(direction);
        let n = basis.len();
        let order = if dofmap.degree() >= 3 { 3 } else { 2 };
        let mut r = RefDerivs::default();
        let mut trace = SideTrace {
            triangle: t,
            n_local: n,
            dn: Vec::with_capacity(quad.len()),
            dnn: Vec::with_capacity(quad.len()),
            dnnn: Vec::with_capacity(quad.len()),
        };
        for &p in &quad.points {
            basis.eval(map.to_reference(p), order, &mut r);
            let mut a = [0.0; MAX_LOCAL];
            let mut b = [0.0; MAX_LOCAL];
            let mut c = [0.0; MAX_LOCAL];
            for i in 0..n {
                a[i] = r.dir1(i, d);
                b[i] = r.dir2(i, d);
                if order == 3 {
                    c[i] = r.dir3(i, d);
                }
            }
            trace.dn.push(a);
            trace.dnn.push(b);
            trace.dnnn.push(c);
        }
        trace
    }

    /// Derivatives of the discrete function `uh` restricted to this side,
    /// returned as `(dn, dnn, dnnn)` per quadrature point.
    pub fn function(&self, dofs: &[usize], uh: &[f64]) -> Vec<[f64; 3]> {
        (0..self.dn.len())
            .map(|q| {
                let mut out = [0.0; 3];
                for (i, &d) in dofs.iter().enumerate().take(self.n_local) {
                    out[0] += uh[d] * self.dn[q][i];
                    out[1] += uh[d] * self.dnn[q][i];
                    out[2] += uh[d] * self.dnnn[q][i];
                }
                out
            })
            .collect()
    }
}

/// Jumps and averages of a discrete function on one edge.
///
/// Interior: with `n` pointing from the first to the second adjacent
/// triangle, `jump = second - first` for each derivative order and
/// `mean = (first + second) / 2`. Boundary (`n` outward): the first
/// normal-derivative jump is `-du/dn`, the mean is the one-sided value.
#[derive(Debug, Clone)]
pub struct EdgeJumps {
    pub quad: EdgeQuad,
    /// `[d/dn, d2/dn2, d3/dn3]` jumps per quadrature point.
    pub jump: Vec<[f64; 3]>,
    pub mean_dnn: Vec<f64>,
    pub boundary: bool,
}

impl EdgeJumps {
    pub fn new(mesh: &Mesh, dofmap: &DofMap, uh: &[f64], e: usize, rule: &QuadRule) -> EdgeJumps {
        let quad = EdgeQuad::new(mesh, e, rule);
        let edge = &mesh.edges()[e];
        let t0 = edge.triangles[0];
        let first = SideTrace::new(mesh, dofmap, t0, &quad, quad.normal).function(dofmap.cell_dofs(t0), uh);
        if edge.boundary {
            let jump = first.iter().map(|v| [-v[0], 0.0, 0.0]).collect();
            let mean_dnn = first.iter().map(|v| v[1]).collect();
            return EdgeJumps {
                quad,
                jump,
                mean_dnn,
                boundary: true,
            };
        }
        let t1 = edge.triangles[1];
        let second = SideTrace::new(mesh, dofmap, t1, &quad, quad.normal).function(dofmap.cell_dofs(t1), uh);
        let jump = first
            .iter()
            .zip(&second)
            .map(|(a, b)| [b[0] - a[0], b[1] - a[1], b[2] - a[2]])
            .collect();
        let mean_dnn = first.iter().zip(&second).map(|(a, b)| 0.5 * (a[1] + b[1])).collect();
        EdgeJumps {
            quad,
            jump,
            mean_dnn,
            boundary: false,
        }
    }

    /// `||jump of derivative `order`||_{L2(e)}` (order 1, 2 or 3).
    pub fn jump_norm(&self, order: usize) -> f64 {
        self.jump
            .iter()
            .zip(&self.quad.weights)
            .map(|(j, w)| w * j[order - 1] * j[order - 1])
            .sum::<f64>()
            .sqrt()
    }
}
