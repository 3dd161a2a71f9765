//! Lagrange bases on the reference triangle and their affine push-forward.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Largest local dimension (cubic).
pub const MAX_LOCAL: usize = 10;

/// Number of local basis functions of degree `k`.
pub fn local_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Reference-coordinate derivatives of every local basis function at one
/// point. Second derivatives are stored `[xx, xy, yy]`, third derivatives
/// `[xxx, xxy, xyy, yyy]`.
#[derive(Debug, Clone, Copy)]
pub struct RefDerivs {
    pub n: usize,
    pub val: [f64; MAX_LOCAL],
    pub d1: [[f64; 2]; MAX_LOCAL],
    pub d2: [[f64; 3]; MAX_LOCAL],
    pub d3: [[f64; 4]; MAX_LOCAL],
}

impl Default for RefDerivs {
    fn default() -> Self {
        RefDerivs {
            n: 0,
            val: [0.0; MAX_LOCAL],
            d1: [[0.0; 2]; MAX_LOCAL],
            d2: [[0.0; 3]; MAX_LOCAL],
            d3: [[0.0; 4]; MAX_LOCAL],
        }
    }
}

impl RefDerivs {
    /// First derivative of basis `i` along reference direction `d`.
    #[inline]
    pub fn dir1(&self, i: usize, d: [f64; 2]) -> f64 {
        self.d1[i][0] * d[0] + self.d1[i][1] * d[1]
    }

    #[inline]
    pub fn dir2(&self, i: usize, d: [f64; 2]) -> f64 {
        let h = self.d2[i];
        h[0] * d[0] * d[0] + 2.0 * h[1] * d[0] * d[1] + h[2] * d[1] * d[1]
    }

    #[inline]
    pub fn dir3(&self, i: usize, d: [f64; 2]) -> f64 {
        let t = self.d3[i];
        t[0] * d[0].powi(3) + 3.0 * t[1] * d[0] * d[0] * d[1] + 3.0 * t[2] * d[0] * d[1] * d[1] + t[3] * d[1].powi(3)
    }
}

/// Lagrange basis of degree `k` on `(0,0),(1,0),(0,1)`, represented in the
/// monomial basis through an inverted Vandermonde matrix.
#[derive(Debug)]
pub struct ReferenceBasis {
    degree: usize,
    nodes: Vec<[f64; 2]>,
    exponents: Vec<(i32, i32)>,
    /// `coeffs[m * n + i]`: coefficient of monomial `m` in basis function `i`.
    coeffs: Vec<f64>,
}

impl ReferenceBasis {
    fn build(k: usize) -> ReferenceBasis {
        let nodes = reference_nodes(k);
        let mut exponents = Vec::new();
        for total in 0..=k as i32 {
            for b in 0..=total {
                exponents.push((total - b, b));
            }
        }
        let n = nodes.len();
        let vander = DMatrix::from_fn(n, n, |r, c| {
            let (a, b) = exponents[c];
            nodes[r][0].powi(a) * nodes[r][1].powi(b)
        });
        let inv = vander
            .clone()
            .try_inverse()
            .expect("Lagrange Vandermonde matrix is invertible");
        let cond = vander.amax() * inv.amax() * n as f64;
        assert!(cond < 1e8, "ill-conditioned Vandermonde matrix (estimate {cond:e})");
        // inv[(m, i)] is the coefficient of monomial m in basis function i.
        let coeffs = (0..n).flat_map(|m| (0..n).map(move |i| (m, i))).map(|(m, i)| inv[(m, i)]).collect();
        ReferenceBasis {
            degree: k,
            nodes,
            exponents,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange nodes in local order: vertices, then `k-1` nodes per local
    /// edge (edge `i` runs from vertex `i+1` to vertex `i+2`), then the
    /// barycenter for `k = 3`.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Derivatives up to `order` (at most 3) at reference point `xi`.
    pub fn eval(&self, xi: [f64; 2], order: usize, out: &mut RefDerivs) {
        let n = self.len();
        out.n = n;
        let mut mono = [[0.0f64; 10]; MAX_LOCAL];
        // Derivative multi-indices (p, q) in the order of RefDerivs.
        const ORDERS: [(i32, i32); 10] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];
        let count = match order {
            0 => 1,
            1 => 3,
            2 => 6,
            _ => 10,
        };
        for (m, &(a, b)) in self.exponents.iter().enumerate() {
            for (s, &(p, q)) in ORDERS.iter().enumerate().take(count) {
                mono[m][s] = if p > a || q > b {
                    0.0
                } else {
                    falling(a, p) * falling(b, q) * xi[0].powi(a - p) * xi[1].powi(b - q)
                };
            }
        }
        for i in 0..n {
            let mut acc = [0.0f64; 10];
            for (m, row) in mono.iter().enumerate().take(n) {
                let c = self.coeffs[m * n + i];
                if c != 0.0 {
                    for s in 0..count {
                        acc[s] += c * row[s];
                    }
                }
            }
            out.val[i] = acc[0];
            out.d1[i] = [acc[1], acc[2]];
            out.d2[i] = [acc[3], acc[4], acc[5]];
            out.d3[i] = [acc[6], acc[7], acc[8], acc[9]];
        }
    }
}

fn falling(a: i32, p: i32) -> f64 {
    (0..p).map(|j| (a - j) as f64).product()
}

fn reference_nodes(k: usize) -> Vec<[f64; 2]> {
    let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut nodes = v.to_vec();
    for i in 0..3 {
        let a = v[(i + 1) % 3];
        let b = v[(i + 2) % 3];
        for j in 1..k {
            let s = j as f64 / k as f64;
            nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    if k == 3 {
        nodes.push([1.0 / 3.0, 1.0 / 3.0]);
    }
    nodes
}

/// Shared reference basis for degree 2 or 3.
pub fn reference_basis(k: usize) -> Result<&'static ReferenceBasis> {
    static P2: OnceLock<ReferenceBasis> = OnceLock::new();
    static P3: OnceLock<ReferenceBasis> = OnceLock::new();
    match k {
        2 => Ok(P2.get_or_init(|| ReferenceBasis::build(2))),
        3 => Ok(P3.get_or_init(|| ReferenceBasis::build(3))),
        _ => Err(Error::UnsupportedDegree(k)),
    }
}

/// Affine map `x = origin + B xi` of a mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: Point,
    /// `jac[r][c]`: row `r`, column `c` of `B`.
    pub jac: [[f64; 2]; 2],
    /// Inverse of `B`; `inv[a][i] = d xi_a / d x_i`.
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementMap {
    pub fn new(mesh: &Mesh, t: usize) -> ElementMap {
        let [a, b, c] = mesh.triangle_points(t);
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        ElementMap { origin: a, jac, inv, det }
    }

    pub fn to_physical(&self, xi: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, p: Point) -> [f64; 2] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Reference direction whose reference directional derivative equals
    /// the physical derivative along `n`.
    #[inline]
    pub fn reference_direction(&self, n: Point) -> [f64; 2] {
        [
            self.inv[0][0] * n[0] + self.inv[0][1] * n[1],
            self.inv[1][0] * n[0] + self.inv[1][1] * n[1],
        ]
    }

    /// Physical gradient of basis `i`.
    #[inline]
    pub fn grad(&self, r: &RefDerivs, i: usize) -> [f64; 2] {
        let g = r.d1[i];
        [
            g[0] * self.inv[0][0] + g[1] * self.inv[1][0],
            g[0] * self.inv[0][1] + g[1] * self.inv[1][1],
        ]
    }

    /// Physical Hessian of basis `i` as `[xx, xy, yy]`.
    #[inline]
    pub fn hessian(&self, r: &RefDerivs, i: usize) -> [f64; 3] {
        let h = r.d2[i];
        let hm = [[h[0], h[1]], [h[1], h[2]]];
        let g = &self.inv;
        let mut out = [0.0; 3];
        for (slot, (p, q)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += g[a][p] * hm[a][b] * g[b][q];
                }
            }
            out[slot] = s;
        }
        out
    }

    /// Physical third derivatives of basis `i` as `[xxx, xxy, xyy, yyy]`.
    pub fn third(&self, r: &RefDerivs, i: usize) -> [f64; 4] {
        let t = r.d3[i];
        let tref = |a: usize, b: usize, c: usize| t[a + b + c];
        let g = &self.inv;
        let mut out = [0.0; 4];
        for (slot, (p, q, s)) in [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)].into_iter().enumerate() {
            let mut acc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        acc += g[a][p] * g[b][q] * g[c][s] * tref(a, b, c);
                    }
                }
            }
            out[slot] = acc;
        }
        out
    }
}

/// Physical values and derivatives of all local basis functions of one
/// triangle at a batch of reference points.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub max_deriv: usize,
    /// `values[q][i]`
    pub values: Vec<Vec<f64>>,
    /// `gradients[q][i][a]`
    pub gradients: Vec<Vec<[f64; 2]>>,
    /// `hessians[q][i][a][b]`
    pub hessians: Vec<Vec<[[f64; 2]; 2]>>,
    /// `thirds[q][i][a][b][c]`
    pub thirds: Vec<Vec<[[[f64; 2]; 2]; 2]>>,
}

/// Evaluates the degree-`k` basis of triangle `t` at reference points.
pub fn eval_basis(mesh: &Mesh, t: usize, k: usize, pts: &[[f64; 2]], max_deriv: usize) -> Result<BasisEval> {
    if max_deriv > 3 {
        return Err(Error::DerivativeOrder(max_deriv));
    }
    let basis = reference_basis(k)?;
    let map = ElementMap::new(mesh, t);
    let n = basis.len();
    let mut r = RefDerivs::default();
    let mut out = BasisEval {
        max_deriv,
        values: Vec::with_capacity(pts.len()),
        gradients: Vec::new(),
        hessians: Vec::new(),
        thirds: Vec::new(),
    };
    for &xi in pts {
        basis.eval(xi, max_deriv, &mut r);
        out.values.push(r.val[..n].to_vec());
        if max_deriv >= 1 {
            out.gradients.push((0..n).map(|i| map.grad(&r, i)).collect());
        }
        if max_deriv >= 2 {
            out.hessians.push(
                (0..n)
                    .map(|i| {
                        let h = map.hessian(&r, i);
                        [[h[0], h[1]], [h[1], h[2]]]
                    })
                    .collect(),
            );
        }
        if max_deriv >= 3 {
            out.thirds.push(
                (0..n)
                    .map(|i| {
                        let t = map.third(&r, i);
                        let at = |a: usize, b: usize, c: usize| t[a + b + c];
                        let mut m = [[[0.0; 2]; 2]; 2];
                        for (a, plane) in m.iter_mut().enumerate() {
                            for (b, row) in plane.iter_mut().enumerate() {
                                for (c, v) in row.iter_mut().enumerate() {
                                    *v = at(a, b, c);
                                }
                            }
                        }
                        m
                    })
                    .collect(),
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Domain;

    #[test]
    fn kronecker_property() {
        for k in [2, 3] {
            let b = reference_basis(k).unwrap();
            assert_eq!(b.len(), local_dim(k));
            let mut r = RefDerivs::default();
            for (j, &node) in b.nodes().iter().enumerate() {
                b.eval(node, 0, &mut r);
                for i in 0..b.len() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((r.val[i] - expect).abs() < 1e-13, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn unsupported_degrees() {
        assert!(matches!(reference_basis(1), Err(Error::UnsupportedDegree(1))));
        assert!(matches!(reference_basis(4), Err(Error::UnsupportedDegree(4))));
        let m = Mesh::build_initial(Domain::Square);
        assert!(matches!(eval_basis(&m, 0, 2, &[[0.2, 0.2]], 4), Err(Error::DerivativeOrder(4))));
    }

    #[test]
    fn partition_of_unity_and_symmetry() {
        let m = Mesh::build_initial(Domain::LShape).uniform_refine();
        let pts = [[0.1, 0.2], [0.3, 0.3], [0.7, 0.1], [1.0 / 3.0, 1.0 / 3.0]];
        for k in [2, 3] {
            for t in [0, 5, 40] {
                let e = eval_basis(&m, t, k, &pts, 3).unwrap();
                for q in 0..pts.len() {
                    let s: f64 = e.values[q].iter().sum();
                    assert!((s - 1.0).abs() < 1e-13);
                    let g = e.gradients[q].iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
                    assert!(g[0].abs() < 1e-10 && g[1].abs() < 1e-10);
                    for i in 0..local_dim(k) {
                        let h = e.hessians[q][i];
                        assert_eq!(h[0][1], h[1][0]);
                        let t3 = e.thirds[q][i];
                        assert_eq!(t3[0][0][1], t3[0][1][0]);
                        assert_eq!(t3[0][1][0], t3[1][0][0]);
                        assert_eq!(t3[1][1][0], t3[0][1][1]);
                    }
                }
            }
        }
    }

    #[test]
    fn quadratic_third_derivatives_vanish() {
        let m = Mesh::build_initial(Domain::Square);
        let e = eval_basis(&m, 3, 2, &[[0.25, 0.5], [0.1, 0.1]], 3).unwrap();
        for q in 0..2 {
            for t3 in &e.thirds[q] {
                assert!(t3.iter().flatten().flatten().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn cubic_third_derivatives_constant() {
        let m = Mesh::build_initial(Domain::Square).uniform_refine();
        let e = eval_basis(&m, 7, 3, &[[0.25, 0.5], [0.1, 0.1], [0.6, 0.2]], 3).unwrap();
        for i in 0..10 {
            for q in 1..3 {
                for (a, b) in e.thirds[0][i].iter().flatten().flatten().zip(e.thirds[q][i].iter().flatten().flatten()) {
                    assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
                }
            }
        }
    }

    #[test]
    fn cubic_hessian_matches_finite_differences() {
        let b = reference_basis(3).unwrap();
        let c = [1.0 / 3.0, 1.0 / 3.0];
        let h = 1e-4;
        let mut r = RefDerivs::default();
        b.eval(c, 2, &mut r);
        let val = |p: [f64; 2]| {
            let mut s = RefDerivs::default();
            b.eval(p, 0, &mut s);
            s.val
        };
        let f0 = val(c);
        let fxp = val([c[0] + h, c[1]]);
        let fxm = val([c[0] - h, c[1]]);
        let fyp = val([c[0], c[1] + h]);
        let fym = val([c[0], c[1] - h]);
        let fpp = val([c[0] + h, c[1] + h]);
        let fpm = val([c[0] + h, c[1] - h]);
        let fmp = val([c[0] - h, c[1] + h]);
        let fmm = val([c[0] - h, c[1] - h]);
        for i in 0..10 {
            let dxx = (fxp[i] - 2.0 * f0[i] + fxm[i]) / (h * h);
            let dyy = (fyp[i] - 2.0 * f0[i] + fym[i]) / (h * h);
            let dxy = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) / (4.0 * h * h);
            let scale = r.d2[i].iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (fd, exact) in [(dxx, r.d2[i][0]), (dxy, r.d2[i][1]), (dyy, r.d2[i][2])] {
                assert!((fd - exact).abs() < 1e-5 * scale, "basis {i}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn physical_derivatives_match_finite_differences() {
        let m = Mesh::build_initial(Domain::LShape).uniform_refine();
        let t = 11;
        let map = ElementMap::new(&m, t);
        let b = reference_basis(3).unwrap();
        let xi = [0.3, 0.25];
        let x = map.to_physical(xi);
        let mut r = RefDerivs::default();
        b.eval(xi, 3, &mut r);
        let h = 1e-5;
        let at = |p: Point| {
            let mut s = RefDerivs::default();
            b.eval(map.to_reference(p), 2, &mut s);
            (0..10).map(|i| map.hessian(&s, i)).collect::<Vec<_>>()
        };
        let hp = at([x[0] + h, x[1]]);
        let hm = at([x[0] - h, x[1]]);
        let vp = at([x[0], x[1] + h]);
        let vm = at([x[0], x[1] - h]);
        for i in 0..10 {
            let third = map.third(&r, i);
            let dxxx = (hp[i][0] - hm[i][0]) / (2.0 * h);
            let dxxy = (vp[i][0] - vm[i][0]) / (2.0 * h);
            let dxyy = (hp[i][2] - hm[i][2]) / (2.0 * h);
            let dyyy = (vp[i][2] - vm[i][2]) / (2.0 * h);
            let scale = third.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (fd, exact) in [(dxxx, third[0]), (dxxy, third[1]), (dxyy, third[2]), (dyyy, third[3])] {
                assert!((fd - exact).abs() < 1e-6 * scale, "{fd} vs {exact}");
            }
        }
    }
}
