//! Exhaustive active-set search for small obstacle problems.

use kirchhoff_obstacle::assembly::{assemble_load, assemble_stiffness, impose_boundary, BoundaryCondition, SymSparseMatrix};
use kirchhoff_obstacle::mesh::{Domain, Mesh};
use kirchhoff_obstacle::space::DofMap;
use nalgebra::{DMatrix, DVector};

pub struct Qp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub psi: Vec<f64>,
    pub constrained: Vec<usize>,
}

impl Qp {
    pub fn build(dom: Domain, k: usize, load: f64, top: f64, curv: f64) -> (Qp, SymSparseMatrix, Vec<f64>) {
        let m = Mesh::build_initial(dom);
        let d = DofMap::new(&m, k).unwrap();
        let a = assemble_stiffness(&m, &d, if k == 2 { 6.0 } else { 18.0 });
        let b = assemble_load(&m, &d, &|_| load);
        let red = impose_boundary(&a, &b, &d, BoundaryCondition::Homogeneous);
        let constrained: Vec<usize> = d.interior_vertices().iter().map(|&v| red.full_to_free[v]).collect();
        let psi: Vec<f64> = d
            .interior_vertices()
            .iter()
            .map(|&v| {
                let p = d.node(v);
                top - curv * (p[0] * p[0] + p[1] * p[1])
            })
            .collect();
        let dense = red.matrix.to_dense();
        let n = dense.len();
        let qp = Qp {
            a: DMatrix::from_fn(n, n, |i, j| dense[i][j]),
            b: DVector::from_column_slice(&red.rhs),
            psi: psi.clone(),
            constrained,
        };
        (qp, red.matrix, red.rhs)
    }

    /// Every active set whose equality-constrained minimiser satisfies the
    /// KKT sign conditions, with that minimiser.
    pub fn brute_force(&self) -> Vec<(Vec<bool>, DVector<f64>)> {
        let n = self.a.nrows();
        let m = self.constrained.len();
        let scale = self.a.amax();
        let mut found = Vec::new();
        for mask in 0u32..(1 << m) {
            let active: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
            let fixed: Vec<Option<f64>> = {
                let mut f = vec![None; n];
                for j in 0..m {
                    if active[j] {
                        f[self.constrained[j]] = Some(self.psi[j]);
                    }
                }
                f
            };
            let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
            let af = DMatrix::from_fn(free.len(), free.len(), |i, j| self.a[(free[i], free[j])]);
            let bf = DVector::from_fn(free.len(), |i, _| {
                let r = free[i];
                self.b[r] - (0..n).filter_map(|c| fixed[c].map(|g| self.a[(r, c)] * g)).sum::<f64>()
            });
            let xf = af.cholesky().unwrap().solve(&bf);
            let mut x = DVector::zeros(n);
            for (i, &r) in free.iter().enumerate() {
                x[r] = xf[i];
            }
            for (i, g) in fixed.iter().enumerate() {
                if let Some(g) = g {
                    x[i] = *g;
                }
            }
            let res = &self.a * &x - &self.b;
            let ok = (0..m).all(|j| {
                let p = self.constrained[j];
                if active[j] {
                    res[p] >= -1e-9 * scale
                } else {
                    x[p] - self.psi[j] >= -1e-9
                }
            });
            if ok {
                found.push((active, x));
            }
        }
        found
    }
}
