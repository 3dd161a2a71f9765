//! Symmetric positive definite sparse solves: sparse Cholesky (faer) with
//! iterative refinement, and Jacobi-preconditioned conjugate gradients for
//! very large systems.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Side};

use crate::assembly::SymSparseMatrix;
use crate::error::{Error, Result};

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Largest system handed to the direct solver.
pub const DIRECT_LIMIT: usize = 300_000;
const MAX_REFINEMENT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `||A x - b|| / ||b||` (absolute residual when `b = 0`).
    pub relative_residual: f64,
    /// Refinement sweeps for the direct method, iterations for CG.
    pub iterations: usize,
    pub method: SolveMethod,
}

/// Symbolic Cholesky analysis of one sparsity pattern, reusable for any
/// matrix with exactly that pattern.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    symbolic: SymbolicLlt<usize>,
}

/// Numeric factor of one matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    llt: Llt<usize, f64>,
}

impl SparseCholesky {
    pub fn analyse(a: &SymSparseMatrix) -> Result<SparseCholesky> {
        let n = a.dim();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
        let symbolic = SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| Error::Dimension(format!("{e:?}")))?;
        Ok(SparseCholesky {
            n,
            row_ptr: a.row_ptr().to_vec(),
            col_idx: a.col_idx().to_vec(),
            symbolic,
        })
    }

    /// Numeric factorization of `a`, which must share the analysed pattern.
    pub fn factor(&self, a: &SymSparseMatrix) -> Result<CholeskyFactor> {
        if a.dim() != self.n || a.row_ptr() != self.row_ptr.as_slice() || a.col_idx() != self.col_idx.as_slice() {
            return Err(Error::Dimension("matrix pattern differs from the analysed one".into()));
        }
        let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.row_ptr, None, &self.col_idx);
        // Stored symmetric, so the row-compressed arrays are also the column-compressed ones.
        let mat = SparseColMatRef::new(sym, a.values());
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat, Side::Lower).map_err(|_| Error::NotSpd)?;
        Ok(CholeskyFactor { n: self.n, llt })
    }
}

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        if self.n > 0 {
            let rhs = MatMut::from_column_major_slice_mut(&mut x, self.n, 1);
            self.llt.solve_in_place_with_conj(Conj::No, rhs);
        }
        x
    }

    /// Solve followed by iterative refinement until the relative residual
    /// reaches `tol`.
    pub fn solve_refined(&self, a: &SymSparseMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
        let bnorm = norm(b);
        let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
        let mut x = self.solve(b);
        let mut res = residual(a, &x, b);
        let mut rel = norm(&res) / scale;
        let mut sweeps = 0;
        while rel > tol && sweeps < MAX_REFINEMENT {
            let dx = self.solve(&res);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            res = residual(a, &x, b);
            let next = norm(&res) / scale;
            sweeps += 1;
            if !(next < rel) {
                rel = next;
                break;
            }
            rel = next;
        }
        if !(rel <= tol) {
            return Err(Error::SolveTolerance { residual: rel, tol });
        }
        Ok(SolveReport {
            solution: x,
            relative_residual: rel,
            iterations: sweeps,
            method: SolveMethod::Cholesky,
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `b - A x`
fn residual(a: &SymSparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Solves `A x = b` to relative residual `tol`.
pub fn solve_spd(a: &SymSparseMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
    if b.len() != a.dim() {
        return Err(Error::Dimension(format!("rhs length {} for a {}x{} matrix", b.len(), a.dim(), a.dim())));
    }
    if a.nnz() == a.dim() && (0..a.dim()).all(|i| a.position(i, i).is_some()) {
        let d = a.diagonal();
        if d.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NotSpd);
        }
        let x: Vec<f64> = b.iter().zip(&d).map(|(bi, di)| bi / di).collect();
        let bnorm = norm(b);
        let rel = norm(&residual(a, &x, b)) / if bnorm > 0.0 { bnorm } else { 1.0 };
        return Ok(SolveReport {
            solution: x,
            relative_residual: rel,
            iterations: 0,
            method: SolveMethod::Cholesky,
        });
    }
    if a.dim() <= DIRECT_LIMIT {
        SparseCholesky::analyse(a)?.factor(a)?.solve_refined(a, b, tol)
    } else {
        conjugate_gradient(a, b, tol, 20 * a.dim())
    }
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn conjugate_gradient(a: &SymSparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<SolveReport> {
    let n = a.dim();
    let diag = a.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::NotSpd);
    }
    let bnorm = norm(b);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / scale;
    let mut it = 0;
    while rel > tol {
        if it >= max_iter {
            return Err(Error::MaxIterations(max_iter));
        }
        a.matvec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::NotSpd);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        rel = norm(&r) / scale;
    }
    // The recursive residual drifts; report the true one.
    let rel = norm(&residual(a, &x, b)) / scale;
    Ok(SolveReport {
        solution: x,
        relative_residual: rel,
        iterations: it,
        method: SolveMethod::ConjugateGradient,
    })
}
