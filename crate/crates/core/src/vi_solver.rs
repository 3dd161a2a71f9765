//! Primal-dual active set method for
//! `min 1/2 x'Ax - b'x` subject to `x_p >= psi_p` for constrained indices `p`.
//!
//! Active indices are imposed by replacing their rows and columns with the
//! identity, which keeps the sparsity pattern fixed: the symbolic Cholesky
//! analysis is done once and each iteration only refactors numerically.

use crate::assembly::SymSparseMatrix;
use crate::error::{Error, Result};
use crate::linsolve::{SparseCholesky, DEFAULT_TOL};

pub const MAX_PDAS_ITERATIONS: usize = 100;

/// Relative to `max |psi|`.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdasOptions {
    /// Active-set constant; `None` means `100 * max diag(A)`.
    pub c: Option<f64>,
    pub max_iter: usize,
    /// Relative residual tolerance of the inner solves.
    pub tol: f64,
}

impl Default for PdasOptions {
    fn default() -> Self {
        PdasOptions {
            c: None,
            max_iter: MAX_PDAS_ITERATIONS,
            tol: DEFAULT_TOL,
        }
    }
}

/// Starting point: primal iterate and one multiplier per constrained index.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    /// Solution in the numbering of the system passed to [`pdas`].
    pub x: Vec<f64>,
    /// Constrained indices, as passed in.
    pub constrained: Vec<usize>,
    /// `lambda[j]` belongs to `constrained[j]`.
    pub lambda: Vec<f64>,
    pub active: Vec<bool>,
    /// Number of linear solves in the active-set loop.
    pub iterations: usize,
}

impl DiscreteSolution {
    /// `sum_p lambda(p)`
    pub fn lambda_mass(&self) -> f64 {
        self.lambda.iter().sum()
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementarityReport {
    /// `max_p (psi_p - x_p)^+`
    pub max_infeasibility: f64,
    /// `max_p (-lambda_p)^+`
    pub max_negative_lambda: f64,
    /// `sum_p |lambda_p (x_p - psi_p)|`
    pub complementarity: f64,
}

pub fn complementarity_report(sol: &DiscreteSolution, psi: &[f64]) -> ComplementarityReport {
    let mut r = ComplementarityReport {
        max_infeasibility: 0.0,
        max_negative_lambda: 0.0,
        complementarity: 0.0,
    };
    for (j, &p) in sol.constrained.iter().enumerate() {
        let gap = sol.x[p] - psi[j];
        r.max_infeasibility = r.max_infeasibility.max(psi[j] - sol.x[p]);
        r.max_negative_lambda = r.max_negative_lambda.max(0.0 - sol.lambda[j]);
        r.complementarity += (sol.lambda[j] * gap).abs();
    }
    r
}

/// Solves the obstacle problem. `psi[j]` is the bound on `x[constrained[j]]`.
pub fn pdas(
    a: &SymSparseMatrix,
    b: &[f64],
    psi: &[f64],
    constrained: &[usize],
    start: Option<&WarmStart>,
    opts: &PdasOptions,
) -> Result<DiscreteSolution> {
    let n = a.dim();
    if b.len() != n || psi.len() != constrained.len() || constrained.iter().any(|&p| p >= n) {
        return Err(Error::Dimension("pdas input lengths are inconsistent".into()));
    }
    let diag = a.diagonal();
    let c = opts.c.unwrap_or_else(|| 100.0 * diag.iter().fold(0.0f64, |m, &d| m.max(d)));
    let chol = SparseCholesky::analyse(a)?;
    let mut is_constrained = vec![usize::MAX; n];
    for (j, &p) in constrained.iter().enumerate() {
        is_constrained[p] = j;
    }

    let (mut x, mut lambda) = match start {
        Some(w) => {
            if w.x.len() != n || w.lambda.len() != constrained.len() {
                return Err(Error::Dimension("warm start lengths are inconsistent".into()));
            }
            (w.x.clone(), w.lambda.clone())
        }
        None => {
            let x = solve_with_active(a, b, psi, constrained, &vec![false; constrained.len()], &chol, opts.tol)?;
            (x, vec![0.0; constrained.len()])
        }
    };

    // Violations below the feasibility tolerance count as contact; otherwise
    // roundoff in the gap can make two degenerate vertices swap forever.
    let feas_tol = FEASIBILITY_TOL * psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let next_active = |x: &[f64], lambda: &[f64]| -> Vec<bool> {
        constrained
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let gap = psi[j] - x[p];
                let gap = if gap.abs() <= feas_tol { 0.0 } else { gap };
                lambda[j] + c * gap > 0.0
            })
            .collect()
    };
    let mut active = next_active(&x, &lambda);
    let mut iterations = 0;
    loop {
        if iterations >= opts.max_iter {
            return Err(Error::PdasIterationCap(opts.max_iter));
        }
        x = solve_with_active(a, b, psi, constrained, &active, &chol, opts.tol)?;
        iterations += 1;
        let ax = a.matvec(&x);
        for (j, &p) in constrained.iter().enumerate() {
            lambda[j] = if active[j] { ax[p] - b[p] } else { 0.0 };
        }
        let next = next_active(&x, &lambda);
        if next == active {
            break;
        }
        active = next;
    }
    Ok(DiscreteSolution {
        x,
        constrained: constrained.to_vec(),
        lambda,
        active,
        iterations,
    })
}

/// Solves with `x_p = psi_p` imposed on the active constrained indices.
fn solve_with_active(
    a: &SymSparseMatrix,
    b: &[f64],
    psi: &[f64],
    constrained: &[usize],
    active: &[bool],
    chol: &SparseCholesky,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = a.dim();
    if !active.iter().any(|&v| v) {
        return Ok(chol.factor(a)?.solve_refined(a, b, tol)?.solution);
    }
    let mut fixed = vec![None; n];
    for (j, &p) in constrained.iter().enumerate() {
        if active[j] {
            fixed[p] = Some(psi[j]);
        }
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for i in 0..n {
        let range = m.row_ptr()[i]..m.row_ptr()[i + 1];
        for pos in range {
            let j = m.col_idx()[pos];
            let v = m.values()[pos];
            match (fixed[i], fixed[j]) {
                (None, None) => {}
                (None, Some(g)) => {
                    rhs[i] -= v * g;
                    m.values_mut()[pos] = 0.0;
                }
                (Some(_), _) => m.values_mut()[pos] = if i == j { 1.0 } else { 0.0 },
            }
        }
        if let Some(g) = fixed[i] {
            rhs[i] = g;
        }
    }
    Ok(chol.factor(&m)?.solve_refined(&m, &rhs, tol)?.solution)
}
