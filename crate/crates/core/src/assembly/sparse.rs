//! Symmetric sparse matrices in compressed sparse row form.
//!
//! Both triangles are stored, so the row-compressed arrays of `A` are also
//! the column-compressed arrays of `A` (the transpose is the same matrix).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    /// Set by constructors that guarantee symmetry by construction.
    pub symmetric: bool,
}

impl SymSparseMatrix {
    /// Zero matrix with the given row pattern. Column lists are sorted and
    /// deduplicated here.
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> SymSparseMatrix {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        SymSparseMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
            symmetric: true,
        }
    }

    /// Builds a matrix by summing `(row, col, value)` triplets in the given
    /// order. Symmetry is checked, not assumed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<SymSparseMatrix> {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!("triplet ({i}, {j}) outside a {n}x{n} matrix")));
            }
            rows[i].push(j);
        }
        let mut m = SymSparseMatrix::from_pattern(rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        m.symmetric = m.asymmetry() <= 1e-12 * scale;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Storage position of entry `(i, j)`, if it is in the pattern.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let cols = &self.col_idx[lo..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|p| lo + p)
    }

    /// Adds `v` to entry `(i, j)`. Panics if the entry is outside the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    /// `self + s * other` for two matrices with identical patterns.
    pub fn add_scaled(&self, other: &SymSparseMatrix, s: f64) -> Result<SymSparseMatrix> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::Dimension("sparsity patterns differ".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        out.symmetric = self.symmetric && other.symmetric;
        Ok(out)
    }

    /// Principal submatrix on `keep` (sorted, increasing).
    pub fn principal_submatrix(&self, keep: &[usize]) -> SymSparseMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in keep {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    col_idx.push(map[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SymSparseMatrix {
            n: keep.len(),
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Dense copy (row-major), for small matrices in tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }
}
