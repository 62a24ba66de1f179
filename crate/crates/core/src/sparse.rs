//! Compressed sparse row storage for complex matrices.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Square CSR matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Zero matrix with the given per-row column sets (deduplicated and sorted here).
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for cols in &mut rows {
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.last().is_none_or(|&c| c < n));
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let values = vec![Complex64::new(0.0, 0.0); col_idx.len()];
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from (row, col, value) triplets, summing duplicates in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect();
        Self::from_triplets(n, &triplets)
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

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.position(i, j)
            .map_or(Complex64::new(0.0, 0.0), |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// `y = A x`, rows in parallel (each row sums in fixed order).
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, a)| a * x[j]).sum())
            .collect()
    }

    /// `vᴴ A u`.
    pub fn form(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        self.mul_vec(u)
            .iter()
            .zip(v)
            .map(|(au, vi)| vi.conj() * au)
            .sum()
    }

    /// Keeps the rows and columns whose index has `keep[i] == true`,
    /// renumbered densely in increasing order.
    pub fn restrict(&self, keep: &[bool]) -> CsrMatrix {
        assert_eq!(keep.len(), self.n);
        let mut new_id = vec![usize::MAX; self.n];
        let mut m = 0;
        for (i, &k) in keep.iter().enumerate() {
            if k {
                new_id[i] = m;
                m += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in (0..self.n).filter(|&i| keep[i]) {
            for (j, v) in self.row(i) {
                if keep[j] {
                    col_idx.push(new_id[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n: m,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `self += alpha * other`; both must share the same sparsity pattern.
    pub fn add_scaled(&mut self, alpha: Complex64, other: &CsrMatrix) {
        assert!(self.row_ptr == other.row_ptr && self.col_idx == other.col_idx, "patterns differ");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, _)| self.position(j, i).is_some()))
    }

    /// Largest `|a_ij − conj a_ji|` over stored entries.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Coordinate text, one `i j re im` line per stored entry (0-based).
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(s, "{i} {j} {:.17e} {:.17e}", v.re, v.im).unwrap();
            }
        }
        s
    }
}
