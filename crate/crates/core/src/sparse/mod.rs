//! Symmetric sparse matrices in compressed-column form and a sparse Cholesky
//! solver whose symbolic analysis is computed once per pattern.

mod cholesky;
mod ordering;
mod trace;

pub use cholesky::{factor_symbolic, Factorization, Symbolic};
pub use ordering::minimum_degree;
pub use trace::{TraceEstimate, TraceMode};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A symmetric matrix storing both triangles in compressed-column form.
///
/// Row indices are sorted within each column and the pattern is symmetric:
/// `(i, j)` is stored iff `(j, i)` is. The diagonal is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds a matrix from `(row, col, value)` triplets, each describing the
    /// symmetric pair `(row, col)` and `(col, row)`. Duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut cols: Vec<Vec<(usize, f64)>> = (0..n).map(|j| vec![(j, 0.0)]).collect();
        for (t, &(i, j, v)) in triplets.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::VertexOutOfRange { index: i.max(j), n });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "matrix entry",
                    index: t,
                });
            }
            cols[j].push((i, v));
            if i != j {
                cols[i].push((j, v));
            }
        }
        Ok(Self::from_columns(n, cols))
    }

    fn from_columns(n: usize, mut cols: Vec<Vec<(usize, f64)>>) -> Self {
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in cols.iter_mut() {
            col.sort_by_key(|&(i, _)| i);
            let mut last = usize::MAX;
            for &(i, v) in col.iter() {
                if i == last {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(i);
                    values.push(v);
                    last = i;
                }
            }
            col_ptr.push(row_idx.len());
        }
        SparseSym {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Wraps raw compressed-column arrays holding the full symmetric pattern.
    pub fn from_csc(
        n: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                what: "column pointers",
                expected: n + 1,
                found: col_ptr.len(),
            });
        }
        if row_idx.len() != values.len() || col_ptr[n] != row_idx.len() {
            return Err(Error::DimensionMismatch {
                what: "stored entries",
                expected: col_ptr[n],
                found: row_idx.len().min(values.len()),
            });
        }
        let candidate = SparseSym {
            n,
            col_ptr,
            row_idx,
            values,
        };
        for j in 0..n {
            let rows = candidate.col_rows(j);
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(format!(
                    "column {j} has unsorted or duplicate row indices"
                )));
            }
            if rows.iter().any(|&i| i >= n) {
                return Err(Error::VertexOutOfRange { index: j, n });
            }
            if rows.binary_search(&j).is_err() {
                return Err(Error::InvalidConfig(format!("missing diagonal entry {j}")));
            }
        }
        candidate.check_pattern_symmetry()?;
        if let Some(index) = candidate.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix entry",
                index,
            });
        }
        Ok(candidate)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseSym {
            n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Keeps entries of the lower triangle whose magnitude exceeds `drop_tol`
    /// (plus the diagonal) and mirrors them.
    pub fn from_dense(a: &DMatrix<f64>, drop_tol: f64) -> Self {
        let n = a.nrows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for j in 0..n {
            for i in 0..n {
                let v = if i >= j { a[(i, j)] } else { a[(j, i)] };
                if i == j || v.abs() > drop_tol {
                    cols[j].push((i, v));
                }
            }
        }
        Self::from_columns(n, cols)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for (&i, &v) in self.col_rows(j).iter().zip(self.col_values(j)) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access to the stored values; the pattern stays fixed.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn col_rows(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    pub fn col_values(&self, j: usize) -> &[f64] {
        &self.values[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    /// Position of entry `(i, j)` in the value array, if stored.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        self.col_rows(j)
            .binary_search(&i)
            .ok()
            .map(|k| self.col_ptr[j] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.get(j, j)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    /// True when the patterns (not the values) coincide.
    pub fn same_pattern(&self, other: &SparseSym) -> bool {
        self.n == other.n && self.col_ptr == other.col_ptr && self.row_idx == other.row_idx
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len("vector", x.len())?;
        let mut y = vec![0.0; self.n];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (&i, &v) in self.col_rows(j).iter().zip(self.col_values(j)) {
                y[i] += v * xj;
            }
        }
        Ok(y)
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let ax = self.mul_vec(x)?;
        Ok(ax.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    /// `P A Pᵀ` where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SparseSym> {
        self.check_len("permutation", perm.len())?;
        let mut pinv = vec![usize::MAX; self.n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.n || pinv[old] != usize::MAX {
                return Err(Error::InvalidConfig("not a permutation".into()));
            }
            pinv[old] = new;
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for j in 0..self.n {
            for (&i, &v) in self.col_rows(j).iter().zip(self.col_values(j)) {
                cols[pinv[j]].push((pinv[i], v));
            }
        }
        Ok(Self::from_columns(self.n, cols))
    }

    /// Verifies that every stored `(i, j)` has its mirror `(j, i)`.
    pub fn check_pattern_symmetry(&self) -> Result<()> {
        for j in 0..self.n {
            for &i in self.col_rows(j) {
                if self.slot(j, i).is_none() {
                    return Err(Error::AsymmetricPattern { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Verifies `|a_ij - a_ji| <= tol * max(|a_ij|, |a_ji|)` on every stored pair.
    pub fn check_value_symmetry(&self, tol: f64) -> Result<()> {
        for j in 0..self.n {
            for (&i, &v) in self.col_rows(j).iter().zip(self.col_values(j)) {
                let w = self.get(j, i);
                if (v - w).abs() > tol * v.abs().max(w.abs()) {
                    return Err(Error::AsymmetricValues { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    fn check_len(&self, what: &'static str, found: usize) -> Result<()> {
        if found != self.n {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.n,
                found,
            });
        }
        Ok(())
    }
}

/// The structural union of two symmetric patterns, with the slot maps needed
/// to form `a + s·b` repeatedly without recomputing the union.
#[derive(Debug, Clone)]
pub struct SumPattern {
    pattern: SparseSym,
    a_slots: Vec<usize>,
    b_slots: Vec<usize>,
}

impl SumPattern {
    pub fn new(a: &SparseSym, b: &SparseSym) -> Result<Self> {
        if a.n != b.n {
            return Err(Error::DimensionMismatch {
                what: "matrix sum",
                expected: a.n,
                found: b.n,
            });
        }
        let n = a.n;
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(a.nnz().max(b.nnz()));
        let mut a_slots = vec![0; a.nnz()];
        let mut b_slots = vec![0; b.nnz()];
        col_ptr.push(0);
        for j in 0..n {
            let (ra, rb) = (a.col_rows(j), b.col_rows(j));
            let (mut p, mut q) = (0, 0);
            while p < ra.len() || q < rb.len() {
                let slot = row_idx.len();
                let take_a = q == rb.len() || (p < ra.len() && ra[p] <= rb[q]);
                let take_b = p == ra.len() || (q < rb.len() && rb[q] <= ra[p]);
                if take_a {
                    row_idx.push(ra[p]);
                } else {
                    row_idx.push(rb[q]);
                }
                if take_a {
                    a_slots[a.col_ptr[j] + p] = slot;
                    p += 1;
                }
                if take_b {
                    b_slots[b.col_ptr[j] + q] = slot;
                    q += 1;
                }
            }
            col_ptr.push(row_idx.len());
        }
        let values = vec![0.0; row_idx.len()];
        Ok(SumPattern {
            pattern: SparseSym {
                n,
                col_ptr,
                row_idx,
                values,
            },
            a_slots,
            b_slots,
        })
    }

    /// The union pattern with all values zero.
    pub fn pattern(&self) -> &SparseSym {
        &self.pattern
    }

    /// Writes `a + s·b` into `out`, which must carry the union pattern.
    pub fn assemble_into(
        &self,
        a_values: &[f64],
        b_values: &[f64],
        s: f64,
        out: &mut SparseSym,
    ) -> Result<()> {
        if a_values.len() != self.a_slots.len() || b_values.len() != self.b_slots.len() {
            return Err(Error::PatternMismatch);
        }
        if !out.same_pattern(&self.pattern) {
            return Err(Error::PatternMismatch);
        }
        out.values.iter_mut().for_each(|v| *v = 0.0);
        for (&slot, &v) in self.a_slots.iter().zip(a_values) {
            out.values[slot] += v;
        }
        for (&slot, &v) in self.b_slots.iter().zip(b_values) {
            out.values[slot] += s * v;
        }
        Ok(())
    }

    pub fn assemble(&self, a: &SparseSym, b: &SparseSym, s: f64) -> Result<SparseSym> {
        let mut out = self.pattern.clone();
        self.assemble_into(&a.values, &b.values, s, &mut out)?;
        Ok(out)
    }
}

/// `a + s·b` on the structural union of both patterns.
pub fn add_scaled(a: &SparseSym, b: &SparseSym, s: f64) -> Result<SparseSym> {
    SumPattern::new(a, b)?.assemble(a, b, s)
}

/// A general (rectangular) compressed-column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::VertexOutOfRange {
                    index: if i >= nrows { i } else { j },
                    n: if i >= nrows { nrows } else { ncols },
                });
            }
            cols[j].push((i, v));
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for col in cols.iter_mut() {
            col.sort_by_key(|&(i, _)| i);
            let mut last = usize::MAX;
            for &(i, v) in col.iter() {
                if i == last {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(i);
                    values.push(v);
                    last = i;
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }
}
