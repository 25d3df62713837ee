use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{minimum_degree, SparseSym};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

static NEXT_SYMBOLIC_ID: AtomicU64 = AtomicU64::new(1);

/// Symbolic Cholesky analysis of a symmetric pattern: the fill-reducing
/// permutation, the elimination tree and the full pattern of the factor `L`
/// with `P A Pᵀ = L Lᵀ`.
#[derive(Debug)]
pub struct Symbolic {
    id: u64,
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    pinv: Vec<usize>,
    // pattern of the matrix that was analysed
    a_col_ptr: Vec<usize>,
    a_row_idx: Vec<usize>,
    // upper triangle of P A Pᵀ by column, and where each input slot lands in it
    c_col_ptr: Vec<usize>,
    c_row_idx: Vec<usize>,
    a_to_c: Vec<usize>,
    parent: Vec<usize>,
    // column k of L: diagonal first, then rows > k ascending
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    // nonzero columns of row k of L, in topological order of the elimination tree
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
}

impl Symbolic {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Unique per analysis; a refactorization never changes it.
    pub fn fingerprint(&self) -> u64 {
        self.id
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse_permutation(&self) -> &[usize] {
        &self.pinv
    }

    /// Parent of each (permuted) column in the elimination tree, `None` at roots.
    pub fn etree_parent(&self, k: usize) -> Option<usize> {
        (self.parent[k] != NONE).then_some(self.parent[k])
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_row_idx.len()
    }

    /// Rows of factor column `k` (permuted indices), diagonal first.
    pub fn factor_col_rows(&self, k: usize) -> &[usize] {
        &self.l_row_idx[self.l_col_ptr[k]..self.l_col_ptr[k + 1]]
    }

    fn matches(&self, a: &SparseSym) -> bool {
        a.dim() == self.n && a.col_ptr() == self.a_col_ptr && a.row_idx() == self.a_row_idx
    }
}

/// Computes the fill-reducing ordering and the factor pattern of `a`.
pub fn factor_symbolic(a: &SparseSym) -> Result<Arc<Symbolic>> {
    a.check_pattern_symmetry()?;
    let n = a.dim();
    let perm = minimum_degree(n, a.col_ptr(), a.row_idx());
    let mut pinv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        pinv[old] = new;
    }

    let mut c_counts = vec![0usize; n];
    for j in 0..n {
        for &i in a.col_rows(j) {
            let (pi, pj) = (pinv[i], pinv[j]);
            if pi <= pj {
                c_counts[pj] += 1;
            }
        }
    }
    let mut c_col_ptr = vec![0usize; n + 1];
    for k in 0..n {
        c_col_ptr[k + 1] = c_col_ptr[k] + c_counts[k];
    }
    let mut next = c_col_ptr[..n].to_vec();
    let mut c_row_idx = vec![0usize; c_col_ptr[n]];
    let mut a_to_c = vec![NONE; a.nnz()];
    for j in 0..n {
        let start = a.col_ptr()[j];
        for (off, &i) in a.col_rows(j).iter().enumerate() {
            let (pi, pj) = (pinv[i], pinv[j]);
            if pi <= pj {
                let slot = next[pj];
                next[pj] += 1;
                c_row_idx[slot] = pi;
                a_to_c[start + off] = slot;
            }
        }
    }

    let parent = etree(n, &c_col_ptr, &c_row_idx);

    // row patterns via the elimination tree
    let mut row_ptr = vec![0usize; n + 1];
    let mut row_cols = Vec::new();
    let mut col_counts = vec![1usize; n];
    let mut flag = vec![NONE; n];
    let mut stack = vec![0usize; n];
    let mut path = Vec::new();
    for k in 0..n {
        let top = ereach(k, &c_col_ptr, &c_row_idx, &parent, &mut flag, &mut stack, &mut path);
        for &i in &stack[top..] {
            col_counts[i] += 1;
        }
        row_cols.extend_from_slice(&stack[top..]);
        row_ptr[k + 1] = row_cols.len();
    }

    let mut l_col_ptr = vec![0usize; n + 1];
    for k in 0..n {
        l_col_ptr[k + 1] = l_col_ptr[k] + col_counts[k];
    }
    let mut l_next = l_col_ptr[..n].to_vec();
    let mut l_row_idx = vec![0usize; l_col_ptr[n]];
    for k in 0..n {
        for &i in &row_cols[row_ptr[k]..row_ptr[k + 1]] {
            l_row_idx[l_next[i]] = k;
            l_next[i] += 1;
        }
        l_row_idx[l_next[k]] = k;
        l_next[k] += 1;
    }

    Ok(Arc::new(Symbolic {
        id: NEXT_SYMBOLIC_ID.fetch_add(1, Ordering::Relaxed),
        n,
        perm,
        pinv,
        a_col_ptr: a.col_ptr().to_vec(),
        a_row_idx: a.row_idx().to_vec(),
        c_col_ptr,
        c_row_idx,
        a_to_c,
        parent,
        l_col_ptr,
        l_row_idx,
        row_ptr,
        row_cols,
    }))
}

/// Elimination tree of a matrix given by its upper triangle (by column).
fn etree(n: usize, col_ptr: &[usize], row_idx: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &row in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
            let mut i = row;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L`, written to `stack[top..]` in
/// topological order. Returns `top`.
fn ereach(
    k: usize,
    col_ptr: &[usize],
    row_idx: &[usize],
    parent: &[usize],
    flag: &mut [usize],
    stack: &mut [usize],
    path: &mut Vec<usize>,
) -> usize {
    let n = stack.len();
    let mut top = n;
    flag[k] = k;
    for &row in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
        let mut i = row;
        if i > k {
            continue;
        }
        path.clear();
        while flag[i] != k {
            path.push(i);
            flag[i] = k;
            i = parent[i];
        }
        while let Some(v) = path.pop() {
            top -= 1;
            stack[top] = v;
        }
    }
    top
}

/// Numeric Cholesky factor bound to a shared symbolic analysis.
///
/// Refactoring with a new matrix of the same pattern reuses the analysis
/// untouched; solves borrow the factor immutably and may run concurrently.
#[derive(Debug, Clone)]
pub struct Factorization {
    symbolic: Arc<Symbolic>,
    l_values: Vec<f64>,
    ready: bool,
    c_values: Vec<f64>,
    work: Vec<f64>,
    next: Vec<usize>,
}

impl Factorization {
    pub fn new(symbolic: Arc<Symbolic>) -> Self {
        let n = symbolic.n;
        Factorization {
            l_values: vec![0.0; symbolic.factor_nnz()],
            c_values: vec![0.0; symbolic.c_row_idx.len()],
            work: vec![0.0; n],
            next: vec![0; n],
            ready: false,
            symbolic,
        }
    }

    /// Symbolic analysis followed by a numeric factorization.
    pub fn factor(a: &SparseSym) -> Result<Self> {
        let mut f = Factorization::new(factor_symbolic(a)?);
        f.refactor(a)?;
        Ok(f)
    }

    pub fn symbolic(&self) -> &Arc<Symbolic> {
        &self.symbolic
    }

    pub fn dim(&self) -> usize {
        self.symbolic.n
    }

    pub fn is_ready(&self) -> bool {
        self.ready
    }

    /// Numeric factorization of `a`, which must carry the analysed pattern.
    pub fn refactor(&mut self, a: &SparseSym) -> Result<()> {
        let sym = Arc::clone(&self.symbolic);
        if !sym.matches(a) {
            return Err(Error::PatternMismatch);
        }
        self.ready = false;
        self.c_values.iter_mut().for_each(|v| *v = 0.0);
        for (&slot, &v) in sym.a_to_c.iter().zip(a.values()) {
            if slot != NONE {
                self.c_values[slot] = v;
            }
        }

        let n = sym.n;
        let x = &mut self.work;
        let lp = &sym.l_col_ptr;
        let li = &sym.l_row_idx;
        let lx = &mut self.l_values;
        self.next.copy_from_slice(&lp[..n]);
        let next = &mut self.next;

        for k in 0..n {
            for p in sym.c_col_ptr[k]..sym.c_col_ptr[k + 1] {
                x[sym.c_row_idx[p]] = self.c_values[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &sym.row_cols[sym.row_ptr[k]..sym.row_ptr[k + 1]] {
                let lki = x[i] / lx[lp[i]];
                x[i] = 0.0;
                for p in lp[i] + 1..next[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                lx[next[i]] = lki;
                next[i] += 1;
            }
            if !(d > 0.0) || !d.is_finite() {
                // leave the work vector clean for the next attempt
                x.iter_mut().for_each(|v| *v = 0.0);
                return Err(Error::NotPositiveDefinite {
                    pivot: sym.perm[k],
                });
            }
            lx[next[k]] = d.sqrt();
            next[k] += 1;
        }
        self.ready = true;
        Ok(())
    }

    fn check_ready(&self) -> Result<()> {
        if !self.ready {
            return Err(Error::InvalidConfig(
                "factorization has no current numeric factor".into(),
            ));
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut work = vec![0.0; self.dim()];
        let mut out = rhs.to_vec();
        self.solve_in_place(&mut out, &mut work)?;
        Ok(out)
    }

    /// Solves `A y = b` overwriting `b`; `work` must have length `n`.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) -> Result<()> {
        self.check_ready()?;
        let n = self.dim();
        if b.len() != n || work.len() != n {
            return Err(Error::DimensionMismatch {
                what: "right-hand side",
                expected: n,
                found: b.len(),
            });
        }
        let sym = &*self.symbolic;
        for k in 0..n {
            work[k] = b[sym.perm[k]];
        }
        self.forward(work);
        self.backward(work);
        for k in 0..n {
            b[sym.perm[k]] = work[k];
        }
        Ok(())
    }

    /// Solves against every column of `rhs`.
    pub fn solve_columns(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if rhs.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "right-hand side rows",
                expected: n,
                found: rhs.nrows(),
            });
        }
        let mut out = rhs.clone();
        let mut work = vec![0.0; n];
        for mut col in out.column_iter_mut() {
            let mut b: Vec<f64> = col.iter().copied().collect();
            self.solve_in_place(&mut b, &mut work)?;
            col.copy_from_slice(&b);
        }
        Ok(out)
    }

    /// `L y = y` in permuted coordinates.
    pub(crate) fn forward(&self, y: &mut [f64]) {
        let sym = &*self.symbolic;
        let (lp, li, lx) = (&sym.l_col_ptr, &sym.l_row_idx, &self.l_values);
        for j in 0..sym.n {
            let yj = y[j] / lx[lp[j]];
            y[j] = yj;
            if yj != 0.0 {
                for p in lp[j] + 1..lp[j + 1] {
                    y[li[p]] -= lx[p] * yj;
                }
            }
        }
    }

    /// `Lᵀ y = y` in permuted coordinates.
    pub(crate) fn backward(&self, y: &mut [f64]) {
        let sym = &*self.symbolic;
        let (lp, li, lx) = (&sym.l_col_ptr, &sym.l_row_idx, &self.l_values);
        for j in (0..sym.n).rev() {
            let mut s = y[j];
            for p in lp[j] + 1..lp[j + 1] {
                s -= lx[p] * y[li[p]];
            }
            y[j] = s / lx[lp[j]];
        }
    }

    /// Forward solve restricted to `reach` (sorted ascending, closed under
    /// elimination-tree ancestors). Only entries in `reach` are touched.
    pub(crate) fn forward_sparse(&self, y: &mut [f64], reach: &[usize]) {
        let sym = &*self.symbolic;
        let (lp, li, lx) = (&sym.l_col_ptr, &sym.l_row_idx, &self.l_values);
        for &j in reach {
            let yj = y[j] / lx[lp[j]];
            y[j] = yj;
            if yj != 0.0 {
                for p in lp[j] + 1..lp[j + 1] {
                    y[li[p]] -= lx[p] * yj;
                }
            }
        }
    }

    pub(crate) fn parents(&self) -> &[usize] {
        &self.symbolic.parent
    }

    /// Log-determinant of the factored matrix.
    pub fn log_det(&self) -> Result<f64> {
        self.check_ready()?;
        let sym = &*self.symbolic;
        Ok((0..sym.n)
            .map(|k| 2.0 * self.l_values[sym.l_col_ptr[k]].ln())
            .sum())
    }
}
