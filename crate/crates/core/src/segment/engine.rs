use std::sync::Arc;

use nalgebra::DMatrix;

use super::{ArConfig, FitState};
use crate::error::{Error, Result};
use crate::graph::{Graph, LaplacianPattern};
use crate::sparse::{factor_symbolic, CscMatrix, Factorization, SparseSym, SumPattern, TraceEstimate};

/// Extra solves against the exact residual after each factorization. The
/// assembled diagonal of `H + λK` loses the data term once `λ v` is large,
/// the separately computed residual does not.
const REFINE_STEPS: usize = 3;

/// Largest double below one; `δ` is clamped here when `d² ≫ ε` rounds it up.
const DELTA_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// The design matrix of the regression variant, `n` observations by `p`
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(DMatrix<f64>),
    Sparse(CscMatrix),
}

impl Design {
    pub fn nrows(&self) -> usize {
        match self {
            Design::Dense(m) => m.nrows(),
            Design::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Design::Dense(m) => m.ncols(),
            Design::Sparse(m) => m.ncols(),
        }
    }

    /// `X θ`.
    pub fn mul(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        for (j, &t) in theta.iter().enumerate() {
            self.for_col(j, |i, v| out[i] += v * t);
        }
        out
    }

    /// `Xᵀ y`.
    pub fn tmul(&self, y: &[f64]) -> Vec<f64> {
        (0..self.ncols())
            .map(|j| {
                let mut s = 0.0;
                self.for_col(j, |i, v| s += v * y[i]);
                s
            })
            .collect()
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            Design::Dense(m) => {
                for (i, &v) in m.column(j).iter().enumerate() {
                    if v != 0.0 {
                        f(i, v);
                    }
                }
            }
            Design::Sparse(m) => {
                let (rows, vals) = m.col(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    f(i, v);
                }
            }
        }
    }

    /// `Xᵀ W X` keeping the structural nonzeros and the diagonal.
    fn gram(&self, w: &SparseSym) -> Result<SparseSym> {
        let n = self.nrows();
        let mut triplets = Vec::new();
        let mut col = vec![0.0; n];
        for c in 0..self.ncols() {
            col.iter_mut().for_each(|v| *v = 0.0);
            self.for_col(c, |i, v| col[i] = v);
            let wc = w.mul_vec(&col)?;
            for j in c..self.ncols() {
                let mut s = 0.0;
                self.for_col(j, |i, v| s += v * wc[i]);
                if s != 0.0 || j == c {
                    triplets.push((j, c, s));
                }
            }
        }
        SparseSym::from_triplets(self.ncols(), &triplets)
    }
}

/// How a fit initializes its edge weights.
#[derive(Debug, Clone, Copy)]
pub enum Start<'a> {
    /// Unit weights.
    Cold,
    /// Given weights, no previous `δ` to compare against.
    Weights(&'a [f64]),
    /// Weights and `δ` of an earlier fit.
    Warm(&'a FitState),
}

/// What an observer sees after each solve.
#[derive(Debug)]
pub struct IterateInfo<'a> {
    pub iteration: usize,
    pub lambda: f64,
    pub theta: &'a [f64],
    /// Weights of the Laplacian that produced `theta`.
    pub weights_used: &'a [f64],
    /// Weights refreshed from `theta`.
    pub weights: &'a [f64],
    pub deltas: &'a [f64],
    pub change: Option<f64>,
}

/// Solver state shared by all fits on one problem: the data term, the
/// Laplacian pattern, the union pattern of `H + λK` and its symbolic
/// factorization.
pub struct AdaptiveRidge {
    graph: Graph,
    x: Vec<f64>,
    prec: SparseSym,
    design: Option<Design>,
    h: SparseSym,
    rhs: Vec<f64>,
    laplacian: LaplacianPattern,
    sum: SumPattern,
    k: SparseSym,
    system: SparseSym,
    factor: Factorization,
}

fn check_finite(what: &'static str, v: &[f64]) -> Result<()> {
    match v.iter().position(|a| !a.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

fn check_precision(prec: &SparseSym, n: usize) -> Result<()> {
    if prec.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "precision matrix",
            expected: n,
            found: prec.dim(),
        });
    }
    check_finite("precision entry", prec.values())?;
    prec.check_pattern_symmetry()?;
    prec.check_value_symmetry(1e-12)
}

impl AdaptiveRidge {
    /// The signal model `x = θ + noise` with noise precision `prec`.
    pub fn new(x: &[f64], prec: &SparseSym, g: &Graph) -> Result<Self> {
        let p = g.n_vertices();
        if x.len() != p {
            return Err(Error::DimensionMismatch {
                what: "observations",
                expected: p,
                found: x.len(),
            });
        }
        check_finite("observation", x)?;
        check_precision(prec, p)?;
        let rhs = prec.mul_vec(x)?;
        Self::build(g, x, prec.clone(), None, prec.clone(), rhs)
    }

    /// The regression model `x = Xθ + noise`; `X` has one column per vertex.
    pub fn regression(x: &[f64], design: Design, prec: &SparseSym, g: &Graph) -> Result<Self> {
        let p = g.n_vertices();
        if design.ncols() != p {
            return Err(Error::DimensionMismatch {
                what: "design columns",
                expected: p,
                found: design.ncols(),
            });
        }
        if x.len() != design.nrows() {
            return Err(Error::DimensionMismatch {
                what: "observations",
                expected: design.nrows(),
                found: x.len(),
            });
        }
        check_finite("observation", x)?;
        check_precision(prec, x.len())?;
        let h = design.gram(prec)?;
        let rhs = design.tmul(&prec.mul_vec(x)?);
        Self::build(g, x, prec.clone(), Some(design), h, rhs)
    }

    fn build(
        g: &Graph,
        x: &[f64],
        prec: SparseSym,
        design: Option<Design>,
        h: SparseSym,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        let laplacian = LaplacianPattern::new(g);
        let sum = SumPattern::new(&h, laplacian.pattern())?;
        let symbolic = factor_symbolic(sum.pattern())?;
        Ok(AdaptiveRidge {
            graph: g.clone(),
            x: x.to_vec(),
            prec,
            design,
            k: laplacian.pattern().clone(),
            system: sum.pattern().clone(),
            h,
            rhs,
            laplacian,
            sum,
            factor: Factorization::new(symbolic),
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn observations(&self) -> &[f64] {
        &self.x
    }

    pub fn precision(&self) -> &SparseSym {
        &self.prec
    }

    /// `H = Σ⁻¹`, or `XᵀΣ⁻¹X` for the regression model.
    pub fn data_matrix(&self) -> &SparseSym {
        &self.h
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factor
    }

    pub fn symbolic_fingerprint(&self) -> u64 {
        self.factor.symbolic().fingerprint()
    }

    /// `2ℓ(θ)`.
    pub fn cost2(&self, theta: &[f64]) -> Result<f64> {
        let fitted = match &self.design {
            None => theta.to_vec(),
            Some(d) => d.mul(theta),
        };
        let r: Vec<f64> = self.x.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        self.prec.quad_form(&r)
    }

    /// `Tr((H + λK)⁻¹ H)` for the system factored by the last solve.
    pub fn effective_dimension(&self, cfg: &ArConfig) -> Result<TraceEstimate> {
        self.factor.trace_product_inverse(&self.h, cfg.trace_mode)
    }

    pub fn fit(&mut self, lambda: f64, start: Start<'_>, cfg: &ArConfig) -> Result<FitState> {
        self.fit_observed(lambda, start, cfg, &mut |_| {})
    }

    /// Runs the reweighting loop, calling `observer` after every solve.
    pub fn fit_observed(
        &mut self,
        lambda: f64,
        start: Start<'_>,
        cfg: &ArConfig,
        observer: &mut dyn FnMut(&IterateInfo<'_>),
    ) -> Result<FitState> {
        cfg.validate()?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "penalty must be finite and nonnegative, got {lambda}"
            )));
        }
        let m = self.graph.n_edges();
        let (mut weights, mut prev_deltas) = match start {
            Start::Cold => (vec![1.0; m], None),
            Start::Weights(w) => (w.to_vec(), None),
            Start::Warm(s) => (s.edge_weights.clone(), Some(s.deltas.clone())),
        };
        if weights.len() != m {
            return Err(Error::DimensionMismatch {
                what: "initial weights",
                expected: m,
                found: weights.len(),
            });
        }
        if let Some(index) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::NonFinite {
                what: "initial weight (must be positive)",
                index,
            });
        }
        if prev_deltas.as_ref().is_some_and(|d| d.len() != m) {
            prev_deltas = None;
        }

        let mut new_weights = vec![0.0; m];
        let mut deltas = vec![0.0; m];
        let mut iteration = 0;
        loop {
            iteration += 1;
            let theta = self.solve(&weights, lambda, iteration)?;
            self.update(&theta, cfg.epsilon, &mut new_weights, &mut deltas);
            let change = prev_deltas.as_ref().map(|p: &Vec<f64>| {
                p.iter()
                    .zip(&deltas)
                    .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
            });
            observer(&IterateInfo {
                iteration,
                lambda,
                theta: &theta,
                weights_used: &weights,
                weights: &new_weights,
                deltas: &deltas,
                change,
            });
            std::mem::swap(&mut weights, &mut new_weights);
            let trivial = lambda == 0.0 || m == 0;
            let converged = trivial || change.is_some_and(|c| c <= cfg.tol);
            if converged || iteration >= cfg.max_iter {
                if !converged {
                    log::warn!(
                        "no convergence at λ = {lambda} after {iteration} iterations (last change {:?})",
                        change
                    );
                }
                return Ok(FitState {
                    lambda,
                    theta,
                    edge_weights: weights,
                    deltas,
                    iteration: if m == 0 { 0 } else { iteration },
                    converged,
                    last_change: change,
                });
            }
            match &mut prev_deltas {
                Some(p) => p.copy_from_slice(&deltas),
                None => prev_deltas = Some(deltas.clone()),
            }
        }
    }

    /// Factors `H + λ K(weights)` and solves for `θ`, with iterative
    /// refinement against the unassembled residual.
    fn solve(&mut self, weights: &[f64], lambda: f64, iteration: usize) -> Result<Vec<f64>> {
        self.laplacian.fill(weights, self.k.values_mut())?;
        self.sum
            .assemble_into(self.h.values(), self.k.values(), lambda, &mut self.system)?;
        self.factor.refactor(&self.system)?;
        let n = self.rhs.len();
        let mut work = vec![0.0; n];
        let mut theta = self.rhs.clone();
        self.factor.solve_in_place(&mut theta, &mut work)?;
        if lambda > 0.0 {
            for _ in 0..REFINE_STEPS {
                let mut r = self.residual(&theta, weights, lambda)?;
                self.factor.solve_in_place(&mut r, &mut work)?;
                let scale = theta.iter().fold(0.0f64, |a, t| a.max(t.abs()));
                let step = r.iter().fold(0.0f64, |a, t| a.max(t.abs()));
                theta.iter_mut().zip(&r).for_each(|(t, d)| *t += d);
                if !(step > 4.0 * f64::EPSILON * scale) {
                    break;
                }
            }
        }
        if let Some(index) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::Diverged { iteration, index });
        }
        Ok(theta)
    }

    /// `b − Hθ − λ K θ`, with `Kθ` formed from edge differences.
    pub(crate) fn residual(&self, theta: &[f64], weights: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let ht = self.h.mul_vec(theta)?;
        let mut kt = vec![0.0; theta.len()];
        for (&(j, k), &w) in self.graph.edges().iter().zip(weights) {
            let t = w * (theta[j] - theta[k]);
            kt[j] += t;
            kt[k] -= t;
        }
        Ok(self
            .rhs
            .iter()
            .zip(&ht)
            .zip(&kt)
            .map(|((b, h), k)| b - h - lambda * k)
            .collect())
    }

    fn update(&self, theta: &[f64], eps: f64, weights: &mut [f64], deltas: &mut [f64]) {
        for (e, &(j, k)) in self.graph.edges().iter().enumerate() {
            let d = theta[j] - theta[k];
            let u = d * d;
            let v = 1.0 / (u + eps);
            weights[e] = v;
            deltas[e] = (u * v).min(DELTA_MAX);
        }
    }

    pub fn symbolic(&self) -> &Arc<crate::sparse::Symbolic> {
        self.factor.symbolic()
    }
}
