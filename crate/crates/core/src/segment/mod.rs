//! Adaptive-ridge segmentation: the reweighted ridge iteration, the
//! warm-started penalty path and zone extraction.

mod engine;
mod path;
mod zones;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::{CscMatrix, SparseSym, TraceMode};

pub use engine::{AdaptiveRidge, Design, IterateInfo, Start};
pub use path::{penalty_scale, LambdaGrid, PathEntry, PathFit, PathRecord, SelectedIndices};
pub use zones::Segmentation;

/// Tuning of the adaptive-ridge iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArConfig {
    /// Smoothing constant of the weight update `1 / (d² + ε)`.
    pub epsilon: f64,
    /// Stop when the largest change of any `δ` is at most this.
    pub tol: f64,
    /// Edges with `δ >= cutoff` are cut.
    pub cutoff: f64,
    pub max_iter: usize,
    pub trace_mode: TraceMode,
    /// Start each penalty of a path from the previous converged weights.
    pub warm_start: bool,
}

impl Default for ArConfig {
    fn default() -> Self {
        ArConfig {
            epsilon: 1e-6,
            tol: 1e-8,
            cutoff: 0.99,
            max_iter: 10_000,
            trace_mode: TraceMode::Auto,
            warm_start: true,
        }
    }
}

impl ArConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return bad(format!("cutoff must lie in (0, 1), got {}", self.cutoff));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if let TraceMode::Stochastic { probes: 0, .. } = self.trace_mode {
            return bad("stochastic trace needs at least one probe".into());
        }
        Ok(())
    }
}

/// The iterate returned by one adaptive-ridge fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitState {
    pub lambda: f64,
    pub theta: Vec<f64>,
    /// Weights refreshed from `theta`; these seed the next penalty of a path.
    pub edge_weights: Vec<f64>,
    /// `v_jk (θ_j − θ_k)²` per edge, in `[0, 1)`.
    pub deltas: Vec<f64>,
    pub iteration: usize,
    pub converged: bool,
    /// Largest `|δ^(l) − δ^(l−1)|` at the last iteration, if one was measured.
    pub last_change: Option<f64>,
}

/// `½ (x − θ)ᵀ Σ⁻¹ (x − θ)`.
pub fn cost(x: &[f64], theta: &[f64], prec: &SparseSym) -> Result<f64> {
    if x.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            what: "fitted values",
            expected: x.len(),
            found: theta.len(),
        });
    }
    let r: Vec<f64> = x.iter().zip(theta).map(|(a, b)| a - b).collect();
    Ok(0.5 * prec.quad_form(&r)?)
}

/// `ℓ(θ) + (λ/2) Σ log((θ_j − θ_k)² + ε)`, the objective each reweighting
/// step decreases.
pub fn implicit_objective(
    x: &[f64],
    theta: &[f64],
    prec: &SparseSym,
    g: &Graph,
    lambda: f64,
    epsilon: f64,
) -> Result<f64> {
    let pen: f64 = g
        .edges()
        .iter()
        .map(|&(j, k)| ((theta[j] - theta[k]).powi(2) + epsilon).ln())
        .sum();
    Ok(cost(x, theta, prec)? + 0.5 * lambda * pen)
}

/// One fit from unit weights, or from `init_weights` when given.
pub fn ar_iterate(
    x: &[f64],
    prec: &SparseSym,
    g: &Graph,
    lambda: f64,
    init_weights: Option<&[f64]>,
    cfg: &ArConfig,
) -> Result<FitState> {
    let mut engine = AdaptiveRidge::new(x, prec, g)?;
    let start = init_weights.map_or(Start::Cold, Start::Weights);
    engine.fit(lambda, start, cfg)
}

/// One fit of `x = Xθ + noise` with the graph penalty on `θ`, from unit
/// weights.
pub fn ar_iterate_regression(
    x: &[f64],
    design: &Design,
    prec: &SparseSym,
    g: &Graph,
    lambda: f64,
    cfg: &ArConfig,
) -> Result<FitState> {
    let mut engine = AdaptiveRidge::regression(x, design.clone(), prec, g)?;
    engine.fit(lambda, Start::Cold, cfg)
}

/// Fits every penalty of an ascending grid, warm-starting each from the
/// previous converged weights unless `cfg.warm_start` is off.
pub fn run_path(
    x: &[f64],
    prec: &SparseSym,
    g: &Graph,
    lambdas: &[f64],
    cfg: &ArConfig,
) -> Result<PathFit> {
    AdaptiveRidge::new(x, prec, g)?.run_path(lambdas, cfg)
}

/// Cuts the edges with `δ >= cfg.cutoff` and labels the remaining connected
/// components.
pub fn extract_zones(g: &Graph, state: &FitState, cfg: &ArConfig) -> Segmentation {
    if !state.converged {
        log::warn!(
            "extracting zones from a fit that did not converge (λ = {}, {} iterations)",
            state.lambda,
            state.iteration
        );
    }
    Segmentation::from_deltas(g, &state.theta, &state.deltas, cfg.cutoff)
}

impl From<CscMatrix> for Design {
    fn from(m: CscMatrix) -> Self {
        Design::Sparse(m)
    }
}

#[cfg(test)]
mod tests;
