use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{AdaptiveRidge, ArConfig, FitState, Segmentation, Start};
use crate::error::{Error, Result};
use crate::select::{argmin_prefer_last, criteria, Criteria, Criterion};

/// One fitted penalty of a path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub lambda: f64,
    pub theta_hat: Vec<f64>,
    pub edge_weights: Vec<f64>,
    pub deltas: Vec<f64>,
    pub effective_dim: f64,
    /// Standard error of `effective_dim` under the stochastic trace.
    pub effective_dim_se: Option<f64>,
    /// `2ℓ(θ̂)`.
    pub cost2: f64,
    pub criteria: Criteria,
    pub zone_count: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds spent on the fit and its trace.
    pub wall_time: f64,
}

impl PathRecord {
    pub fn state(&self) -> FitState {
        FitState {
            lambda: self.lambda,
            theta: self.theta_hat.clone(),
            edge_weights: self.edge_weights.clone(),
            deltas: self.deltas.clone(),
            iteration: self.iterations,
            converged: self.converged,
            last_change: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PathEntry {
    Fitted(PathRecord),
    Failed {
        lambda: f64,
        error: String,
        numerical: bool,
    },
}

impl PathEntry {
    pub fn record(&self) -> Option<&PathRecord> {
        match self {
            PathEntry::Fitted(r) => Some(r),
            PathEntry::Failed { .. } => None,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            PathEntry::Fitted(r) => r.lambda,
            PathEntry::Failed { lambda, .. } => *lambda,
        }
    }
}

/// Index of the minimizing penalty for each criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SelectedIndices {
    pub aic: Option<usize>,
    pub bic: Option<usize>,
    pub gcv: Option<usize>,
}

impl SelectedIndices {
    pub fn get(&self, c: Criterion) -> Option<usize> {
        match c {
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
            Criterion::Gcv => self.gcv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathFit {
    pub lambdas: Vec<f64>,
    pub entries: Vec<PathEntry>,
    /// Some penalty failed; its entry holds the error.
    pub partial: bool,
    pub selected: SelectedIndices,
}

impl PathFit {
    pub fn record(&self, i: usize) -> Option<&PathRecord> {
        self.entries.get(i).and_then(PathEntry::record)
    }

    pub fn records(&self) -> impl Iterator<Item = (usize, &PathRecord)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.record().map(|r| (i, r)))
    }

    pub fn total_iterations(&self) -> usize {
        self.records().map(|(_, r)| r.iterations).sum()
    }

    pub fn all_converged(&self) -> bool {
        !self.partial && self.records().all(|(_, r)| r.converged)
    }
}

/// A logarithmic penalty grid. Missing endpoints default to `1e-3·ρ` and
/// `1e3·ρ` for a problem scale `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaGrid {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            min: None,
            max: None,
            count: 50,
        }
    }
}

impl LambdaGrid {
    /// `count` log-spaced values from `min` to `max`; a single value is `min`.
    pub fn values(&self, rho: f64) -> Result<Vec<f64>> {
        let min = self.min.unwrap_or(1e-3 * rho);
        let max = self.max.unwrap_or(1e3 * rho);
        if self.count == 0 {
            return Err(Error::InvalidConfig("penalty count must be at least 1".into()));
        }
        if !(min > 0.0 && min.is_finite()) {
            return Err(Error::InvalidConfig(format!("smallest penalty must be positive, got {min}")));
        }
        if self.count == 1 {
            return Ok(vec![min]);
        }
        if !(max > min && max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "largest penalty {max} must exceed the smallest {min}"
            )));
        }
        let (a, b) = (min.ln(), max.ln());
        let step = (b - a) / (self.count - 1) as f64;
        let mut v: Vec<f64> = (0..self.count).map(|i| (a + step * i as f64).exp()).collect();
        v[0] = min;
        v[self.count - 1] = max;
        Ok(v)
    }
}

/// `p / Tr(Σ⁻¹)`, the noise variance scale that anchors the default grid.
pub fn penalty_scale(prec: &crate::sparse::SparseSym) -> f64 {
    prec.dim() as f64 / prec.trace()
}

/// Grid must be non-empty, finite, nonnegative and strictly ascending.
pub(crate) fn validate_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Empty("penalty grid"));
    }
    if let Some(i) = lambdas.iter().position(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidConfig(format!(
            "penalty {} at position {i} must be finite and nonnegative",
            lambdas[i]
        )));
    }
    if let Some(i) = lambdas.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!(
            "penalty grid must be strictly ascending ({} then {})",
            lambdas[i],
            lambdas[i + 1]
        )));
    }
    Ok(())
}

impl AdaptiveRidge {
    /// Fits the grid in order. A failed penalty is recorded and the next one
    /// restarts from the last successful weights.
    pub fn run_path(&mut self, lambdas: &[f64], cfg: &ArConfig) -> Result<PathFit> {
        cfg.validate()?;
        validate_grid(lambdas)?;
        let p = self.graph().n_vertices();
        let mut entries = Vec::with_capacity(lambdas.len());
        let mut last: Option<FitState> = None;
        for &lambda in lambdas {
            let t0 = Instant::now();
            let start = match (&last, cfg.warm_start) {
                (Some(s), true) => Start::Warm(s),
                _ => Start::Cold,
            };
            let outcome = self.fit(lambda, start, cfg).and_then(|state| {
                let e = self.effective_dimension(cfg)?;
                let raw = self.cost2(&state.theta)?;
                let scale = self.observations().iter().map(|v| v * v).sum::<f64>();
                let cost2 = if raw < 0.0 && raw > -1e-12 * scale.max(1.0) { 0.0 } else { raw };
                let crit = criteria(cost2, e.value, p)?;
                let zones = Segmentation::from_deltas(self.graph(), &state.theta, &state.deltas, cfg.cutoff);
                Ok((state, e, cost2, crit, zones.zone_count))
            });
            match outcome {
                Ok((state, e, cost2, crit, zone_count)) => {
                    log::debug!(
                        "λ = {lambda:.4e}: {} iterations, e = {:.4}, {} zones",
                        state.iteration,
                        e.value,
                        zone_count
                    );
                    entries.push(PathEntry::Fitted(PathRecord {
                        lambda,
                        theta_hat: state.theta.clone(),
                        edge_weights: state.edge_weights.clone(),
                        deltas: state.deltas.clone(),
                        effective_dim: e.value,
                        effective_dim_se: e.std_error,
                        cost2,
                        criteria: crit,
                        zone_count,
                        iterations: state.iteration,
                        converged: state.converged,
                        wall_time: t0.elapsed().as_secs_f64(),
                    }));
                    last = Some(state);
                }
                Err(err) => {
                    log::warn!("fit failed at λ = {lambda}: {err}");
                    entries.push(PathEntry::Failed {
                        lambda,
                        error: err.to_string(),
                        numerical: err.is_numerical(),
                    });
                }
            }
        }
        let partial = entries.iter().any(|e| e.record().is_none());
        let pick = |c: Criterion| {
            let v: Vec<f64> = entries
                .iter()
                .map(|e| e.record().map_or(f64::NAN, |r| r.criteria.get(c)))
                .collect();
            argmin_prefer_last(&v).ok()
        };
        let selected = SelectedIndices {
            aic: pick(Criterion::Aic),
            bic: pick(Criterion::Bic),
            gcv: pick(Criterion::Gcv),
        };
        Ok(PathFit {
            lambdas: lambdas.to_vec(),
            entries,
            partial,
            selected,
        })
    }
}
