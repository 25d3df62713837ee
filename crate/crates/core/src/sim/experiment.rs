use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grid_scenario_with, rand_index, rmse, Scenario};
use crate::error::{Error, Result};
use crate::segment::{penalty_scale, run_path, ArConfig, LambdaGrid, PathFit, Segmentation};
use crate::select::{select_lambda, Criterion};
use crate::sparse::SparseSym;

/// Noise precision handed to the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisePrecision {
    /// `Σ⁻¹ = I`: the noise level is treated as unknown.
    #[default]
    Identity,
    /// `Σ⁻¹ = σ⁻² I`.
    Known,
}

/// A batch of grid scenarios, one per noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub rows: usize,
    pub cols: usize,
    pub zone_rows: usize,
    pub zone_cols: usize,
    /// Noise standard deviations.
    pub sigmas: Vec<f64>,
    pub seed: u64,
    /// Missing endpoints scale with `p / Tr(Σ⁻¹)`.
    pub lambda: LambdaGrid,
    pub precision: NoisePrecision,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            rows: 20,
            cols: 20,
            zone_rows: 10,
            zone_cols: 10,
            sigmas: vec![0.1, 0.5, 1.0, 2.0, 5.0],
            seed: 1,
            lambda: LambdaGrid::default(),
            precision: NoisePrecision::Identity,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        super::block_zones(self.rows, self.cols, self.zone_rows, self.zone_cols)?;
        if self.sigmas.is_empty() {
            return Err(Error::Empty("sigmas"));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {s}")));
        }
        self.lambda.values(1.0).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionScore {
    pub rand: f64,
    pub ari: f64,
    pub zones_true: usize,
}

/// Scores of the fit selected by one criterion at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub sigma: f64,
    pub criterion: Criterion,
    pub lambda: f64,
    pub rmse: f64,
    pub zones_est: usize,
    pub model_dim: f64,
    /// Iterations summed over the whole path.
    pub iters: usize,
    /// Wall time of the whole path, seconds.
    pub seconds: f64,
    /// Against the drawn zones.
    pub drawn: PartitionScore,
    /// Against the drawn zones with equal-level neighbours merged.
    pub effective: PartitionScore,
    pub error: Option<String>,
}

/// The per-σ data kept for maps.
#[derive(Debug, Clone)]
pub struct SigmaMap {
    pub sigma: f64,
    pub scenario: Scenario,
    pub x: Vec<f64>,
    pub selections: Vec<(Criterion, Option<(f64, Segmentation)>)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ExperimentRow>,
    pub maps: Vec<SigmaMap>,
    pub paths: Vec<PathFit>,
}

/// Fits one path per noise level and scores the AIC, BIC and GCV picks.
/// Level `i` draws from stream `i` of the generator seeded with `spec.seed`,
/// so rows do not depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec, cfg: &ArConfig) -> Result<ExperimentOutcome> {
    spec.validate()?;
    cfg.validate()?;
    let per_sigma: Vec<(Vec<ExperimentRow>, SigmaMap, PathFit)> = spec
        .sigmas
        .par_iter()
        .enumerate()
        .map(|(i, &sigma)| run_one(spec, cfg, i, sigma))
        .collect::<Result<_>>()?;
    let mut out = ExperimentOutcome {
        rows: Vec::new(),
        maps: Vec::new(),
        paths: Vec::new(),
    };
    for (rows, map, path) in per_sigma {
        out.rows.extend(rows);
        out.maps.push(map);
        out.paths.push(path);
    }
    Ok(out)
}

fn run_one(
    spec: &ExperimentSpec,
    cfg: &ArConfig,
    index: usize,
    sigma: f64,
) -> Result<(Vec<ExperimentRow>, SigmaMap, PathFit)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let (scenario, x) = grid_scenario_with(
        spec.rows,
        spec.cols,
        spec.zone_rows,
        spec.zone_cols,
        sigma,
        &mut rng,
        spec.seed,
    )?;
    let p = x.len();
    let prec = match spec.precision {
        NoisePrecision::Identity => SparseSym::identity(p),
        NoisePrecision::Known => SparseSym::diagonal(&vec![1.0 / (sigma * sigma); p]),
    };
    let lambdas = spec.lambda.values(penalty_scale(&prec))?;
    let path = run_path(&x, &prec, &scenario.graph, &lambdas, cfg)?;
    let iters = path.total_iterations();
    let seconds: f64 = path.records().map(|(_, r)| r.wall_time).sum();
    let effective = scenario.effective_zones();
    let drawn_count = scenario.zone_count();

    let mut rows = Vec::new();
    let mut selections = Vec::new();
    for c in Criterion::ALL {
        let picked = select_lambda(&path, c).map(|i| path.record(i).expect("selected record exists"));
        match picked {
            Ok(rec) => {
                let seg = Segmentation::from_deltas(&scenario.graph, &rec.theta_hat, &rec.deltas, cfg.cutoff);
                let (r0, a0) = rand_index(&seg.zone_of, &scenario.true_zones)?;
                let (r1, a1) = rand_index(&seg.zone_of, effective.ids())?;
                rows.push(ExperimentRow {
                    sigma,
                    criterion: c,
                    lambda: rec.lambda,
                    rmse: rmse(&rec.theta_hat, &scenario.theta_true)?,
                    zones_est: seg.zone_count,
                    model_dim: rec.effective_dim,
                    iters,
                    seconds,
                    drawn: PartitionScore {
                        rand: r0,
                        ari: a0,
                        zones_true: drawn_count,
                    },
                    effective: PartitionScore {
                        rand: r1,
                        ari: a1,
                        zones_true: effective.count(),
                    },
                    error: None,
                });
                selections.push((c, Some((rec.lambda, seg))));
            }
            Err(err) => {
                log::warn!("σ = {sigma}, {c}: {err}");
                let nan = PartitionScore {
                    rand: f64::NAN,
                    ari: f64::NAN,
                    zones_true: drawn_count,
                };
                rows.push(ExperimentRow {
                    sigma,
                    criterion: c,
                    lambda: f64::NAN,
                    rmse: f64::NAN,
                    zones_est: 0,
                    model_dim: f64::NAN,
                    iters,
                    seconds,
                    drawn: nan,
                    effective: PartitionScore {
                        zones_true: effective.count(),
                        ..nan
                    },
                    error: Some(err.to_string()),
                });
                selections.push((c, None));
            }
        }
    }
    let map = SigmaMap {
        sigma,
        scenario,
        x,
        selections,
    };
    Ok((rows, map, path))
}
