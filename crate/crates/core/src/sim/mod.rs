//! Synthetic piecewise-constant scenarios on grids and partition scores.

mod experiment;
mod metrics;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ComponentMap, Graph};

pub use experiment::{
    run_experiment, ExperimentOutcome, ExperimentRow, ExperimentSpec, NoisePrecision, PartitionScore,
    SigmaMap,
};
pub use metrics::{rand_index, rmse};

/// Mean of the Poisson law of the zone levels.
pub const ZONE_LEVEL_MEAN: f64 = 10.0;

/// A true signal on a graph together with its zone partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    #[serde(skip)]
    pub graph: Graph,
    /// Grid shape when the scenario lives on a lattice.
    pub shape: Option<(usize, usize)>,
    pub true_zones: Vec<usize>,
    pub theta_true: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn zone_count(&self) -> usize {
        self.true_zones.iter().max().map_or(0, |m| m + 1)
    }

    /// Merges adjacent true zones whose levels coincide; boundaries between
    /// them cannot be recovered from data.
    pub fn effective_zones(&self) -> ComponentMap {
        ComponentMap::from_edges(
            self.graph.n_vertices(),
            self.graph
                .edges()
                .iter()
                .copied()
                .filter(|&(j, k)| self.theta_true[j] == self.theta_true[k]),
        )
    }
}

/// Draws iid Poisson(10) levels for the zones `0..q` of `zones`, then
/// `x = θ + N(0, σ²)` noise per vertex, both in index order from `rng`.
pub fn draw_on_partition(
    graph: Graph,
    zones: Vec<usize>,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Scenario, Vec<f64>)> {
    if zones.len() != graph.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "zone labels",
            expected: graph.n_vertices(),
            found: zones.len(),
        });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    let q = zones.iter().max().map_or(0, |m| m + 1);
    let poisson = Poisson::new(ZONE_LEVEL_MEAN).expect("positive mean");
    let levels: Vec<f64> = (0..q).map(|_| poisson.sample(rng)).collect();
    let noise = Normal::new(0.0, sigma).expect("positive sigma");
    let theta_true: Vec<f64> = zones.iter().map(|&z| levels[z]).collect();
    let x: Vec<f64> = theta_true.iter().map(|t| t + noise.sample(rng)).collect();
    Ok((
        Scenario {
            graph,
            shape: None,
            true_zones: zones,
            theta_true,
            sigma,
            seed: 0,
        },
        x,
    ))
}

/// Zone label of each cell when a `rows × cols` grid is tiled by
/// `zone_rows × zone_cols` blocks, numbered row-major.
pub fn block_zones(rows: usize, cols: usize, zone_rows: usize, zone_cols: usize) -> Result<Vec<usize>> {
    if rows == 0 || cols == 0 || zone_rows == 0 || zone_cols == 0 {
        return Err(Error::InvalidConfig("grid and zone dimensions must be positive".into()));
    }
    if !rows.is_multiple_of(zone_rows) || !cols.is_multiple_of(zone_cols) {
        return Err(Error::InvalidConfig(format!(
            "zone blocks {zone_rows}×{zone_cols} do not tile a {rows}×{cols} grid"
        )));
    }
    let per_row = cols / zone_cols;
    Ok((0..rows * cols)
        .map(|v| (v / cols / zone_rows) * per_row + (v % cols) / zone_cols)
        .collect())
}

/// A rook grid tiled by rectangular zones, with noisy observations.
pub fn generate_grid_scenario(
    rows: usize,
    cols: usize,
    zone_rows: usize,
    zone_cols: usize,
    sigma: f64,
    seed: u64,
) -> Result<(Scenario, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    grid_scenario_with(rows, cols, zone_rows, zone_cols, sigma, &mut rng, seed)
}

pub(crate) fn grid_scenario_with(
    rows: usize,
    cols: usize,
    zone_rows: usize,
    zone_cols: usize,
    sigma: f64,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<(Scenario, Vec<f64>)> {
    let zones = block_zones(rows, cols, zone_rows, zone_cols)?;
    let (mut s, x) = draw_on_partition(Graph::grid(rows, cols), zones, sigma, rng)?;
    s.shape = Some((rows, cols));
    s.seed = seed;
    Ok((s, x))
}
