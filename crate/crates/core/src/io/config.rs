use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::readers::{read_centroids, read_edges, read_geojson, read_matrix_market, read_values, GeoInput};
use crate::error::{Error, Result};
use crate::graph::{sort_labels, Graph};
use crate::segment::{penalty_scale, ArConfig, LambdaGrid};
use crate::select::Criterion;
use crate::sparse::{Factorization, SparseSym, TraceMode};

/// How the effective dimension is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Auto,
    Exact,
    Stochastic,
}

/// Settings of one `segment` run. The JSON config file uses these field
/// names; command-line flags overlay it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub graph: Option<PathBuf>,
    pub geojson: Option<PathBuf>,
    pub values: Option<PathBuf>,
    pub precision: Option<PathBuf>,
    pub centroids: Option<PathBuf>,
    pub bridge: bool,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_count: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub criterion: Option<Criterion>,
    pub epsilon: Option<f64>,
    pub tol: Option<f64>,
    pub cutoff: Option<f64>,
    pub max_iter: Option<usize>,
    pub refit: bool,
    pub trace: Option<TraceKind>,
    pub probes: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a JSON config; relative paths are taken from the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.graph,
            &mut cfg.geojson,
            &mut cfg.values,
            &mut cfg.precision,
            &mut cfg.centroids,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `top` win; switches are on if either side sets them.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        RunConfig {
            graph: top.graph.or(self.graph),
            geojson: top.geojson.or(self.geojson),
            values: top.values.or(self.values),
            precision: top.precision.or(self.precision),
            centroids: top.centroids.or(self.centroids),
            bridge: top.bridge || self.bridge,
            lambda_min: top.lambda_min.or(self.lambda_min),
            lambda_max: top.lambda_max.or(self.lambda_max),
            lambda_count: top.lambda_count.or(self.lambda_count),
            lambdas: top.lambdas.or(self.lambdas),
            criterion: top.criterion.or(self.criterion),
            epsilon: top.epsilon.or(self.epsilon),
            tol: top.tol.or(self.tol),
            cutoff: top.cutoff.or(self.cutoff),
            max_iter: top.max_iter.or(self.max_iter),
            refit: top.refit || self.refit,
            trace: top.trace.or(self.trace),
            probes: top.probes.or(self.probes),
            seed: top.seed.or(self.seed),
            out: top.out.or(self.out),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        match (&self.graph, &self.geojson) {
            (Some(_), Some(_)) => return bad("give either a graph edge list or a GeoJSON file, not both"),
            (None, None) => return bad("a graph source is required (edge list or GeoJSON)"),
            _ => {}
        }
        if self.values.is_none() {
            return bad("a values file is required");
        }
        if self.out.is_none() {
            return bad("an output directory is required");
        }
        if self.lambdas.is_some()
            && (self.lambda_min.is_some() || self.lambda_max.is_some() || self.lambda_count.is_some())
        {
            return bad("an explicit penalty list excludes the grid settings");
        }
        if self.lambda_count == Some(0) {
            return bad("penalty count must be at least 1");
        }
        if matches!(&self.lambdas, Some(l) if l.is_empty()) {
            return bad("explicit penalty list is empty");
        }
        if self.probes.is_some() && self.trace != Some(TraceKind::Stochastic) {
            return bad("probes only apply to the stochastic trace");
        }
        self.ar_config().validate()
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion.unwrap_or(Criterion::Aic)
    }

    pub fn ar_config(&self) -> ArConfig {
        let d = ArConfig::default();
        let trace_mode = match self.trace.unwrap_or(TraceKind::Auto) {
            TraceKind::Auto => TraceMode::Auto,
            TraceKind::Exact => TraceMode::Exact,
            TraceKind::Stochastic => TraceMode::Stochastic {
                probes: self.probes.unwrap_or(64),
                seed: self.seed.unwrap_or(0),
            },
        };
        ArConfig {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            tol: self.tol.unwrap_or(d.tol),
            cutoff: self.cutoff.unwrap_or(d.cutoff),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            trace_mode,
            warm_start: true,
        }
    }

    /// The explicit list, or the log grid anchored at `p / Tr(Σ⁻¹)`.
    pub fn lambdas(&self, prec: &SparseSym) -> Result<Vec<f64>> {
        if let Some(l) = &self.lambdas {
            return Ok(l.clone());
        }
        let grid = LambdaGrid {
            min: self.lambda_min,
            max: self.lambda_max,
            count: self.lambda_count.unwrap_or(50),
        };
        grid.values(penalty_scale(prec))
    }
}

/// A loaded problem: graph, observations in vertex order and precision.
#[derive(Debug, Clone)]
pub struct Problem {
    pub graph: Graph,
    pub x: Vec<f64>,
    pub prec: SparseSym,
    /// Present when the graph came from GeoJSON.
    pub geo: Option<GeoInput>,
    /// The graph has several components and was not bridged.
    pub disconnected: bool,
}

/// Loads and joins the input files. Vertex `v` is the `v`-th id in natural
/// order; the precision matrix is indexed the same way.
pub fn load_problem(cfg: &RunConfig) -> Result<Problem> {
    cfg.validate()?;
    let (mut graph, geo) = match (&cfg.graph, &cfg.geojson) {
        (Some(path), _) => (read_edges(path)?, None),
        (None, Some(path)) => {
            let geo = read_geojson(path)?;
            (geo.rook_graph()?, Some(geo))
        }
        (None, None) => unreachable!("validated"),
    };
    let values = read_values(cfg.values.as_deref().expect("validated"))?;
    let x = join_values(&graph, &values)?;
    let p = graph.n_vertices();

    let prec = match &cfg.precision {
        Some(path) => {
            let m = read_matrix_market(path)?;
            if m.dim() != p {
                return Err(Error::DimensionMismatch {
                    what: "precision matrix",
                    expected: p,
                    found: m.dim(),
                });
            }
            m.check_value_symmetry(1e-12)?;
            // a covariance inverse must be positive definite on its own
            Factorization::factor(&m)?;
            m
        }
        None => SparseSym::identity(p),
    };

    let comps = graph.components();
    let mut disconnected = false;
    if comps.count() > 1 {
        if cfg.bridge {
            let table = match (&cfg.centroids, &geo) {
                (Some(path), _) => read_centroids(path)?,
                (None, Some(g)) => g.centroids(),
                (None, None) => {
                    return Err(Error::InvalidConfig(
                        "bridging components needs centroids or a GeoJSON graph".into(),
                    ))
                }
            };
            let centroids = (0..p)
                .map(|v| {
                    let id = graph.label(v);
                    table.get(&id).copied().ok_or(Error::MissingCentroid(id))
                })
                .collect::<Result<Vec<_>>>()?;
            log::info!("bridging {} components", comps.count());
            graph = graph.bridge_components(&centroids)?;
        } else {
            log::warn!(
                "graph has {} connected components; they are fitted jointly but do not interact",
                comps.count()
            );
            disconnected = true;
        }
    }
    Ok(Problem {
        graph,
        x,
        prec,
        geo,
        disconnected,
    })
}

/// Orders `values` by vertex. Ids unknown to the graph are reported before ids
/// lacking a value.
pub fn join_values(graph: &Graph, values: &[(String, f64)]) -> Result<Vec<f64>> {
    let index = graph.label_index();
    let p = graph.n_vertices();
    let mut x = vec![f64::NAN; p];
    let mut unknown = Vec::new();
    for (id, v) in values {
        match index.get(id) {
            Some(&i) => x[i] = *v,
            None => unknown.push(id.clone()),
        }
    }
    if !unknown.is_empty() {
        sort_labels(&mut unknown);
        return Err(Error::UnknownIds(unknown));
    }
    let missing: Vec<String> = (0..p).filter(|&v| x[v].is_nan()).map(|v| graph.label(v)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds(missing));
    }
    Ok(x)
}
