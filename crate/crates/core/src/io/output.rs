use std::fs;
use std::path::Path;

use geojson::{Feature, FeatureCollection, Geometry, Value};
use serde::Serialize;
use serde_json::{json, Map};

use super::readers::GeoInput;
use crate::error::Result;
use crate::graph::Graph;
use crate::segment::{PathEntry, PathFit, Segmentation};
use crate::select::Criterion;
use crate::sim::{ExperimentRow, PartitionScore, SigmaMap};

/// Ten significant digits, trailing zeros removed; plain notation for
/// exponents in `-5..10`.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.9e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let fixed = format!("{v:.*}", (9 - exp) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Per-penalty line of `path.json`.
#[derive(Debug, Clone, Serialize)]
pub struct PathSummary {
    pub lambda: f64,
    pub status: &'static str,
    pub effective_dim: Option<f64>,
    pub effective_dim_se: Option<f64>,
    pub cost2: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    /// Absent when the criterion is undefined at this penalty.
    pub gcv: Option<f64>,
    pub zone_count: Option<usize>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub wall_time: Option<f64>,
    pub error: Option<String>,
}

pub fn path_summaries(path: &PathFit) -> Vec<PathSummary> {
    path.entries
        .iter()
        .map(|e| match e {
            PathEntry::Fitted(r) => PathSummary {
                lambda: r.lambda,
                status: "fitted",
                effective_dim: Some(r.effective_dim),
                effective_dim_se: r.effective_dim_se,
                cost2: Some(r.cost2),
                aic: Some(r.criteria.aic),
                bic: Some(r.criteria.bic),
                gcv: r.criteria.gcv_defined.then_some(r.criteria.gcv),
                zone_count: Some(r.zone_count),
                iterations: Some(r.iterations),
                converged: Some(r.converged),
                wall_time: Some(r.wall_time),
                error: None,
            },
            PathEntry::Failed { lambda, error, .. } => PathSummary {
                lambda: *lambda,
                status: "failed",
                effective_dim: None,
                effective_dim_se: None,
                cost2: None,
                aic: None,
                bic: None,
                gcv: None,
                zone_count: None,
                iterations: None,
                converged: None,
                wall_time: None,
                error: Some(error.clone()),
            },
        })
        .collect()
}

pub fn write_path_json(file: &Path, path: &PathFit, criterion: Criterion, selected: usize) -> Result<()> {
    let doc = json!({
        "criterion": criterion,
        "selected": selected,
        "selected_lambda": path.lambdas[selected],
        "argmin": {
            "aic": path.selected.aic,
            "bic": path.selected.bic,
            "gcv": path.selected.gcv,
        },
        "partial": path.partial,
        "records": path_summaries(path),
    });
    fs::write(file, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}

/// `id,zone,theta_hat,zone_mean`, one row per vertex.
pub fn write_segmentation_csv(file: &Path, g: &Graph, seg: &Segmentation) -> Result<()> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(["id", "zone", "theta_hat", "zone_mean"])?;
    for v in 0..g.n_vertices() {
        let z = seg.zone_of[v];
        w.write_record([
            g.label(v),
            z.to_string(),
            fmt_num(seg.theta_hat[v]),
            fmt_num(seg.zone_means[z]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `src,dst,delta,bridge` for every cut edge.
pub fn write_cut_edges_csv(file: &Path, g: &Graph, seg: &Segmentation, deltas: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(["src", "dst", "delta", "bridge"])?;
    for &e in &seg.cut_edges {
        let (j, k) = g.edges()[e];
        w.write_record([g.label(j), g.label(k), fmt_num(deltas[e]), g.is_artificial(e).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// The input features with `zone` and `theta_hat` added to their properties.
pub fn merged_geojson(geo: &GeoInput, g: &Graph, seg: &Segmentation) -> FeatureCollection {
    let index = g.label_index();
    let mut fc = geo.collection.clone();
    for (f, id) in fc.features.iter_mut().zip(&geo.ids) {
        let v = index[id];
        let props = f.properties.get_or_insert_with(Map::new);
        props.insert("zone".into(), json!(seg.zone_of[v]));
        props.insert("theta_hat".into(), json!(seg.theta_hat[v]));
    }
    fc
}

pub fn write_geojson(file: &Path, fc: &FeatureCollection) -> Result<()> {
    fs::write(file, fc.to_string() + "\n")?;
    Ok(())
}

/// Unit squares of the scenario grid, one feature per cell, with the truth,
/// the data and each criterion's selected zones and fitted values.
pub fn sigma_map_geojson(map: &SigmaMap) -> FeatureCollection {
    let (rows, cols) = map.scenario.shape.expect("grid scenario");
    let mut features = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            let (x, y) = (c as f64, r as f64);
            let ring = vec![
                vec![x, y],
                vec![x + 1.0, y],
                vec![x + 1.0, y + 1.0],
                vec![x, y + 1.0],
                vec![x, y],
            ];
            let mut props = Map::new();
            props.insert("id".into(), json!(v));
            props.insert("true_zone".into(), json!(map.scenario.true_zones[v]));
            props.insert("theta_true".into(), json!(map.scenario.theta_true[v]));
            props.insert("x".into(), json!(map.x[v]));
            for (crit, sel) in &map.selections {
                if let Some((_, seg)) = sel {
                    props.insert(format!("zone_{crit}"), json!(seg.zone_of[v]));
                    props.insert(format!("theta_hat_{crit}"), json!(seg.theta_hat[v]));
                }
            }
            features.push(Feature {
                bbox: None,
                geometry: Some(Geometry::new(Value::Polygon(vec![ring]))),
                id: None,
                properties: Some(props),
                foreign_members: None,
            });
        }
    }
    FeatureCollection {
        bbox: None,
        features,
        foreign_members: None,
    }
}

/// The experiment table scored against one of the two reference partitions.
pub fn write_experiment_csv(
    file: &Path,
    rows: &[ExperimentRow],
    score: impl Fn(&ExperimentRow) -> PartitionScore,
    timings: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record([
        "sigma", "criterion", "lambda", "rmse", "rand", "ari", "zones_est", "zones_true", "model_dim", "iters",
        "seconds",
    ])?;
    for r in rows {
        let s = score(r);
        w.write_record([
            fmt_num(r.sigma),
            r.criterion.to_string(),
            fmt_num(r.lambda),
            fmt_num(r.rmse),
            fmt_num(s.rand),
            fmt_num(s.ari),
            r.zones_est.to_string(),
            s.zones_true.to_string(),
            fmt_num(r.model_dim),
            r.iters.to_string(),
            fmt_num(if timings { r.seconds } else { 0.0 }),
        ])?;
    }
    w.flush()?;
    Ok(())
}
