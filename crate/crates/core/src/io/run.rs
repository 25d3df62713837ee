use std::fs;
use std::path::Path;

use super::config::{load_problem, RunConfig};
use super::output::{
    merged_geojson, sigma_map_geojson, write_cut_edges_csv, write_experiment_csv, write_geojson, write_path_json,
    write_segmentation_csv,
};
use crate::error::{Error, Result};
use crate::segment::{AdaptiveRidge, ArConfig, PathFit, Segmentation};
use crate::select::{select_lambda, Criterion};
use crate::sim::{run_experiment, ExperimentOutcome, ExperimentSpec};

/// Exit status for a run that failed with `err`: 3 for numerical failures,
/// 2 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

/// What a `segment` run produced.
#[derive(Debug, Clone)]
pub struct SegmentReport {
    pub path: PathFit,
    pub criterion: Criterion,
    pub selected: usize,
    pub segmentation: Segmentation,
    pub vertex_count: usize,
    pub edge_count: usize,
}

impl SegmentReport {
    pub fn lambda(&self) -> f64 {
        self.path.lambdas[self.selected]
    }

    pub fn effective_dim(&self) -> f64 {
        self.path.record(self.selected).expect("selected is fitted").effective_dim
    }

    /// A short text table of the path and the selected penalty.
    pub fn summary(&self) -> String {
        let rec = self.path.record(self.selected).expect("selected is fitted");
        let mut s = format!(
            "selected ({}): lambda = {:.6e}, e = {:.4}, zones = {}\n",
            self.criterion,
            self.lambda(),
            rec.effective_dim,
            self.segmentation.zone_count
        );
        s += &format!("vertices = {}, edges = {}\n", self.vertex_count, self.edge_count);
        for c in Criterion::ALL {
            match self.path.selected.get(c) {
                Some(i) => {
                    let r = self.path.record(i).expect("argmin is fitted");
                    s += &format!(
                        "argmin {c}: index {i}, lambda = {:.6e}, value = {:.6e}, zones = {}\n",
                        r.lambda,
                        r.criteria.get(c),
                        r.zone_count
                    );
                }
                None => s += &format!("argmin {c}: undefined\n"),
            }
        }
        s += &format!(
            "{:>4} {:>13} {:>10} {:>6} {:>13} {:>13} {:>13}\n",
            "i", "lambda", "e", "zones", "aic", "bic", "gcv"
        );
        for (i, e) in self.path.entries.iter().enumerate() {
            match e.record() {
                Some(r) => {
                    let gcv = if r.criteria.gcv_defined {
                        format!("{:13.6e}", r.criteria.gcv)
                    } else {
                        format!("{:>13}", "-")
                    };
                    s += &format!(
                        "{i:>4} {:13.6e} {:10.4} {:>6} {:13.6e} {:13.6e} {gcv}\n",
                        r.lambda, r.effective_dim, r.zone_count, r.criteria.aic, r.criteria.bic
                    );
                }
                None => s += &format!("{i:>4} {:13.6e} failed\n", e.lambda()),
            }
        }
        s
    }
}

/// Loads the inputs, fits the path, selects a penalty, extracts zones and
/// writes the bundle into `cfg.out`. Nothing is written unless every step
/// before the writing succeeds.
pub fn run_segment(cfg: &RunConfig) -> Result<SegmentReport> {
    let problem = load_problem(cfg)?;
    let ar = cfg.ar_config();
    let lambdas = cfg.lambdas(&problem.prec)?;
    let mut engine = AdaptiveRidge::new(&problem.x, &problem.prec, &problem.graph)?;
    let path = engine.run_path(&lambdas, &ar)?;
    if path.partial {
        log::warn!("some penalties failed; selecting among the fitted ones");
    }
    let criterion = cfg.criterion();
    let selected = select_lambda(&path, criterion)?;
    let rec = path.record(selected).expect("selected is fitted");
    if !rec.converged {
        log::warn!("the selected fit did not converge in {} iterations", rec.iterations);
    }
    let mut seg = Segmentation::from_deltas(&problem.graph, &rec.theta_hat, &rec.deltas, ar.cutoff);
    if cfg.refit {
        seg.refit(&problem.x, &problem.prec)?;
    }
    let deltas = rec.deltas.clone();

    let out = cfg.out.as_deref().expect("validated");
    fs::create_dir_all(out)?;
    write_path_json(&out.join("path.json"), &path, criterion, selected)?;
    write_segmentation_csv(&out.join("segmentation.csv"), &problem.graph, &seg)?;
    write_cut_edges_csv(&out.join("cut_edges.csv"), &problem.graph, &seg, &deltas)?;
    if let Some(geo) = &problem.geo {
        write_geojson(&out.join("segmentation.geojson"), &merged_geojson(geo, &problem.graph, &seg))?;
    }
    Ok(SegmentReport {
        path,
        criterion,
        selected,
        segmentation: seg,
        vertex_count: problem.graph.n_vertices(),
        edge_count: problem.graph.n_edges(),
    })
}

/// Runs the experiment and writes `experiment.csv` (scores against the drawn
/// zones), `experiment_effective.csv` (against the merged zones) and one
/// `map_sigma_<σ>.geojson` per noise level. The `seconds` column is zero
/// unless `timings` is set.
pub fn run_simulate(spec: &ExperimentSpec, cfg: &ArConfig, out: &Path, timings: bool) -> Result<ExperimentOutcome> {
    let outcome = run_experiment(spec, cfg)?;
    for r in &outcome.rows {
        if let Some(e) = &r.error {
            log::warn!("σ = {}, {}: {e}", r.sigma, r.criterion);
        }
    }
    fs::create_dir_all(out)?;
    write_experiment_csv(&out.join("experiment.csv"), &outcome.rows, |r| r.drawn, timings)?;
    write_experiment_csv(
        &out.join("experiment_effective.csv"),
        &outcome.rows,
        |r| r.effective,
        timings,
    )?;
    for map in &outcome.maps {
        let name = format!("map_sigma_{}.geojson", super::fmt_num(map.sigma));
        write_geojson(&out.join(name), &sigma_map_geojson(map))?;
    }
    Ok(outcome)
}

/// Reads an experiment spec from JSON.
pub fn read_experiment_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}
