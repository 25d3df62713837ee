//! File formats and the orchestration behind the command-line runs.
//!
//! Inputs: an edge list (`src,dst`) or a GeoJSON FeatureCollection for the
//! graph, `id,value` observations, an optional Matrix Market precision matrix
//! and optional `id,x,y` centroids. Vertices are indexed in natural order of
//! their ids (numeric when every id is an integer), and the precision matrix
//! must use that order.

mod config;
mod output;
mod readers;
mod run;

pub use config::{join_values, load_problem, Problem, RunConfig, TraceKind};
pub use output::{
    fmt_num, merged_geojson, path_summaries, sigma_map_geojson, write_cut_edges_csv, write_experiment_csv,
    write_geojson, write_path_json, write_segmentation_csv, PathSummary,
};
pub use readers::{read_centroids, read_edges, read_geojson, read_matrix_market, read_values, GeoInput};
pub use run::{exit_code, read_experiment_spec, run_segment, run_simulate, SegmentReport};
