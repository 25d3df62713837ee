use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use geojson::{FeatureCollection, GeoJson, Value};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::{rook_adjacency, Graph, PolygonSet, Ring, DEFAULT_ROOK_TOL};
use crate::sparse::SparseSym;

fn show(path: &Path) -> String {
    path.display().to_string()
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::parse(show(path), e.to_string()))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn check_headers(rdr: &mut csv::Reader<fs::File>, path: &Path, want: &[&str]) -> Result<()> {
    let headers = rdr.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got.len() < want.len() || got[..want.len()] != *want {
        return Err(Error::parse(
            show(path),
            format!("expected header `{}`, found `{}`", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}

#[derive(Deserialize)]
struct EdgeRow {
    src: String,
    dst: String,
}

/// Reads an edge list with header `src,dst`. A row with an empty `dst`
/// declares an isolated vertex.
pub fn read_edges(path: &Path) -> Result<Graph> {
    let mut rdr = reader(path)?;
    check_headers(&mut rdr, path, &["src", "dst"])?;
    let mut pairs = Vec::new();
    let mut isolated = Vec::new();
    for (line, row) in rdr.deserialize::<EdgeRow>().enumerate() {
        let row = row?;
        if row.src.is_empty() {
            return Err(Error::parse(show(path), format!("row {}: empty src", line + 2)));
        }
        if row.dst.is_empty() {
            isolated.push(row.src);
        } else {
            pairs.push((row.src, row.dst));
        }
    }
    if pairs.is_empty() && isolated.is_empty() {
        return Err(Error::Empty("edge list"));
    }
    Graph::from_edge_list(&pairs, &isolated)
}

#[derive(Deserialize)]
struct ValueRow {
    id: String,
    value: f64,
}

/// Reads `id,value` rows in file order. Non-finite values and repeated ids
/// are rejected.
pub fn read_values(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr = reader(path)?;
    check_headers(&mut rdr, path, &["id", "value"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.deserialize::<ValueRow>() {
        let row = row?;
        if !row.value.is_finite() {
            return Err(Error::parse(show(path), format!("non-finite value for id `{}`", row.id)));
        }
        if !seen.insert(row.id.clone()) {
            return Err(Error::DuplicateId(row.id));
        }
        out.push((row.id, row.value));
    }
    if out.is_empty() {
        return Err(Error::Empty("values"));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct CentroidRow {
    id: String,
    x: f64,
    y: f64,
}

/// Reads `id,x,y` rows.
pub fn read_centroids(path: &Path) -> Result<HashMap<String, [f64; 2]>> {
    let mut rdr = reader(path)?;
    check_headers(&mut rdr, path, &["id", "x", "y"])?;
    let mut out = HashMap::new();
    for row in rdr.deserialize::<CentroidRow>() {
        let row = row?;
        if !(row.x.is_finite() && row.y.is_finite()) {
            return Err(Error::parse(show(path), format!("non-finite centroid for id `{}`", row.id)));
        }
        if out.insert(row.id.clone(), [row.x, row.y]).is_some() {
            return Err(Error::DuplicateId(row.id));
        }
    }
    Ok(out)
}

/// Reads a real (or integer) coordinate Matrix Market file. `symmetric`
/// files list one triangle; `general` files must be exactly symmetric.
pub fn read_matrix_market(path: &Path) -> Result<SparseSym> {
    let text = fs::read_to_string(path).map_err(|e| Error::parse(show(path), e.to_string()))?;
    let err = |msg: String| Error::parse(show(path), msg);
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err("empty file".into()))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(err(format!("not a Matrix Market header: `{header}`")));
    }
    if words[2] != "coordinate" {
        return Err(err(format!("unsupported format `{}`", words[2])));
    }
    if words[3] != "real" && words[3] != "integer" {
        return Err(err(format!("unsupported field `{}`", words[3])));
    }
    let symmetric = match words[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(err(format!("unsupported symmetry `{other}`"))),
    };
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (_, size) = body.next().ok_or_else(|| err("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(format!("bad size line `{size}`"))))
        .collect::<Result<_>>()?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(err(format!("bad size line `{size}`")));
    };
    if nrows != ncols {
        return Err(err(format!("matrix is {nrows}×{ncols}, not square")));
    }
    let n = nrows;
    let mut entries = Vec::with_capacity(nnz);
    for (no, line) in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        let parsed = match t[..] {
            [i, j, v] => i.parse::<usize>().ok().zip(j.parse::<usize>().ok()).zip(v.parse::<f64>().ok()),
            _ => None,
        };
        let ((i, j), v) = parsed.ok_or_else(|| err(format!("line {}: bad entry `{line}`", no + 1)))?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(err(format!("line {}: index ({i}, {j}) outside 1..={n}", no + 1)));
        }
        if !v.is_finite() {
            return Err(err(format!("line {}: non-finite entry", no + 1)));
        }
        entries.push((i - 1, j - 1, v));
    }
    if entries.len() != nnz {
        return Err(err(format!("expected {nnz} entries, found {}", entries.len())));
    }
    if symmetric {
        if let Some(&(i, j, _)) = entries.iter().find(|e| e.0 < e.1) {
            return Err(err(format!("symmetric file has an upper-triangle entry ({}, {})", i + 1, j + 1)));
        }
        return SparseSym::from_triplets(n, &entries);
    }
    let mut map: HashMap<(usize, usize), f64> = HashMap::with_capacity(entries.len());
    for &(i, j, v) in &entries {
        *map.entry((i, j)).or_default() += v;
    }
    let mut lower = Vec::with_capacity(map.len() / 2 + n);
    for (&(i, j), &v) in &map {
        match map.get(&(j, i)) {
            Some(&w) if w == v => {}
            Some(_) => return Err(Error::AsymmetricValues { row: i, col: j }),
            None => return Err(Error::AsymmetricPattern { row: i, col: j }),
        }
        if i >= j {
            lower.push((i, j, v));
        }
    }
    lower.sort_by_key(|t| (t.1, t.0));
    SparseSym::from_triplets(n, &lower)
}

/// A parsed feature collection with its polygons keyed by area id.
#[derive(Debug, Clone)]
pub struct GeoInput {
    pub collection: FeatureCollection,
    /// Area id of each feature, in feature order.
    pub ids: Vec<String>,
    pub polygons: PolygonSet,
}

fn feature_id(f: &geojson::Feature, index: usize, path: &Path) -> Result<String> {
    if let Some(v) = f.properties.as_ref().and_then(|p| p.get("id")) {
        return match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            _ => Err(Error::parse(show(path), format!("feature {index}: `id` property must be a string or number"))),
        };
    }
    match &f.id {
        Some(geojson::feature::Id::String(s)) => Ok(s.clone()),
        Some(geojson::feature::Id::Number(n)) => Ok(n.to_string()),
        None => Err(Error::parse(show(path), format!("feature {index} has no id"))),
    }
}

fn ring(coords: &[Vec<f64>]) -> Ring {
    coords.iter().map(|c| [c[0], c.get(1).copied().unwrap_or(f64::NAN)]).collect()
}

/// Reads a FeatureCollection of Polygon and MultiPolygon features. The area id
/// is `properties.id`, else the feature id.
pub fn read_geojson(path: &Path) -> Result<GeoInput> {
    let text = fs::read_to_string(path).map_err(|e| Error::parse(show(path), e.to_string()))?;
    let collection = match text.parse::<GeoJson>()? {
        GeoJson::FeatureCollection(fc) => fc,
        _ => return Err(Error::parse(show(path), "expected a FeatureCollection")),
    };
    let mut ids = Vec::with_capacity(collection.features.len());
    let mut polygons = PolygonSet::new();
    for (i, f) in collection.features.iter().enumerate() {
        let id = feature_id(f, i, path)?;
        let polys: Vec<Vec<Ring>> = match f.geometry.as_ref().map(|g| &g.value) {
            Some(Value::Polygon(rings)) => vec![rings.iter().map(|r| ring(r)).collect()],
            Some(Value::MultiPolygon(ps)) => ps.iter().map(|p| p.iter().map(|r| ring(r)).collect()).collect(),
            _ => {
                return Err(Error::parse(
                    show(path),
                    format!("feature `{id}` is not a Polygon or MultiPolygon"),
                ))
            }
        };
        polygons.push(id.clone(), polys)?;
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::Empty("feature collection"));
    }
    Ok(GeoInput {
        collection,
        ids,
        polygons,
    })
}

impl GeoInput {
    pub fn rook_graph(&self) -> Result<Graph> {
        rook_adjacency(&self.polygons, DEFAULT_ROOK_TOL)
    }

    pub fn centroids(&self) -> HashMap<String, [f64; 2]> {
        self.polygons.areas().iter().map(|a| (a.id.clone(), a.centroid())).collect()
    }
}
