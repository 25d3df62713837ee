use std::collections::HashMap;

use super::{sort_labels, Graph};
use crate::error::{Error, Result};

/// Default quantization step for matching shared borders, in coordinate units.
pub const DEFAULT_ROOK_TOL: f64 = 1e-9;

/// A closed ring: first and last points coincide.
pub type Ring = Vec<[f64; 2]>;

/// One area: a list of polygons, each an exterior ring followed by holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Area {
    pub id: String,
    pub polygons: Vec<Vec<Ring>>,
}

impl Area {
    /// Arithmetic mean of the exterior-ring vertices (closing point excluded).
    pub fn centroid(&self) -> [f64; 2] {
        let mut sum = [0.0, 0.0];
        let mut count = 0usize;
        for poly in &self.polygons {
            if let Some(ext) = poly.first() {
                for p in &ext[..ext.len() - 1] {
                    sum[0] += p[0];
                    sum[1] += p[1];
                    count += 1;
                }
            }
        }
        [sum[0] / count as f64, sum[1] / count as f64]
    }
}

/// A set of areas forming a planar subdivision.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolygonSet {
    areas: Vec<Area>,
}

impl PolygonSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an area after checking that every ring is closed, has at least
    /// three distinct vertices and no repeated consecutive point.
    pub fn push(&mut self, id: impl Into<String>, polygons: Vec<Vec<Ring>>) -> Result<()> {
        let id = id.into();
        if self.areas.iter().any(|a| a.id == id) {
            return Err(Error::DuplicateId(id));
        }
        if polygons.is_empty() || polygons.iter().any(|p| p.is_empty()) {
            return Err(Error::DegenerateRing {
                area: id,
                reason: "no rings".into(),
            });
        }
        for ring in polygons.iter().flatten() {
            validate_ring(&id, ring)?;
        }
        self.areas.push(Area { id, polygons });
        Ok(())
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    /// Unit squares of a `rows × cols` grid, area `r * cols + c` with its lower
    /// left corner at `(c, r)`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut set = PolygonSet::new();
        for r in 0..rows {
            for c in 0..cols {
                let (x, y) = (c as f64, r as f64);
                let ring = vec![[x, y], [x + 1.0, y], [x + 1.0, y + 1.0], [x, y + 1.0], [x, y]];
                set.push((r * cols + c).to_string(), vec![vec![ring]])
                    .expect("grid squares are valid");
            }
        }
        set
    }
}

fn validate_ring(id: &str, ring: &Ring) -> Result<()> {
    let bad = |reason: &str| {
        Err(Error::DegenerateRing {
            area: id.to_string(),
            reason: reason.to_string(),
        })
    };
    if ring.iter().flatten().any(|c| !c.is_finite()) {
        return bad("non-finite coordinate");
    }
    if ring.len() < 4 || ring.first() != ring.last() {
        return bad("ring is not closed");
    }
    if ring.windows(2).any(|w| w[0] == w[1]) {
        return bad("zero-length segment");
    }
    let mut distinct: Vec<[u64; 2]> = ring[..ring.len() - 1]
        .iter()
        .map(|p| [p[0].to_bits(), p[1].to_bits()])
        .collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return bad("fewer than three distinct vertices");
    }
    Ok(())
}

type Key = [i64; 2];

fn quantize(p: [f64; 2], tol: f64) -> Result<Key> {
    let mut out = [0i64; 2];
    for (o, &c) in out.iter_mut().zip(&p) {
        let q = (c / tol).round();
        if !q.is_finite() || q.abs() >= (1u64 << 62) as f64 {
            return Err(Error::CoordinateOverflow(c));
        }
        *o = q as i64;
    }
    Ok(out)
}

/// Rook contiguity: areas are adjacent iff their boundaries share at least one
/// segment, after snapping coordinates to a grid of step `tol`.
///
/// Corner-only contact does not connect. Vertices are indexed in natural
/// order of the area ids, so the result does not depend on input order.
pub fn rook_adjacency(polys: &PolygonSet, tol: f64) -> Result<Graph> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidConfig(format!("rook tolerance must be positive, got {tol}")));
    }
    let mut labels: Vec<String> = polys.areas.iter().map(|a| a.id.clone()).collect();
    sort_labels(&mut labels);
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let mut owners: HashMap<(Key, Key), Vec<usize>> = HashMap::new();
    for area in &polys.areas {
        let v = index[area.id.as_str()];
        for ring in area.polygons.iter().flatten() {
            let keys = ring
                .iter()
                .map(|&p| quantize(p, tol))
                .collect::<Result<Vec<_>>>()?;
            for w in keys.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::DegenerateRing {
                        area: area.id.clone(),
                        reason: "zero-length segment at this tolerance".into(),
                    });
                }
                // undirected key: a shared border traversed in either direction
                let seg = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
                let list = owners.entry(seg).or_default();
                if !list.contains(&v) {
                    list.push(v);
                }
            }
        }
    }

    let mut edges = Vec::new();
    for list in owners.values() {
        for (a, &j) in list.iter().enumerate() {
            for &k in &list[a + 1..] {
                edges.push((j, k));
            }
        }
    }
    Graph::new(labels.len(), edges)?.with_labels(labels)
}
