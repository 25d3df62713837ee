//! Undirected adjacency graphs carrying the signal, their connected
//! components and weighted Laplacians.

mod rook;

pub use rook::{rook_adjacency, Area, PolygonSet, Ring, DEFAULT_ROOK_TOL};

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sparse::SparseSym;

/// A simple undirected graph on vertices `0..n`.
///
/// Edges are stored once as `(j, k)` with `j < k`, sorted, without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    artificial: Vec<bool>,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Canonicalizes `edges` (reversals and duplicates merged) with unit weights.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange { index: a.max(b), n });
            }
            if a == b {
                return Err(Error::SelfLoop(a.to_string()));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        canon.dedup();
        let m = canon.len();
        Ok(Graph {
            n,
            edges: canon,
            weights: vec![1.0; m],
            artificial: vec![false; m],
            labels: None,
        })
    }

    /// Builds a graph from labelled pairs. Vertices are the labels appearing
    /// in `pairs` or in `isolated`, indexed in natural label order.
    pub fn from_edge_list<S: AsRef<str>>(pairs: &[(S, S)], isolated: &[S]) -> Result<Self> {
        for (a, b) in pairs {
            if a.as_ref() == b.as_ref() {
                return Err(Error::SelfLoop(a.as_ref().to_string()));
            }
        }
        let mut labels: Vec<String> = pairs
            .iter()
            .flat_map(|(a, b)| [a.as_ref().to_string(), b.as_ref().to_string()])
            .chain(isolated.iter().map(|s| s.as_ref().to_string()))
            .collect();
        sort_labels(&mut labels);
        labels.dedup();
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .map(|(a, b)| (index[a.as_ref()], index[b.as_ref()]))
            .collect();
        let g = Graph::new(labels.len(), edges)?;
        g.with_labels(labels)
    }

    /// The rook lattice on a `rows × cols` grid, vertex `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Graph::new(rows * cols, edges).expect("grid edges are valid")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "vertex labels",
                expected: self.n,
                found: labels.len(),
            });
        }
        let mut seen = HashMap::with_capacity(labels.len());
        for l in &labels {
            if seen.insert(l.as_str(), ()).is_some() {
                return Err(Error::DuplicateId(l.clone()));
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Construction-time edge weights (unit for real and bridge edges).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether edge `e` was added by [`Graph::bridge_components`].
    pub fn is_artificial(&self, e: usize) -> bool {
        self.artificial[e]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of vertex `v`, or its index when the graph is unlabelled.
    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => v.to_string(),
        }
    }

    /// Map from label to vertex index.
    pub fn label_index(&self) -> HashMap<String, usize> {
        (0..self.n).map(|v| (self.label(v), v)).collect()
    }

    pub fn edge_index(&self, j: usize, k: usize) -> Option<usize> {
        let key = (j.min(k), j.max(k));
        self.edges.binary_search(&key).ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(j, k) in &self.edges {
            d[j] += 1;
            d[k] += 1;
        }
        d
    }

    /// Connected components over edges with positive construction weight.
    pub fn components(&self) -> ComponentMap {
        ComponentMap::from_edges(
            self.n,
            self.edges
                .iter()
                .zip(&self.weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(&e, _)| e),
        )
    }

    /// Joins every pair of components by one edge between their closest
    /// vertices (Euclidean distance of `centroids`). Ties go to the smallest
    /// `(j, k)`. Added edges have unit weight and are flagged artificial.
    pub fn bridge_components(&self, centroids: &[[f64; 2]]) -> Result<Graph> {
        let comps = self.components();
        if comps.count() <= 1 {
            return Ok(self.clone());
        }
        if centroids.len() != self.n {
            return Err(Error::MissingCentroid(self.label(centroids.len().min(self.n - 1))));
        }
        let members = comps.members();
        let mut added = Vec::new();
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                let mut best: Option<(f64, (usize, usize))> = None;
                for &j in &members[a] {
                    for &k in &members[b] {
                        let d = dist2(centroids[j], centroids[k]);
                        let pair = (j.min(k), j.max(k));
                        let better = match best {
                            None => true,
                            Some((bd, bp)) => match d.partial_cmp(&bd) {
                                Some(Ordering::Less) => true,
                                Some(Ordering::Equal) => pair < bp,
                                _ => false,
                            },
                        };
                        if better {
                            best = Some((d, pair));
                        }
                    }
                }
                if let Some((_, pair)) = best {
                    added.push(pair);
                }
            }
        }
        let mut all: Vec<((usize, usize), f64, bool)> = self
            .edges
            .iter()
            .zip(&self.weights)
            .zip(&self.artificial)
            .map(|((&e, &w), &a)| (e, w, a))
            .chain(added.into_iter().map(|e| (e, 1.0, true)))
            .collect();
        all.sort_by_key(|x| x.0);
        Ok(Graph {
            n: self.n,
            edges: all.iter().map(|x| x.0).collect(),
            weights: all.iter().map(|x| x.1).collect(),
            artificial: all.iter().map(|x| x.2).collect(),
            labels: self.labels.clone(),
        })
    }

    /// The weighted Laplacian `K = D − A` for per-edge weights.
    pub fn laplacian(&self, weights: &[f64]) -> Result<SparseSym> {
        let pattern = LaplacianPattern::new(self);
        let mut k = pattern.pattern().clone();
        pattern.fill(weights, k.values_mut())?;
        Ok(k)
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "permutation",
                expected: self.n,
                found: perm.len(),
            });
        }
        Graph::new(self.n, self.edges.iter().map(|&(j, k)| (perm[j], perm[k])))
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Sorts labels numerically when all of them are integers, lexicographically
/// otherwise.
pub fn sort_labels(labels: &mut [String]) {
    if labels.iter().all(|l| l.parse::<i64>().is_ok()) {
        labels.sort_by_key(|l| l.parse::<i64>().unwrap());
    } else {
        labels.sort();
    }
}

/// Connected-component labelling of the vertices.
///
/// Component ids are contiguous and numbered in order of their smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentMap {
    ids: Vec<usize>,
    sizes: Vec<usize>,
}

impl ComponentMap {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut uf = UnionFind::new(n);
        for (j, k) in edges {
            uf.union(j, k);
        }
        let mut root_id = vec![usize::MAX; n];
        let mut ids = vec![0; n];
        let mut sizes = Vec::new();
        for v in 0..n {
            let r = uf.find(v);
            if root_id[r] == usize::MAX {
                root_id[r] = sizes.len();
                sizes.push(0);
            }
            ids[v] = root_id[r];
            sizes[ids[v]] += 1;
        }
        ComponentMap { ids, sizes }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Vertices of each component, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (v, &c) in self.ids.iter().enumerate() {
            m[c].push(v);
        }
        m
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// The fixed sparsity pattern of a graph Laplacian and the value slots of
/// each edge, so that `K` can be refilled for new weights in `O(nnz)`.
#[derive(Debug, Clone)]
pub struct LaplacianPattern {
    pattern: SparseSym,
    diag: Vec<usize>,
    off: Vec<(usize, usize)>,
    edges: Vec<(usize, usize)>,
}

impl LaplacianPattern {
    pub fn new(g: &Graph) -> Self {
        let triplets: Vec<(usize, usize, f64)> = (0..g.n)
            .map(|v| (v, v, 0.0))
            .chain(g.edges.iter().map(|&(j, k)| (j, k, 0.0)))
            .collect();
        let pattern = SparseSym::from_triplets(g.n, &triplets).expect("graph indices are in range");
        let diag = (0..g.n).map(|v| pattern.slot(v, v).unwrap()).collect();
        let off = g
            .edges
            .iter()
            .map(|&(j, k)| (pattern.slot(j, k).unwrap(), pattern.slot(k, j).unwrap()))
            .collect();
        LaplacianPattern {
            pattern,
            diag,
            off,
            edges: g.edges.clone(),
        }
    }

    pub fn pattern(&self) -> &SparseSym {
        &self.pattern
    }

    /// Writes the Laplacian values for `weights` into `out` (pattern order).
    pub fn fill(&self, weights: &[f64], out: &mut [f64]) -> Result<()> {
        if weights.len() != self.edges.len() {
            return Err(Error::DimensionMismatch {
                what: "edge weights",
                expected: self.edges.len(),
                found: weights.len(),
            });
        }
        if out.len() != self.pattern.nnz() {
            return Err(Error::PatternMismatch);
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite {
                what: "edge weight",
                index,
            });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for ((&(j, k), &(sjk, skj)), &w) in self.edges.iter().zip(&self.off).zip(weights) {
            out[sjk] = -w;
            out[skj] = -w;
            out[self.diag[j]] += w;
            out[self.diag[k]] += w;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cycle4() -> Graph {
        Graph::from_edge_list(&[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")], &[]).unwrap()
    }

    #[test]
    fn edge_list_dedups_and_canonicalizes() {
        let g = Graph::from_edge_list(&[("a", "b"), ("b", "a"), ("b", "c")], &[]).unwrap();
        assert_eq!(g.n_vertices(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.labels().unwrap(), &["a", "b", "c"]);
        assert_eq!(g.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn singleton_graph() {
        let g = Graph::from_edge_list::<&str>(&[], &["only"]).unwrap();
        assert_eq!(g.n_vertices(), 1);
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn four_cycle_degrees() {
        let g = cycle4();
        assert_eq!(g.n_vertices(), 4);
        assert_eq!(g.n_edges(), 4);
        assert_eq!(g.degrees(), vec![2, 2, 2, 2]);
    }

    #[test]
    fn self_loop_names_vertex() {
        let err = Graph::from_edge_list(&[("a", "b"), ("c", "c")], &[]).unwrap_err();
        assert!(matches!(err, Error::SelfLoop(ref v) if v == "c"));
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let g = Graph::from_edge_list(&[("10", "2"), ("2", "1")], &[]).unwrap();
        assert_eq!(g.labels().unwrap(), &["1", "2", "10"]);
    }

    #[test]
    fn component_examples() {
        assert_eq!(cycle4().components().count(), 1);
        let two = Graph::new(4, [(0, 1), (2, 3)]).unwrap().components();
        assert_eq!(two.count(), 2);
        assert_eq!(two.sizes(), &[2, 2]);
        let empty = Graph::new(5, []).unwrap().components();
        assert_eq!(empty.count(), 5);
        assert_eq!(empty.sizes().iter().sum::<usize>(), 5);
    }

    #[test]
    fn bridge_joins_closest_pair() {
        // component {0,1,2} around x=0, component {3,...,7} around x=10; 2 and 7 closest
        let g = Graph::new(8, [(0, 1), (1, 2), (3, 4), (4, 5), (5, 6), (6, 7)]).unwrap();
        let c = [
            [0.0, 0.0],
            [1.0, 0.0],
            [4.0, 0.0],
            [12.0, 0.0],
            [11.0, 0.0],
            [10.0, 0.0],
            [9.0, 0.0],
            [5.0, 0.0],
        ];
        let b = g.bridge_components(&c).unwrap();
        assert_eq!(b.n_edges(), g.n_edges() + 1);
        let e = b.edge_index(2, 7).unwrap();
        assert!(b.is_artificial(e));
        assert_eq!(b.weights()[e], 1.0);
        assert_eq!(b.components().count(), 1);
    }

    #[test]
    fn bridge_on_connected_graph_is_identity() {
        let g = cycle4();
        assert_eq!(g.bridge_components(&[[0.0; 2]; 4]).unwrap(), g);
    }

    #[test]
    fn bridge_requires_centroids() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        assert!(matches!(
            g.bridge_components(&[[0.0, 0.0]]),
            Err(Error::MissingCentroid(_))
        ));
    }

    #[test]
    fn bridge_three_components_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Graph::new(9, [(0, 1), (1, 2), (3, 4), (4, 5), (6, 7), (7, 8)]).unwrap();
        let c: Vec<[f64; 2]> = (0..9).map(|_| [rng.gen(), rng.gen()]).collect();
        let b = g.bridge_components(&c).unwrap();
        assert_eq!(b.n_edges(), g.n_edges() + 3);
        let groups = [[0, 1, 2], [3, 4, 5], [6, 7, 8]];
        for a in 0..3 {
            for z in a + 1..3 {
                let mut best = (f64::INFINITY, (0, 0));
                for &j in &groups[a] {
                    for &k in &groups[z] {
                        let d = dist2(c[j], c[k]);
                        if d < best.0 {
                            best = (d, (j, k));
                        }
                    }
                }
                let e = b.edge_index(best.1 .0, best.1 .1).expect("closest pair bridged");
                assert!(b.is_artificial(e));
            }
        }
    }

    #[test]
    fn two_vertex_laplacian() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let k = g.laplacian(&[1.0]).unwrap().to_dense();
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn triangle_laplacian_spectrum() {
        let g = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let k = g.laplacian(&[1.0; 3]).unwrap().to_dense();
        for i in 0..3 {
            assert_eq!(k[(i, i)], 2.0);
        }
        let mut ev: Vec<f64> = k.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(ev[0].abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
        assert!((ev[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = Graph::grid(4, 5);
        let w: Vec<f64> = (0..g.n_edges()).map(|e| (e % 7) as f64).collect();
        let k = g.laplacian(&w).unwrap();
        assert!(k.mul_vec(&[1.0; 20]).unwrap().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn laplacian_rejects_weight_mismatch() {
        let g = cycle4();
        assert!(matches!(
            g.laplacian(&[1.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn arb_graph() -> impl Strategy<Value = (Graph, Vec<f64>, Vec<f64>)> {
        (2usize..15).prop_flat_map(|n| {
            (
                proptest::collection::vec((0..n, 0..n), 0..40),
                proptest::collection::vec(-10.0f64..10.0, n),
            )
                .prop_flat_map(move |(pairs, x)| {
                    let g = Graph::new(n, pairs.into_iter().filter(|(a, b)| a != b)).unwrap();
                    let m = g.n_edges();
                    (
                        Just(g),
                        proptest::collection::vec(0.0f64..5.0, m),
                        Just(x),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn laplacian_quadratic_form_identity((g, w, x) in arb_graph()) {
            let k = g.laplacian(&w).unwrap();
            let q = k.quad_form(&x).unwrap();
            let direct: f64 = g.edges().iter().zip(&w)
                .map(|(&(j, l), &v)| v * (x[j] - x[l]).powi(2)).sum();
            prop_assert!((q - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!(q >= -1e-12 * norm2);
            let wsum: f64 = w.iter().sum();
            let row_sums = k.mul_vec(&vec![1.0; g.n_vertices()]).unwrap();
            prop_assert!(row_sums.iter().all(|&s| s.abs() <= 1e-14 * wsum.max(1.0)));
        }

        #[test]
        fn bridging_yields_one_component(
            pairs in proptest::collection::vec((0usize..12, 0usize..12), 0..10),
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 12),
        ) {
            let g = Graph::new(12, pairs.into_iter().filter(|(a, b)| a != b)).unwrap();
            let c: Vec<[f64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
            let b = g.bridge_components(&c).unwrap();
            prop_assert_eq!(b.components().count(), 1);
            let k = g.components().count();
            prop_assert_eq!(b.n_edges(), g.n_edges() + k * (k - 1) / 2);
        }
    }
}
