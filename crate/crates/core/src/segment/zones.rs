use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ComponentMap, Graph};
use crate::sparse::{Factorization, SparseSym};

/// A partition of the vertices into connected zones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segmentation {
    /// Zone of each vertex; zones are numbered by their smallest vertex.
    pub zone_of: Vec<usize>,
    pub zone_count: usize,
    pub zone_sizes: Vec<usize>,
    /// Per-vertex fitted value: the shrinkage estimate, or the zone value
    /// after [`Segmentation::refit`].
    pub theta_hat: Vec<f64>,
    /// Mean of `theta_hat` over each zone.
    pub zone_means: Vec<f64>,
    /// Indices into the graph's edge list of the edges with `δ >= cutoff`.
    pub cut_edges: Vec<usize>,
    pub refitted: bool,
}

impl Segmentation {
    pub fn from_deltas(g: &Graph, theta: &[f64], deltas: &[f64], cutoff: f64) -> Self {
        let edges = g.edges();
        let cut_edges: Vec<usize> = (0..edges.len()).filter(|&e| deltas[e] >= cutoff).collect();
        let comps = ComponentMap::from_edges(
            g.n_vertices(),
            edges
                .iter()
                .zip(deltas)
                .filter(|(_, &d)| d < cutoff)
                .map(|(&e, _)| e),
        );
        let mut seg = Segmentation {
            zone_of: comps.ids().to_vec(),
            zone_count: comps.count(),
            zone_sizes: comps.sizes().to_vec(),
            theta_hat: theta.to_vec(),
            zone_means: Vec::new(),
            cut_edges,
            refitted: false,
        };
        seg.zone_means = seg.means_of(theta);
        seg
    }

    fn means_of(&self, values: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.zone_count];
        for (&z, &v) in self.zone_of.iter().zip(values) {
            sums[z] += v;
        }
        sums.iter()
            .zip(&self.zone_sizes)
            .map(|(s, &n)| s / n as f64)
            .collect()
    }

    /// Replaces the per-vertex values by per-zone generalized least-squares
    /// levels `(MᵀΣ⁻¹M)⁻¹ MᵀΣ⁻¹x`, `M` the vertex-to-zone membership.
    pub fn refit(&mut self, x: &[f64], prec: &SparseSym) -> Result<()> {
        let p = self.zone_of.len();
        if x.len() != p || prec.dim() != p {
            return Err(Error::DimensionMismatch {
                what: "refit data",
                expected: p,
                found: if x.len() != p { x.len() } else { prec.dim() },
            });
        }
        let z = &self.zone_of;
        let mut triplets = Vec::with_capacity(prec.nnz());
        for j in 0..p {
            for (&i, &v) in prec.col_rows(j).iter().zip(prec.col_values(j)) {
                if i < j {
                    continue;
                }
                // from_triplets mirrors off-diagonal entries but places a
                // within-zone pair on the diagonal once, so count both halves
                let v = if i != j && z[i] == z[j] { 2.0 * v } else { v };
                triplets.push((z[i], z[j], v));
            }
        }
        let gram = SparseSym::from_triplets(self.zone_count, &triplets)?;
        let px = prec.mul_vec(x)?;
        let mut rhs = vec![0.0; self.zone_count];
        for (&zi, &v) in z.iter().zip(&px) {
            rhs[zi] += v;
        }
        let levels = Factorization::factor(&gram)?.solve(&rhs)?;
        self.theta_hat = z.iter().map(|&zi| levels[zi]).collect();
        self.zone_means = levels;
        self.refitted = true;
        Ok(())
    }
}
