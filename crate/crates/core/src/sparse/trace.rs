use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Factorization, SparseSym};
use crate::error::{Error, Result};

/// Above this dimension [`TraceMode::Auto`] switches to the stochastic estimator.
pub const EXACT_TRACE_MAX_DIM: usize = 20_000;

/// How `Tr(A⁻¹ B)` is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    /// Exact for `n <= 20_000`, stochastic with 64 probes beyond.
    #[default]
    Auto,
    /// Sum of `e_jᵀ A⁻¹ b_j` over the columns of `B`.
    Exact,
    /// Hutchinson estimator with Rademacher probes.
    Stochastic { probes: usize, seed: u64 },
}

impl TraceMode {
    pub fn resolve(self, n: usize) -> TraceMode {
        match self {
            TraceMode::Auto if n <= EXACT_TRACE_MAX_DIM => TraceMode::Exact,
            TraceMode::Auto => TraceMode::Stochastic {
                probes: 64,
                seed: 0,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub value: f64,
    /// Standard error of the stochastic estimate; `None` when exact.
    pub std_error: Option<f64>,
}

struct ReachWork {
    ye: Vec<f64>,
    yb: Vec<f64>,
    mark: Vec<usize>,
    reach: Vec<usize>,
}

impl Factorization {
    /// `Tr(A⁻¹ B)` for the factored `A`.
    pub fn trace_product_inverse(&self, b: &SparseSym, mode: TraceMode) -> Result<TraceEstimate> {
        let n = self.dim();
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                what: "trace operand",
                expected: n,
                found: b.dim(),
            });
        }
        if !self.is_ready() {
            return Err(Error::InvalidConfig(
                "factorization has no current numeric factor".into(),
            ));
        }
        match mode.resolve(n) {
            TraceMode::Stochastic { probes, seed } => self.trace_stochastic(b, probes, seed),
            _ => Ok(TraceEstimate {
                value: self.trace_exact(b),
                std_error: None,
            }),
        }
    }

    /// `Σ_j (L⁻¹ P e_j)·(L⁻¹ P b_j)`, each forward solve restricted to the
    /// elimination-tree reach of the column's nonzeros.
    fn trace_exact(&self, b: &SparseSym) -> f64 {
        let n = self.dim();
        let pinv = self.symbolic().inverse_permutation();
        let parent = self.parents();
        let terms: Vec<f64> = (0..n)
            .into_par_iter()
            .map_init(
                || ReachWork {
                    ye: vec![0.0; n],
                    yb: vec![0.0; n],
                    mark: vec![usize::MAX; n],
                    reach: Vec::new(),
                },
                |w, j| {
                    let rows = b.col_rows(j);
                    let vals = b.col_values(j);
                    let diag_only = rows.len() == 1 && rows[0] == j;
                    w.reach.clear();
                    for &i in rows.iter().chain(std::iter::once(&j)) {
                        let mut k = pinv[i];
                        while k != usize::MAX && w.mark[k] != j {
                            w.mark[k] = j;
                            w.reach.push(k);
                            k = parent[k];
                        }
                    }
                    w.reach.sort_unstable();
                    w.ye[pinv[j]] = 1.0;
                    self.forward_sparse(&mut w.ye, &w.reach);
                    let term = if diag_only {
                        vals[0] * w.reach.iter().map(|&k| w.ye[k] * w.ye[k]).sum::<f64>()
                    } else {
                        for (&i, &v) in rows.iter().zip(vals) {
                            w.yb[pinv[i]] = v;
                        }
                        self.forward_sparse(&mut w.yb, &w.reach);
                        w.reach.iter().map(|&k| w.ye[k] * w.yb[k]).sum::<f64>()
                    };
                    for &k in &w.reach {
                        w.ye[k] = 0.0;
                        w.yb[k] = 0.0;
                    }
                    term
                },
            )
            .collect();
        terms.iter().sum()
    }

    fn trace_stochastic(&self, b: &SparseSym, probes: usize, seed: u64) -> Result<TraceEstimate> {
        if probes == 0 {
            return Err(Error::InvalidConfig(
                "stochastic trace needs at least one probe".into(),
            ));
        }
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zs: Vec<Vec<f64>> = (0..probes)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        let samples = zs
            .par_iter()
            .map(|z| {
                let mut u = b.mul_vec(z)?;
                let mut work = vec![0.0; n];
                self.solve_in_place(&mut u, &mut work)?;
                Ok(z.iter().zip(&u).map(|(a, c)| a * c).sum::<f64>())
            })
            .collect::<Result<Vec<f64>>>()?;
        let m = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / m;
        let std_error = if samples.len() > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        } else {
            f64::INFINITY
        };
        Ok(TraceEstimate {
            value: mean,
            std_error: Some(std_error),
        })
    }
}
