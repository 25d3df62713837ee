//! Model-selection criteria over a penalty path.
//!
//! The criteria use the sum-of-squares cost without the Gaussian
//! normalizing constants, so AIC/BIC values rank fits on one path but are not
//! comparable with likelihood-based values from other software.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::PathFit;

/// Relative gap below which `e(λ)` counts as equal to `p` and GCV is undefined.
pub const GCV_SATURATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
    Gcv,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Aic, Criterion::Bic, Criterion::Gcv];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Aic => "aic",
            Criterion::Bic => "bic",
            Criterion::Gcv => "gcv",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "bic" => Ok(Criterion::Bic),
            "gcv" => Ok(Criterion::Gcv),
            other => Err(Error::InvalidConfig(format!(
                "unknown criterion `{other}` (expected aic, bic or gcv)"
            ))),
        }
    }
}

/// AIC, BIC and GCV of one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub aic: f64,
    pub bic: f64,
    /// `+inf` when `gcv_defined` is false.
    pub gcv: f64,
    pub gcv_defined: bool,
}

impl Criteria {
    pub fn get(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Aic => self.aic,
            Criterion::Bic => self.bic,
            Criterion::Gcv => self.gcv,
        }
    }
}

/// Criteria for a fit with `cost2 = 2ℓ(θ̂)` and effective dimension `e` on
/// `p` vertices.
pub fn criteria(cost2: f64, e: f64, p: usize) -> Result<Criteria> {
    if p == 0 {
        return Err(Error::Empty("criteria need at least one vertex"));
    }
    if !cost2.is_finite() || cost2 < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "cost must be finite and nonnegative, got {cost2}"
        )));
    }
    if !e.is_finite() || e <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "effective dimension must be positive, got {e}"
        )));
    }
    let pf = p as f64;
    let aic = cost2 + 2.0 * e;
    let bic = cost2 + pf.ln() * e;
    let gcv_defined = pf - e > GCV_SATURATION * pf;
    let gcv = if gcv_defined {
        cost2 / (pf * (1.0 - e / pf).powi(2))
    } else {
        f64::INFINITY
    };
    Ok(Criteria {
        aic,
        bic,
        gcv,
        gcv_defined,
    })
}

/// Index of the smallest finite value; ties go to the larger index.
pub fn argmin_prefer_last(values: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| v <= b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::DegenerateCriterion)
}

/// Index into `path.lambdas` minimizing `criterion`; failed fits are skipped
/// and ties resolve toward the larger penalty.
pub fn select_lambda(path: &PathFit, criterion: Criterion) -> Result<usize> {
    if path.lambdas.is_empty() {
        return Err(Error::Empty("penalty path"));
    }
    let values: Vec<f64> = path
        .entries
        .iter()
        .map(|e| e.record().map_or(f64::NAN, |r| r.criteria.get(criterion)))
        .collect();
    argmin_prefer_last(&values)
}

/// Criterion curves of a path, one value per penalty (`NaN` for failed fits).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionValues {
    pub effective_dim: Vec<f64>,
    pub aic: Vec<f64>,
    pub bic: Vec<f64>,
    pub gcv: Vec<f64>,
    pub argmin_aic: Option<usize>,
    pub argmin_bic: Option<usize>,
    pub argmin_gcv: Option<usize>,
}

impl CriterionValues {
    pub fn from_path(path: &PathFit) -> Self {
        let col = |f: &dyn Fn(&crate::segment::PathRecord) -> f64| -> Vec<f64> {
            path.entries
                .iter()
                .map(|e| e.record().map_or(f64::NAN, f))
                .collect()
        };
        let aic = col(&|r| r.criteria.aic);
        let bic = col(&|r| r.criteria.bic);
        let gcv = col(&|r| r.criteria.gcv);
        CriterionValues {
            effective_dim: col(&|r| r.effective_dim),
            argmin_aic: argmin_prefer_last(&aic).ok(),
            argmin_bic: argmin_prefer_last(&bic).ok(),
            argmin_gcv: argmin_prefer_last(&gcv).ok(),
            aic,
            bic,
            gcv,
        }
    }

    pub fn argmin(&self, c: Criterion) -> Option<usize> {
        match c {
            Criterion::Aic => self.argmin_aic,
            Criterion::Bic => self.argmin_bic,
            Criterion::Gcv => self.argmin_gcv,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let c = criteria(10.0, 3.0, 20).unwrap();
        assert!((c.aic - 16.0).abs() < 1e-12);
        assert!((c.bic - (10.0 + 3.0 * 20f64.ln())).abs() < 1e-12);
        assert!((c.bic - 18.987).abs() < 1e-3);
        assert!((c.gcv - 10.0 / (20.0 * 0.85f64.powi(2))).abs() < 1e-12);
        assert!((c.gcv - 0.6920).abs() < 1e-3);
        assert!(c.gcv_defined);
    }

    #[test]
    fn saturated_dimension_has_no_gcv() {
        let c = criteria(1.0, 20.0, 20).unwrap();
        assert!(!c.gcv_defined);
        assert_eq!(c.gcv, f64::INFINITY);
    }

    #[test]
    fn unpenalized_fit_values() {
        let p = 50;
        let c = criteria(0.0, p as f64, p).unwrap();
        assert_eq!(c.aic, 2.0 * p as f64);
        assert!((c.bic - p as f64 * (p as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn criteria_reject_bad_input() {
        assert!(criteria(1.0, 1.0, 0).is_err());
        assert!(criteria(-1.0, 1.0, 3).is_err());
        assert!(criteria(1.0, 0.0, 3).is_err());
        assert!(criteria(f64::NAN, 1.0, 3).is_err());
    }

    #[test]
    fn argmin_examples() {
        assert_eq!(argmin_prefer_last(&[7.0]).unwrap(), 0);
        assert_eq!(argmin_prefer_last(&[5.0, 3.0, 4.0]).unwrap(), 1);
        assert_eq!(argmin_prefer_last(&[3.0, 3.0]).unwrap(), 1);
        assert_eq!(argmin_prefer_last(&[f64::NAN, 2.0, f64::INFINITY]).unwrap(), 1);
        assert!(matches!(
            argmin_prefer_last(&[f64::NAN, f64::INFINITY]),
            Err(Error::DegenerateCriterion)
        ));
    }

    #[test]
    fn constant_dimension_gives_same_ranking() {
        let costs = [12.0, 7.5, 9.0, 7.6, 30.0];
        let e = 4.0;
        let p = 40;
        let cs: Vec<Criteria> = costs.iter().map(|&c| criteria(c, e, p).unwrap()).collect();
        let pick = |f: fn(&Criteria) -> f64| {
            argmin_prefer_last(&cs.iter().map(f).collect::<Vec<_>>()).unwrap()
        };
        assert_eq!(pick(|c| c.aic), 1);
        assert_eq!(pick(|c| c.bic), 1);
        assert_eq!(pick(|c| c.gcv), 1);
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("AIC".parse::<Criterion>().unwrap(), Criterion::Aic);
        assert_eq!("gcv".parse::<Criterion>().unwrap(), Criterion::Gcv);
        assert!("cv".parse::<Criterion>().is_err());
    }
}
