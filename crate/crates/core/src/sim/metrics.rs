use std::collections::HashMap;

use crate::error::{Error, Result};

/// `sqrt(mean((a − b)²))`.
pub fn rmse(theta_hat: &[f64], theta_true: &[f64]) -> Result<f64> {
    if theta_hat.len() != theta_true.len() {
        return Err(Error::DimensionMismatch {
            what: "rmse operands",
            expected: theta_true.len(),
            found: theta_hat.len(),
        });
    }
    if theta_hat.is_empty() {
        return Err(Error::Empty("rmse operands"));
    }
    let ss: f64 = theta_hat
        .iter()
        .zip(theta_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / theta_hat.len() as f64).sqrt())
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Rand index and adjusted Rand index of two labelings, from their
/// contingency table. Label values only matter through equality.
pub fn rand_index<A, B>(a: &[A], b: &[B]) -> Result<(f64, f64)>
where
    A: Eq + std::hash::Hash,
    B: Eq + std::hash::Hash,
{
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "partitions",
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("partitions"));
    }
    let mut table: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let total = pairs(a.len() as u64);
    if total == 0.0 {
        return Ok((1.0, 1.0));
    }
    let both: f64 = table.values().map(|&n| pairs(n)).sum();
    let sa: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sb: f64 = cols.values().map(|&n| pairs(n)).sum();
    let rand = (total + 2.0 * both - sa - sb) / total;
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    let ari = if max == expected {
        1.0
    } else {
        (both - expected) / (max - expected)
    };
    Ok((rand, ari))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Counts agreeing pairs directly and adjusts with the permutation
    /// expectation of the pair-counting statistic.
    fn brute_force(a: &[usize], b: &[usize]) -> (f64, f64) {
        let n = a.len();
        let (mut agree, mut both, mut sa, mut sb, mut total) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let (x, y) = (a[i] == a[j], b[i] == b[j]);
                total += 1.0;
                if x == y {
                    agree += 1.0;
                }
                if x && y {
                    both += 1.0;
                }
                if x {
                    sa += 1.0;
                }
                if y {
                    sb += 1.0;
                }
            }
        }
        let e = sa * sb / total;
        let m = (sa + sb) / 2.0;
        let ari = if m == e { 1.0 } else { (both - e) / (m - e) };
        (agree / total, ari)
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn rmse_matches_direct_recompute() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin() * 4.0).collect();
        let b: Vec<f64> = (0..37).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut s = 0.0;
        for i in 0..37 {
            s += (a[i] - b[i]).powi(2);
        }
        let oracle = (s / 37.0).sqrt();
        assert!((rmse(&a, &b).unwrap() - oracle).abs() <= 1e-12);
    }

    #[test]
    fn rand_examples() {
        assert_eq!(rand_index(&[0, 0, 1, 2], &[0, 0, 1, 2]).unwrap(), (1.0, 1.0));
        assert_eq!(rand_index(&['a', 'a', 'b', 'b'], &["x", "x", "y", "y"]).unwrap(), (1.0, 1.0));
        let (r, ari) = rand_index(&['a', 'a', 'b', 'b'], &['x', 'y', 'x', 'y']).unwrap();
        assert!((r - 2.0 / 6.0).abs() < 1e-15);
        assert!((ari + 0.5).abs() < 1e-15);
        assert_eq!(rand_index(&[3], &[9]).unwrap(), (1.0, 1.0));
        assert!(rand_index::<u8, u8>(&[], &[]).is_err());
        assert!(rand_index(&[1, 2], &[1]).is_err());
    }

    proptest! {
        #[test]
        fn contingency_formula_matches_pair_counting(
            labels in proptest::collection::vec((0usize..4, 0usize..5), 2..40)
        ) {
            let a: Vec<usize> = labels.iter().map(|l| l.0).collect();
            let b: Vec<usize> = labels.iter().map(|l| l.1).collect();
            let (r, ari) = rand_index(&a, &b).unwrap();
            let (r0, ari0) = brute_force(&a, &b);
            prop_assert!((r - r0).abs() <= 1e-12);
            prop_assert!((ari - ari0).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert!(ari <= 1.0 + 1e-12);
        }

        #[test]
        fn indices_ignore_label_names(
            labels in proptest::collection::vec((0usize..4, 0usize..4), 2..30),
            shift in 1usize..10,
        ) {
            let a: Vec<usize> = labels.iter().map(|l| l.0).collect();
            let b: Vec<usize> = labels.iter().map(|l| l.1).collect();
            let a2: Vec<usize> = a.iter().map(|v| (3 - v) * 7 + shift).collect();
            let (r, ari) = rand_index(&a, &b).unwrap();
            let (r2, ari2) = rand_index(&a2, &b).unwrap();
            prop_assert!((r - r2).abs() <= 1e-12 && (ari - ari2).abs() <= 1e-12);
        }
    }
}
