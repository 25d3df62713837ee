use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::Graph;
use crate::sparse::SparseSym;

fn random_graph(p: usize, extra: usize, rng: &mut ChaCha8Rng) -> Graph {
    // random spanning tree plus a few chords
    let mut edges: Vec<(usize, usize)> = (1..p).map(|v| (rng.gen_range(0..v), v)).collect();
    for _ in 0..extra {
        let j = rng.gen_range(0..p);
        let k = rng.gen_range(0..p);
        if j != k {
            edges.push((j, k));
        }
    }
    Graph::new(p, edges).unwrap()
}

fn random_prec(p: usize, rng: &mut ChaCha8Rng) -> SparseSym {
    let mut t = Vec::new();
    let mut diag = vec![0.0; p];
    for j in 0..p {
        for i in j + 1..p {
            if rng.gen::<f64>() < 0.1 {
                let v: f64 = rng.gen_range(-0.5..0.5);
                t.push((i, j, v));
                diag[i] += v.abs();
                diag[j] += v.abs();
            }
        }
    }
    for (j, d) in diag.iter().enumerate() {
        t.push((j, j, d + rng.gen_range(0.5..2.0)));
    }
    SparseSym::from_triplets(p, &t).unwrap()
}

/// A few levels spread over the vertices plus noise.
fn piecewise_signal(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let levels: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..10.0)).collect();
    (0..p)
        .map(|v| levels[(v * 3) / p] + rng.gen_range(-0.3..0.3))
        .collect()
}

fn dense_laplacian(g: &Graph, w: &[f64]) -> DMatrix<f64> {
    let p = g.n_vertices();
    let mut k = DMatrix::zeros(p, p);
    for (&(a, b), &v) in g.edges().iter().zip(w) {
        k[(a, a)] += v;
        k[(b, b)] += v;
        k[(a, b)] -= v;
        k[(b, a)] -= v;
    }
    k
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

#[test]
fn config_validation() {
    assert!(ArConfig::default().validate().is_ok());
    for cfg in [
        ArConfig { epsilon: 0.0, ..Default::default() },
        ArConfig { cutoff: 1.0, ..Default::default() },
        ArConfig { cutoff: 0.0, ..Default::default() },
        ArConfig { tol: -1.0, ..Default::default() },
        ArConfig { max_iter: 0, ..Default::default() },
    ] {
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }
}

#[test]
fn cost_examples() {
    let i2 = SparseSym::identity(2);
    assert_eq!(cost(&[1.0, 2.0], &[1.0, 2.0], &i2).unwrap(), 0.0);
    assert_eq!(cost(&[3.0, 4.0], &[0.0, 0.0], &i2).unwrap(), 12.5);
    assert!(cost(&[1.0], &[1.0, 2.0], &i2).is_err());
}

#[test]
fn cost_matches_dense_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = 25;
    let prec = random_prec(p, &mut rng);
    let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let th: Vec<f64> = (0..p).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let r = DVector::from_iterator(p, x.iter().zip(&th).map(|(a, b)| a - b));
    let oracle = 0.5 * (r.transpose() * prec.to_dense() * &r)[(0, 0)];
    let c = cost(&x, &th, &prec).unwrap();
    assert!((c - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
}

#[test]
fn zero_penalty_returns_data_in_one_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_graph(30, 10, &mut rng);
    let prec = random_prec(30, &mut rng);
    let x = piecewise_signal(30, &mut rng);
    let s = ar_iterate(&x, &prec, &g, 0.0, None, &ArConfig::default()).unwrap();
    assert_eq!(s.iteration, 1);
    assert!(s.converged);
    let err = s.theta.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-8 * max_abs(&x));
}

#[test]
fn single_vertex_has_no_iterations() {
    let g = Graph::new(1, []).unwrap();
    let s = ar_iterate(&[4.5], &SparseSym::identity(1), &g, 3.0, None, &ArConfig::default()).unwrap();
    assert_eq!(s.theta, vec![4.5]);
    assert_eq!(s.iteration, 0);
    assert!(s.converged);
}

#[test]
fn large_penalty_fuses_to_the_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = Graph::grid(5, 6);
    let x: Vec<f64> = (0..30).map(|_| rng.gen_range(0.0..20.0)).collect();
    let cfg = ArConfig::default();
    let s = ar_iterate(&x, &SparseSym::identity(30), &g, 1e9, None, &cfg).unwrap();
    let mean = x.iter().sum::<f64>() / 30.0;
    let spread = x.iter().cloned().fold(f64::MIN, f64::max) - x.iter().cloned().fold(f64::MAX, f64::min);
    let dev = s.theta.iter().map(|t| (t - mean).abs()).fold(0.0, f64::max);
    assert!(dev <= 1e-4 * spread, "deviation {dev}");
    assert_eq!(extract_zones(&g, &s, &cfg).zone_count, 1);
}

#[test]
fn two_node_fixed_point_matches_scalar_iteration() {
    let g = Graph::new(2, [(0, 1)]).unwrap();
    let x = [0.0, 10.0];
    let (lambda, eps) = (0.01, 1e-6);
    let s = ar_iterate(&x, &SparseSym::identity(2), &g, lambda, None, &ArConfig::default()).unwrap();
    // θ = (I + λvK)⁻¹x gives d = 10 / (1 + 2λv); iterate v = 1 / (d² + ε)
    // for as many steps as the solver took
    let mut v = 1.0;
    let mut d = 0.0;
    for _ in 0..s.iteration {
        d = 10.0 / (1.0 + 2.0 * lambda * v);
        v = 1.0 / (d * d + eps);
    }
    assert!(s.converged);
    assert!(((s.theta[1] - s.theta[0]) - d).abs() <= 1e-12);
    let mut fixed = d;
    for _ in 0..100 {
        fixed = 10.0 / (1.0 + 2.0 * lambda / (fixed * fixed + eps));
    }
    assert!((d - fixed).abs() <= 1e-3);
    assert!(s.deltas[0] >= 0.99);
    assert!(s.theta[0] >= 0.0 && s.theta[0] <= 0.2);
    assert!(s.theta[1] <= 10.0 && s.theta[1] >= 9.8);
}

#[test]
fn converged_state_is_a_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let g = Graph::grid(4, 5);
    let x = piecewise_signal(20, &mut rng);
    let prec = SparseSym::identity(20);
    let cfg = ArConfig::default();
    let s = ar_iterate(&x, &prec, &g, 0.5, None, &cfg).unwrap();
    assert!(s.converged);
    let one = ArConfig { max_iter: 1, ..cfg };
    let again = ar_iterate(&x, &prec, &g, 0.5, Some(&s.edge_weights), &one).unwrap();
    let diff = s.theta.iter().zip(&again.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-6 * max_abs(&s.theta));
}

#[test]
fn bad_initial_weights_are_rejected() {
    let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
    let i3 = SparseSym::identity(3);
    let x = [1.0, 2.0, 3.0];
    let cfg = ArConfig::default();
    assert!(ar_iterate(&x, &i3, &g, 1.0, Some(&[1.0]), &cfg).is_err());
    assert!(ar_iterate(&x, &i3, &g, 1.0, Some(&[1.0, 0.0]), &cfg).is_err());
    assert!(ar_iterate(&x, &i3, &g, -1.0, None, &cfg).is_err());
    assert!(ar_iterate(&[1.0, f64::NAN, 3.0], &i3, &g, 1.0, None, &cfg).is_err());
}

#[test]
fn indefinite_precision_is_a_numerical_error() {
    let g = Graph::new(2, [(0, 1)]).unwrap();
    let prec = SparseSym::diagonal(&[1.0, -1.0]);
    let err = ar_iterate(&[0.0, 1.0], &prec, &g, 0.1, None, &ArConfig::default()).unwrap_err();
    assert!(err.is_numerical(), "{err}");
}

#[test]
fn iteration_cap_flags_non_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = Graph::grid(4, 4);
    let x = piecewise_signal(16, &mut rng);
    let cfg = ArConfig { max_iter: 2, tol: 1e-300, ..Default::default() };
    let s = ar_iterate(&x, &SparseSym::identity(16), &g, 1.0, None, &cfg).unwrap();
    assert_eq!(s.iteration, 2);
    assert!(!s.converged);
}

#[test]
fn regression_scaled_identity() {
    let g = Graph::grid(2, 3);
    let x = [1.0, 4.0, -2.0, 0.5, 8.0, 3.0];
    let d = Design::Dense(DMatrix::identity(6, 6) * 2.0);
    let s = ar_iterate_regression(&x, &d, &SparseSym::identity(6), &g, 0.0, &ArConfig::default()).unwrap();
    for (t, v) in s.theta.iter().zip(&x) {
        assert!((t - v / 2.0).abs() <= 1e-14);
    }
}

#[test]
fn regression_matches_dense_gls_at_zero_penalty() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, p) = (20, 10);
    let xm = DMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0));
    let prec = random_prec(n, &mut rng);
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let g = random_graph(p, 3, &mut rng);
    let s = ar_iterate_regression(&y, &Design::Dense(xm.clone()), &prec, &g, 0.0, &ArConfig::default())
        .unwrap();
    let w = prec.to_dense();
    let yv = DVector::from_column_slice(&y);
    let lhs = xm.transpose() * &w * &xm;
    let rhs = xm.transpose() * &w * yv;
    let oracle = lhs.lu().solve(&rhs).unwrap();
    for (a, b) in s.theta.iter().zip(oracle.iter()) {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
    }
}

#[test]
fn sparse_and_dense_designs_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, p) = (15, 8);
    let mut t = Vec::new();
    let mut dense = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            if rng.gen::<f64>() < 0.4 || i == j {
                let v = rng.gen_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 };
                t.push((i, j, v));
                dense[(i, j)] = v;
            }
        }
    }
    let sparse = CscMatrix::from_triplets(n, p, &t).unwrap();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let g = Graph::grid(2, 4);
    let cfg = ArConfig::default();
    let prec = SparseSym::identity(n);
    let a = ar_iterate_regression(&y, &Design::Dense(dense), &prec, &g, 0.3, &cfg).unwrap();
    let b = ar_iterate_regression(&y, &Design::from(sparse), &prec, &g, 0.3, &cfg).unwrap();
    for (u, v) in a.theta.iter().zip(&b.theta) {
        assert!((u - v).abs() <= 1e-9 * v.abs().max(1.0));
    }
}

#[test]
fn zone_extraction_extremes() {
    let g = Graph::new(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
    let theta = [1.0, 2.0, 3.0, 4.0, 5.0];
    let fused = Segmentation::from_deltas(&g, &theta, &[0.0; 3], 0.99);
    assert_eq!(fused.zone_count, 2);
    assert_eq!(fused.zone_of, vec![0, 0, 0, 1, 1]);
    assert_eq!(fused.zone_means, vec![2.0, 4.5]);
    assert!(fused.cut_edges.is_empty());
    let cut = Segmentation::from_deltas(&g, &theta, &[0.995; 3], 0.99);
    assert_eq!(cut.zone_count, 5);
    assert_eq!(cut.cut_edges, vec![0, 1, 2]);
}

#[test]
fn two_by_two_split_into_columns() {
    // vertices 0 1 / 2 3; edges (0,1) (0,2) (1,3) (2,3)
    let g = Graph::grid(2, 2);
    let deltas: Vec<f64> = g
        .edges()
        .iter()
        .map(|&(j, k)| if j % 2 != k % 2 { 0.999 } else { 0.0 })
        .collect();
    let s = Segmentation::from_deltas(&g, &[0.0; 4], &deltas, 0.99);
    assert_eq!(s.zone_count, 2);
    assert_eq!(s.zone_sizes, vec![2, 2]);
    assert_eq!(s.zone_of[0], s.zone_of[2]);
    assert_eq!(s.zone_of[1], s.zone_of[3]);
}

#[test]
fn refit_gives_precision_weighted_zone_means() {
    let g = Graph::grid(1, 6);
    let x = [1.0, 2.0, 4.0, 10.0, 11.0, 13.0];
    let w = [1.0, 2.0, 0.5, 3.0, 1.0, 1.0];
    let prec = SparseSym::diagonal(&w);
    let deltas = [0.0, 0.0, 0.999, 0.0, 0.0];
    let mut s = Segmentation::from_deltas(&g, &x, &deltas, 0.99);
    s.refit(&x, &prec).unwrap();
    let zone = |r: std::ops::Range<usize>| {
        let num: f64 = r.clone().map(|i| w[i] * x[i]).sum();
        num / r.map(|i| w[i]).sum::<f64>()
    };
    let (a, b) = (zone(0..3), zone(3..6));
    assert!(s.refitted);
    for i in 0..3 {
        assert!((s.theta_hat[i] - a).abs() <= 1e-12);
        assert!((s.theta_hat[i + 3] - b).abs() <= 1e-12);
    }
}

#[test]
fn refit_with_correlated_precision_matches_dense_gls() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = 12;
    let prec = random_prec(p, &mut rng);
    let g = Graph::grid(3, 4);
    let x: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..5.0)).collect();
    let deltas: Vec<f64> = g.edges().iter().map(|&(j, _)| if j % 4 == 1 { 0.999 } else { 0.0 }).collect();
    let mut s = Segmentation::from_deltas(&g, &x, &deltas, 0.99);
    s.refit(&x, &prec).unwrap();
    let m = DMatrix::from_fn(p, s.zone_count, |i, z| if s.zone_of[i] == z { 1.0 } else { 0.0 });
    let w = prec.to_dense();
    let lhs = m.transpose() * &w * &m;
    let rhs = m.transpose() * &w * DVector::from_column_slice(&x);
    let levels = lhs.lu().solve(&rhs).unwrap();
    for (a, b) in s.zone_means.iter().zip(levels.iter()) {
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
    }
}

#[test]
fn path_of_zero_penalty() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = Graph::grid(3, 3);
    let x = piecewise_signal(9, &mut rng);
    let path = run_path(&x, &SparseSym::identity(9), &g, &[0.0], &ArConfig::default()).unwrap();
    assert_eq!(path.entries.len(), 1);
    let r = path.record(0).unwrap();
    assert!((r.effective_dim - 9.0).abs() <= 1e-6);
    assert!(r.theta_hat.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-8 * max_abs(&x)));
    assert_eq!(path.selected.aic, Some(0));
}

#[test]
fn path_grid_validation() {
    let g = Graph::grid(2, 2);
    let i4 = SparseSym::identity(4);
    let x = [1.0; 4];
    let cfg = ArConfig::default();
    assert!(run_path(&x, &i4, &g, &[], &cfg).is_err());
    assert!(run_path(&x, &i4, &g, &[1.0, 1.0], &cfg).is_err());
    assert!(run_path(&x, &i4, &g, &[2.0, 1.0], &cfg).is_err());
    assert!(run_path(&x, &i4, &g, &[-1.0, 1.0], &cfg).is_err());
}

#[test]
fn failed_penalties_mark_the_path_partial() {
    let g = Graph::new(2, [(0, 1)]).unwrap();
    let prec = SparseSym::diagonal(&[1.0, -1.0]);
    let path = run_path(&[0.0, 1.0], &prec, &g, &[0.1, 1.0], &ArConfig::default()).unwrap();
    assert!(path.partial);
    assert!(path.entries.iter().all(|e| matches!(e, PathEntry::Failed { numerical: true, .. })));
    assert_eq!(path.selected, SelectedIndices::default());
    assert!(crate::select::select_lambda(&path, crate::Criterion::Aic).is_err());
}

#[test]
fn path_reuses_one_symbolic_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = Graph::grid(5, 5);
    let x = piecewise_signal(25, &mut rng);
    let mut engine = AdaptiveRidge::new(&x, &SparseSym::identity(25), &g).unwrap();
    let before = engine.symbolic_fingerprint();
    let sym = std::sync::Arc::clone(engine.symbolic());
    let grid: Vec<f64> = (0..10).map(|i| 0.01 * 2f64.powi(i)).collect();
    let path = engine.run_path(&grid, &ArConfig::default()).unwrap();
    assert_eq!(path.entries.len(), 10);
    assert_eq!(engine.symbolic_fingerprint(), before);
    assert!(std::sync::Arc::ptr_eq(&sym, engine.symbolic()));
}

#[test]
fn largest_penalty_gives_one_zone_per_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let g = Graph::new(12, (0..5).map(|v| (v, v + 1)).chain((6..11).map(|v| (v, v + 1)))).unwrap();
    let x = piecewise_signal(12, &mut rng);
    let grid: Vec<f64> = (0..50).map(|i| 10f64.powf(-3.0 + 12.0 * i as f64 / 49.0)).collect();
    let path = run_path(&x, &SparseSym::identity(12), &g, &grid, &ArConfig::default()).unwrap();
    assert_eq!(path.entries.len(), 50);
    assert_eq!(path.record(49).unwrap().zone_count, 2);
}

#[test]
fn warm_starts_do_not_cost_more_than_cold_starts() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Graph::grid(6, 6);
        let x = piecewise_signal(36, &mut rng);
        let prec = SparseSym::identity(36);
        let grid = [0.5, 2.0];
        let warm = run_path(&x, &prec, &g, &grid, &ArConfig::default()).unwrap();
        let cold_cfg = ArConfig { warm_start: false, ..Default::default() };
        let cold = run_path(&x, &prec, &g, &grid, &cold_cfg).unwrap();
        assert!(
            warm.total_iterations() as f64 <= 1.5 * cold.total_iterations() as f64,
            "seed {seed}: {} vs {}",
            warm.total_iterations(),
            cold.total_iterations()
        );
    }
}

fn instance(seed: u64, p: usize) -> (Graph, SparseSym, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(p, p / 3, &mut rng);
    let prec = random_prec(p, &mut rng);
    let x = piecewise_signal(p, &mut rng);
    let lambda = 10f64.powf(rng.gen_range(-2.0..1.0));
    (g, prec, x, lambda)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_iterate_solves_its_weighted_system(seed in 0u64..1000, p in 3usize..30) {
        let (g, prec, x, lambda) = instance(seed, p);
        let h = prec.to_dense();
        let b = &h * DVector::from_column_slice(&x);
        let mut engine = AdaptiveRidge::new(&x, &prec, &g).unwrap();
        let mut worst = 0.0f64;
        engine.fit_observed(lambda, Start::Cold, &ArConfig::default(), &mut |it| {
            let a = &h + dense_laplacian(&g, it.weights_used) * lambda;
            let th = DVector::from_column_slice(it.theta);
            let grad = &a * &th - &b;
            let scale = a.abs().column_sum().max() * th.amax() + b.amax();
            worst = worst.max(grad.amax() / scale);
        }).unwrap();
        prop_assert!(worst <= 1e-10, "relative gradient {}", worst);
    }

    #[test]
    fn implicit_objective_never_increases(seed in 0u64..1000, p in 3usize..25) {
        let (g, prec, x, lambda) = instance(seed, p);
        let eps = 1e-6;
        let mut values = Vec::new();
        let mut engine = AdaptiveRidge::new(&x, &prec, &g).unwrap();
        engine.fit_observed(lambda, Start::Cold, &ArConfig::default(), &mut |it| {
            values.push(implicit_objective(&x, it.theta, &prec, &g, lambda, eps).unwrap());
        }).unwrap();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn deltas_and_weights_stay_in_range(seed in 0u64..1000, p in 2usize..25) {
        let (g, prec, x, lambda) = instance(seed, p);
        let eps = 1e-6;
        let mut ok = true;
        let mut engine = AdaptiveRidge::new(&x, &prec, &g).unwrap();
        engine.fit_observed(lambda, Start::Cold, &ArConfig::default(), &mut |it| {
            ok &= it.deltas.iter().all(|d| (0.0..1.0).contains(d));
            ok &= it.weights.iter().all(|&v| v > 0.0 && v <= 1.0 / eps);
        }).unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn constant_shift_moves_the_fit(seed in 0u64..1000, c in -50.0f64..50.0) {
        let (g, prec, x, lambda) = instance(seed, 15);
        let cfg = ArConfig::default();
        let a = ar_iterate(&x, &prec, &g, lambda, None, &cfg).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
        let b = ar_iterate(&xs, &prec, &g, lambda, None, &cfg).unwrap();
        for (u, v) in a.theta.iter().zip(&b.theta) {
            prop_assert!((v - u - c).abs() <= 1e-8 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn relabeling_vertices_permutes_the_fit(seed in 0u64..1000, order in Just((0..20usize).collect::<Vec<_>>()).prop_shuffle()) {
        let (g, prec, x, lambda) = instance(seed, 20);
        let cfg = ArConfig::default();
        let a = ar_iterate(&x, &prec, &g, lambda, None, &cfg).unwrap();
        // order[new] = old
        let mut new_of = vec![0; 20];
        for (new, &old) in order.iter().enumerate() {
            new_of[old] = new;
        }
        let gp = g.relabeled(&new_of).unwrap();
        let pp = prec.permuted(&order).unwrap();
        let xp: Vec<f64> = order.iter().map(|&o| x[o]).collect();
        let b = ar_iterate(&xp, &pp, &gp, lambda, None, &cfg).unwrap();
        let scale = max_abs(&a.theta).max(1.0);
        for (new, &old) in order.iter().enumerate() {
            prop_assert!((b.theta[new] - a.theta[old]).abs() <= 1e-10 * scale);
        }
    }
}
