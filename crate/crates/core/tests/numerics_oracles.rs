#![allow(clippy::needless_range_loop)]
mod common;

use common::oracles::{adam_scalar, classical_jacobi, covariance, subspace_agreement, triple_loop};
use seqfuse_core::numerics::{cross_entropy, pca_fit, softmax, symmetric_eigen, Matrix, Rng};
use seqfuse_core::training::{adam_step, AdamConfig, OptimizerState};

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Data with a planted, well separated spectrum.
fn spiked(n: usize, d: usize, seed: u64) -> Matrix {
    let mut rng = Rng::new(seed);
    let scales: Vec<f64> = (0..d).map(|j| 3.0 / (1.0 + j as f64)).collect();
    let mixing: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.normal()).collect()).collect();
    let mut x = Matrix::zeros(n, d);
    for r in 0..n {
        let z: Vec<f64> = scales.iter().map(|s| s * rng.normal()).collect();
        for c in 0..d {
            x.set(r, c, (0..d).map(|j| z[j] * mixing[j][c]).sum::<f64>() + 0.5);
        }
    }
    x
}

#[test]
fn uniform_softmax_cross_entropy_is_log_k() {
    for k in [2usize, 3, 4, 7, 50, 501] {
        let p = softmax(&vec![0.25; k]).unwrap();
        for label in [0, k - 1] {
            assert!((cross_entropy(&p, label).unwrap() - (k as f64).ln()).abs() < 1e-12);
        }
    }
}

#[test]
fn matmul_matches_triple_loop() {
    let mut rng = Rng::new(4);
    for (n, k, m) in [(1, 1, 1), (3, 5, 2), (17, 9, 13), (40, 33, 8)] {
        let a = Matrix::from_vec(n, k, (0..n * k).map(|_| rng.normal()).collect()).unwrap();
        let b = Matrix::from_vec(k, m, (0..k * m).map(|_| rng.normal()).collect()).unwrap();
        let ours = a.matmul(&b).unwrap();
        let want = triple_loop(&rows(&a), &rows(&b));
        for i in 0..n {
            for j in 0..m {
                assert!((ours.get(i, j) - want[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn symmetric_eigen_matches_classical_jacobi() {
    let x = spiked(60, 9, 12);
    let c = covariance(&rows(&x));
    let (want_vals, want_vecs) = classical_jacobi(&c);
    let (vals, vecs) = symmetric_eigen(&Matrix::from_rows(&c).unwrap()).unwrap();
    for (a, b) in vals.iter().zip(&want_vals) {
        assert!((a - b).abs() < 1e-9 * want_vals[0], "{a} vs {b}");
    }
    for i in 0..9 {
        let ours = vecs.row(i);
        let dot: f64 = (0..9).map(|r| ours[r] * want_vecs[r][i]).sum();
        assert!(dot.abs() > 1.0 - 1e-8, "vector {i}: |dot| = {}", dot.abs());
    }
}

#[test]
fn pca_subspace_matches_oracle() {
    for (n, d, k, seed) in [(80, 10, 3, 1), (200, 25, 8, 2), (30, 12, 5, 3)] {
        let x = spiked(n, d, seed);
        let model = pca_fit(&x, k).unwrap();
        let (_, vecs) = classical_jacobi(&covariance(&rows(&x)));
        let oracle: Vec<Vec<f64>> = (0..k).map(|i| (0..d).map(|r| vecs[r][i]).collect()).collect();
        let agreement = subspace_agreement(&rows(&model.components), &oracle);
        assert!(agreement >= 1.0 - 1e-8, "n={n} d={d} k={k}: {agreement}");
    }
}

#[test]
fn adam_matches_scalar_recurrence() {
    let cfg = AdamConfig::default();
    let mut rng = Rng::new(6);
    let start: Vec<f64> = (0..7).map(|_| rng.normal()).collect();
    let grads: Vec<Vec<f64>> = (0..25).map(|_| (0..7).map(|_| rng.normal() * 3.0).collect()).collect();
    let mut params = start.clone();
    let mut state = OptimizerState::new(&params);
    for g in &grads {
        adam_step(&mut params, g, &mut state, 0.01, &cfg).unwrap();
    }
    for i in 0..7 {
        let gi: Vec<f64> = grads.iter().map(|g| g[i]).collect();
        let want = adam_scalar(start[i], &gi, 0.01, cfg.beta1, cfg.beta2, cfg.epsilon);
        assert!((params[i] - want).abs() < 1e-12, "{} vs {want}", params[i]);
    }
}

#[test]
fn pca_on_random_forty_by_ten() {
    let mut rng = Rng::new(40);
    let x = Matrix::from_vec(40, 10, (0..400).map(|_| rng.normal()).collect()).unwrap();
    let model = pca_fit(&x, 3).unwrap();
    let (_, vecs) = classical_jacobi(&covariance(&rows(&x)));
    for i in 0..3 {
        let dot: f64 = (0..10).map(|r| model.components.get(i, r) * vecs[r][i]).sum();
        assert!(dot.abs() >= 1.0 - 1e-8, "component {i}: {}", dot.abs());
    }
}
