mod common;

use magmaspace::enumerate::enumerate_corpus;
use magmaspace::magma::sample_magmas;
use magmaspace::par::Execution;
use magmaspace::pca::{pca_embed, pca_embed_with, Centering, PcaConfig};
use magmaspace::pipeline::component_parity;
use magmaspace::stone::{build_feature_matrix, FeatureMatrix, StoneConfig};
use nalgebra::{DMatrix, SymmetricEigen};

/// Column-centered covariance `(1/rows)·XᵀX` and its eigen-decomposition,
/// eigenvalues descending.
fn oracle(f: &FeatureMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (rows, cols) = (f.rows(), f.cols());
    let mut x = DMatrix::from_row_slice(rows, cols, f.values());
    for c in 0..cols {
        let mu = x.column(c).sum() / rows as f64;
        x.column_mut(c).add_scalar_mut(-mu);
    }
    let cov = x.transpose() * &x / rows as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn known_spectrum_is_recovered_on_both_gram_sides() {
    for (rows, cols) in [(300, 40), (30, 120)] {
        let f = FeatureMatrix::from_values(
            rows,
            cols,
            common::synthetic_matrix(rows, cols, &[9.0, 4.0, 1.0], 11),
        );
        let emb = pca_embed(&f, 3).unwrap();
        for (got, want) in emb.eigenvalues.iter().zip([9.0, 4.0, 1.0]) {
            assert!(
                (got - want).abs() <= 1e-8 * want,
                "{rows}x{cols}: {got} vs {want}"
            );
        }
        let (values, vectors) = oracle(&f);
        for i in 0..3 {
            assert!((emb.eigenvalues[i] - values[i]).abs() <= 1e-8 * values[i]);
            assert!((dot(&emb.components[i], &vectors[i]).abs() - 1.0).abs() < 1e-8);
            for j in 0..3 {
                let d = dot(&emb.components[i], &emb.components[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
        assert!(emb
            .explained_variance_ratio
            .windows(2)
            .all(|w| w[0] >= w[1]));
        assert!(emb.explained_variance_ratio.iter().sum::<f64>() <= 1.0 + 1e-12);
        assert!((emb.explained_variance_ratio[..3].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn sequential_and_parallel_solvers_agree_bitwise() {
    let f = FeatureMatrix::from_values(
        200,
        50,
        common::synthetic_matrix(200, 50, &[5.0, 3.0, 2.0, 1.0], 3),
    );
    let config = PcaConfig::default();
    let a = pca_embed_with(&f, &config, Execution::Sequential).unwrap();
    let b = pca_embed_with(&f, &config, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn column_permutation_leaves_the_embedding_unchanged() {
    let (rows, cols) = (120, 30);
    let f = FeatureMatrix::from_values(
        rows,
        cols,
        common::synthetic_matrix(rows, cols, &[6.0, 3.0, 1.5, 0.5], 5),
    );
    let perm: Vec<usize> = (0..cols).map(|c| (c * 7 + 3) % cols).collect();
    let g = f.select_columns(&perm);
    let (a, b) = (pca_embed(&f, 3).unwrap(), pca_embed(&g, 3).unwrap());
    for axis in 0..3 {
        let (xa, xb) = (a.axis(axis), b.axis(axis));
        let sign = if dot(&xa, &xb) < 0.0 { -1.0 } else { 1.0 };
        for (p, q) in xa.iter().zip(&xb) {
            assert!((p - sign * q).abs() < 1e-8);
        }
    }
}

#[test]
fn principal_subspace_minimizes_reconstruction_error() {
    let (rows, cols) = (150, 25);
    let f = FeatureMatrix::from_values(
        rows,
        cols,
        common::synthetic_matrix(rows, cols, &[4.0, 2.5, 1.0, 0.7, 0.2], 9),
    );
    let emb = pca_embed(&f, 3).unwrap();
    let (_, vectors) = oracle(&f);
    let mut x: Vec<Vec<f64>> = (0..rows).map(|r| f.row(r).unwrap().to_vec()).collect();
    for c in 0..cols {
        let mu = x.iter().map(|row| row[c]).sum::<f64>() / rows as f64;
        x.iter_mut().for_each(|row| row[c] -= mu);
    }
    let residual = |basis: &[Vec<f64>]| -> f64 {
        x.iter()
            .map(|row| {
                let norm2 = dot(row, row);
                norm2 - basis.iter().map(|b| dot(row, b).powi(2)).sum::<f64>()
            })
            .sum()
    };
    let best = residual(&emb.components);
    // Any other orthonormal 3-frame does no better: mix in lower components.
    for t in [0.1f64, 0.5, 1.0] {
        let (c, s) = (t.cos(), t.sin());
        let rotated: Vec<f64> = vectors[2]
            .iter()
            .zip(&vectors[3])
            .map(|(a, b)| c * a + s * b)
            .collect();
        let other = vec![vectors[0].clone(), vectors[1].clone(), rotated];
        assert!(residual(&other) >= best - 1e-9);
    }
    let coords_energy: f64 = emb.coords.iter().map(|v| v * v).sum::<f64>() / rows as f64;
    assert!((coords_energy - emb.eigenvalues[..3].iter().sum::<f64>()).abs() < 1e-9);
}

#[test]
fn components_are_even_or_odd_under_conjugation() {
    let corpus = enumerate_corpus(3).unwrap();
    let sample = sample_magmas(60, 3, 4, true).unwrap();
    let f = build_feature_matrix(&corpus, &sample, &StoneConfig::default()).unwrap();
    let emb = pca_embed_with(
        &f,
        &PcaConfig {
            k: 6,
            ..PcaConfig::default()
        },
        Execution::Parallel,
    )
    .unwrap();
    for axis in 0..6 {
        assert_ne!(
            component_parity(&emb.axis(axis), &corpus),
            "mixed",
            "axis {axis}"
        );
    }
}

#[test]
fn row_centering_is_available() {
    let f = FeatureMatrix::from_values(50, 20, common::synthetic_matrix(50, 20, &[3.0, 1.0], 1));
    let emb = pca_embed_with(
        &f,
        &PcaConfig {
            k: 2,
            centering: Centering::Rows,
            ..PcaConfig::default()
        },
        Execution::Sequential,
    )
    .unwrap();
    assert_eq!(emb.center.len(), 50);
    assert!(emb
        .explained_variance_ratio
        .windows(2)
        .all(|w| w[0] >= w[1]));
}
