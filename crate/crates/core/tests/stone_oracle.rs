mod common;

use magmaspace::enumerate::enumerate_corpus;
use magmaspace::magma::{sample_magmas, Magma};
use magmaspace::par::Execution;
use magmaspace::stone::{
    build_feature_matrix_with, stone_pairing_exact, stone_pairing_mc, FeatureMatrix, PairingMode,
    RowMode, StoneConfig,
};
use rand::SeedableRng;

#[test]
fn exact_counts_match_brute_force() {
    let corpus = enumerate_corpus(3).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    for size in 1..=3 {
        let magmas: Vec<Magma> = (0..6)
            .map(|_| Magma::random(size, &mut rng).unwrap())
            .collect();
        let f = build_feature_matrix_with(
            corpus.equations(),
            &magmas,
            &StoneConfig::default(),
            Execution::Parallel,
        )
        .unwrap();
        let fr = f.fractions().unwrap();
        for (k, e) in corpus.equations().iter().enumerate() {
            assert_eq!(fr.modes[k], RowMode::Exact);
            assert_eq!(
                fr.denominators[k] as u64,
                (size as u64).pow(e.num_vars() as u32)
            );
            for (l, m) in magmas.iter().enumerate() {
                let want = common::naive_count(e, m);
                assert_eq!(
                    fr.numerators[k * magmas.len() + l] as u64,
                    want,
                    "{e} in {:?}",
                    m.table()
                );
                assert_eq!(f.get(k, l), want as f64 / fr.denominators[k] as f64);
            }
        }
    }
}

#[test]
fn monte_carlo_stays_near_the_exact_value() {
    let corpus = enumerate_corpus(3).unwrap();
    let sample = sample_magmas(8, 4, 5, true).unwrap();
    let samples = 1 << 14;
    // Binomial standard error is at most 1/(2·√samples); allow six of them.
    let tol = 6.0 * 0.5 / (samples as f64).sqrt();
    for e in corpus.equations().iter().step_by(7) {
        for m in &sample.magmas {
            let exact = stone_pairing_exact(e, m, 1 << 22).unwrap().value();
            let mc = stone_pairing_mc(e, m, samples, 3).unwrap();
            assert_eq!(mc.denominator, samples as u64);
            assert!(
                (mc.value() - exact).abs() <= tol,
                "{e}: {} vs {exact}",
                mc.value()
            );
        }
    }
}

#[test]
fn parallel_and_sequential_matrices_are_identical() {
    let corpus = enumerate_corpus(2).unwrap();
    let sample = sample_magmas(30, 3, 8, true).unwrap();
    for mode in [PairingMode::Auto, PairingMode::MonteCarlo] {
        let config = StoneConfig {
            mode,
            mc_samples: 512,
            mc_seed: 4,
            ..StoneConfig::default()
        };
        let a = build_feature_matrix_with(
            corpus.equations(),
            &sample.magmas,
            &config,
            Execution::Sequential,
        )
        .unwrap();
        let b = build_feature_matrix_with(
            corpus.equations(),
            &sample.magmas,
            &config,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn binary_artifacts_round_trip() {
    let corpus = enumerate_corpus(2).unwrap();
    let sample = sample_magmas(12, 3, 2, true).unwrap();
    let f = build_feature_matrix_with(
        corpus.equations(),
        &sample.magmas,
        &StoneConfig::default(),
        Execution::Parallel,
    )
    .unwrap();
    let (mut bin, mut frac) = (Vec::new(), Vec::new());
    f.write_binary(&mut bin).unwrap();
    assert!(f.write_fractions(&mut frac).unwrap());
    assert_eq!(FeatureMatrix::read(&bin[..], Some(&frac[..])).unwrap(), f);
    let lossy = FeatureMatrix::read(&bin[..], None::<&[u8]>).unwrap();
    assert_eq!((lossy.rows(), lossy.cols()), (f.rows(), f.cols()));
    for (a, b) in lossy.values().iter().zip(f.values()) {
        assert!((a - b).abs() <= 1e-7);
    }
    assert!(FeatureMatrix::read(&bin[..bin.len() - 1], None::<&[u8]>).is_err());
    assert!(FeatureMatrix::read(&bin[..], Some(&frac[..frac.len() - 4])).is_err());
}

#[test]
fn conjugate_rows_share_a_spectrum_on_opposite_closed_samples() {
    let corpus = enumerate_corpus(3).unwrap();
    let sample = sample_magmas(40, 3, 6, true).unwrap();
    assert!(sample.is_opposite_closed());
    let f = build_feature_matrix_with(
        corpus.equations(),
        &sample.magmas,
        &StoneConfig::default(),
        Execution::Parallel,
    )
    .unwrap();
    let perm = sample.opposite_permutation().unwrap();
    for k in 0..corpus.len() {
        let c = corpus.conjugate_index(k).unwrap();
        assert_eq!(
            f.spectrum(k).unwrap(),
            f.spectrum(c).unwrap(),
            "{}",
            corpus.get(k).unwrap()
        );
        for (l, &o) in perm.iter().enumerate() {
            assert_eq!(f.get(k, l), f.get(c, o));
        }
    }
}
