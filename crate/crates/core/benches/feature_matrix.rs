use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use magmaspace::enumerate::enumerate_corpus;
use magmaspace::magma::sample_magmas;
use magmaspace::par::Execution;
use magmaspace::pca::{pca_embed_with, PcaConfig};
use magmaspace::stone::{build_feature_matrix_with, StoneConfig};

fn feature_matrix(c: &mut Criterion) {
    let corpus = enumerate_corpus(4).unwrap();
    let sample = sample_magmas(200, 4, 0, true).unwrap();
    let config = StoneConfig::default();
    let mut group = c.benchmark_group("feature_matrix");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| {
                b.iter(|| {
                    build_feature_matrix_with(corpus.equations(), &sample.magmas, &config, exec)
                        .unwrap()
                })
            },
        );
    }
    group.finish();

    let f = build_feature_matrix_with(
        corpus.equations(),
        &sample.magmas,
        &config,
        Execution::Parallel,
    )
    .unwrap();
    let mut group = c.benchmark_group("pca");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| b.iter(|| pca_embed_with(&f, &PcaConfig::default(), exec).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, feature_matrix);
criterion_main!(benches);
