//! Sequential versus rayon-parallel scoring and topical-word extraction on
//! a synthetic corpus.

use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topiceval::corpus::{KeywordSet, KeywordSource, ModelArtifact, Vocabulary};
use topiceval::lexres::EmbeddingTable;
use topiceval::scores::{score_all, Metric, Resources};
use topiceval::topical::extract_topical_words_with;
use topiceval::Parallelism;

const DOCS: usize = 400;
const TOPICS: usize = 50;
const VOCAB: usize = 3000;
const DIM: usize = 100;

fn artifact(rng: &mut ChaCha8Rng) -> ModelArtifact {
    let words: Vec<String> = (0..VOCAB).map(|i| format!("w{i}")).collect();
    let mut phi = Array2::from_shape_fn((TOPICS, VOCAB), |_| rng.gen::<f64>().powi(4));
    for mut row in phi.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    let mut theta = Array2::from_shape_fn((DOCS, TOPICS), |_| rng.gen::<f64>().powi(3));
    for mut row in theta.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    let ids = (0..DOCS).map(|d| format!("d{d}")).collect();
    ModelArtifact::new(Vocabulary::new(words).unwrap(), phi, theta, ids).unwrap()
}

fn bench(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let art = artifact(&mut rng);
    let table = EmbeddingTable::from_pairs(
        DIM,
        art.vocabulary.words().iter().map(|w| (w.clone(), (0..DIM).map(|_| rng.gen_range(-1.0f32..1.0)).collect())),
    )
    .unwrap();
    let topical = extract_topical_words_with(&art, 10, Parallelism::Sequential).unwrap();
    let keywords: BTreeMap<String, KeywordSet> = art
        .doc_ids
        .iter()
        .map(|id| {
            let words: Vec<String> = (0..5).map(|_| format!("w{}", rng.gen_range(0..VOCAB))).collect();
            (id.clone(), KeywordSet::new(id.clone(), words, KeywordSource::LlmPlain).unwrap())
        })
        .collect();
    let resources = Resources { synsets: None, embeddings: Some(&table) };
    let metrics = [Metric::Overlap, Metric::Oa, Metric::Ot];

    let modes = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Auto)];
    let mut group = c.benchmark_group("score_all");
    for (name, par) in modes {
        group.bench_with_input(BenchmarkId::from_parameter(name), &par, |b, &par| {
            b.iter(|| score_all(&topical, &keywords, &metrics, &resources, par).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("extract_topical_words");
    for (name, par) in modes {
        group.bench_with_input(BenchmarkId::from_parameter(name), &par, |b, &par| {
            b.iter(|| extract_topical_words_with(&art, 10, par).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
