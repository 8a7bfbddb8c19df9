//! Synthetic inputs for the benchmarks.

use metaemb::eval::{AnalogyCategory, AnalogyDataset, AnalogyQuestion};
use metaemb::{DenseMatrix, EmbeddingSet};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn word(i: usize) -> String {
    format!("w{i:06}")
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("shape matches data")
}

/// `dims.len()` sets over `words` shared words, with `oov_every`-th word
/// missing from every set after the first (0 keeps all).
pub fn sets(words: usize, dims: &[usize], oov_every: usize, seed: u64) -> Vec<EmbeddingSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dims.iter()
        .enumerate()
        .map(|(s, &dim)| {
            let vocab: Vec<String> = (0..words)
                .filter(|i| s == 0 || oov_every == 0 || i % oov_every != s % oov_every)
                .map(word)
                .collect();
            let m = random_matrix(&mut rng, vocab.len(), dim);
            EmbeddingSet::new(format!("s{s}"), vocab, m).expect("valid set")
        })
        .collect()
}

pub fn analogy_questions(vocab: usize, count: usize, seed: u64) -> AnalogyDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let questions = (0..count)
        .map(|i| {
            let q: Vec<String> = index::sample(&mut rng, vocab, 4)
                .into_iter()
                .map(word)
                .collect();
            AnalogyQuestion {
                a: q[0].clone(),
                b: q[1].clone(),
                c: q[2].clone(),
                d: q[3].clone(),
                category: if i % 2 == 0 {
                    AnalogyCategory::Semantic
                } else {
                    AnalogyCategory::Syntactic
                },
            }
        })
        .collect();
    AnalogyDataset {
        name: "synthetic".into(),
        questions,
    }
}
