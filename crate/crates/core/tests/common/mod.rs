#![allow(dead_code)]

use metaemb::{DenseMatrix, EmbeddingSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

pub fn set_from(name: &str, words: &[&str], m: DenseMatrix) -> EmbeddingSet {
    EmbeddingSet::new(name, words.iter().map(|w| w.to_string()).collect(), m).unwrap()
}

pub fn random_set(rng: &mut ChaCha8Rng, name: &str, words: &[&str], dim: usize) -> EmbeddingSet {
    let m = random_matrix(rng, words.len(), dim, 1.0);
    set_from(name, words, m)
}

pub fn word_list(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i:04}")).collect()
}
