//! Intrinsic evaluation: word similarity (Spearman ρ) and word analogy
//! (3CosAdd). Items touching an unknown word are skipped and counted.

mod analogy;
mod similarity;

use serde::Serialize;

pub use analogy::{
    answer_analogy, eval_analogy, load_analogy, parse_analogy, AnalogyCategory, AnalogyDataset,
    AnalogyQuestion, AnalogyReport, AnalogySolver,
};
pub use similarity::{
    eval_similarity, load_similarity, parse_similarity, spearman, SimilarityDataset,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    /// Spearman ρ × 100 for similarity, accuracy in percent for analogy.
    pub score: f64,
    pub oov_count: usize,
    pub evaluated_count: usize,
}

impl EvalResult {
    pub fn total(&self) -> usize {
        self.oov_count + self.evaluated_count
    }
}
