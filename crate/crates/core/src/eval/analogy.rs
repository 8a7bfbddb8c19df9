use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::EvalResult;
use crate::embedding_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, normalize_rows, DenseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalogyCategory {
    Semantic,
    Syntactic,
}

impl AnalogyCategory {
    /// Sections of the Google analogy set named `gram*` are syntactic.
    pub fn of_section(section: &str) -> Self {
        if section.starts_with("gram") {
            AnalogyCategory::Syntactic
        } else {
            AnalogyCategory::Semantic
        }
    }
}

/// "a is to b as c is to d".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalogyQuestion {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
    pub category: AnalogyCategory,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalogyDataset {
    pub name: String,
    pub questions: Vec<AnalogyQuestion>,
}

impl AnalogyDataset {
    pub fn count(&self, category: AnalogyCategory) -> usize {
        self.questions
            .iter()
            .filter(|q| q.category == category)
            .count()
    }

    pub fn lowercased(&self) -> Self {
        AnalogyDataset {
            name: self.name.clone(),
            questions: self
                .questions
                .iter()
                .map(|q| AnalogyQuestion {
                    a: q.a.to_lowercase(),
                    b: q.b.to_lowercase(),
                    c: q.c.to_lowercase(),
                    d: q.d.to_lowercase(),
                    category: q.category,
                })
                .collect(),
        }
    }
}

/// Reads the `: section` / four-words-per-line analogy format.
pub fn load_analogy(path: impl AsRef<Path>) -> Result<AnalogyDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_analogy(&text, &name, path)
}

pub fn parse_analogy(text: &str, name: &str, path: &Path) -> Result<AnalogyDataset> {
    let mut category = None;
    let mut questions = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(section) = line.strip_prefix(':') {
            category = Some(AnalogyCategory::of_section(section.trim()));
            continue;
        }
        let Some(category) = category else {
            return Err(parse_err("question before any `: section` header".into()));
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        let [a, b, c, d] = words.as_slice() else {
            return Err(parse_err(format!(
                "expected four words, got {}",
                words.len()
            )));
        };
        questions.push(AnalogyQuestion {
            a: a.to_string(),
            b: b.to_string(),
            c: c.to_string(),
            d: d.to_string(),
            category,
        });
    }
    if questions.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(AnalogyDataset {
        name: name.to_owned(),
        questions,
    })
}

/// 3CosAdd over row-normalized vectors.
#[derive(Debug)]
pub struct AnalogySolver<'a> {
    emb: &'a EmbeddingSet,
    unit: DenseMatrix,
}

impl<'a> AnalogySolver<'a> {
    pub fn new(emb: &'a EmbeddingSet) -> Self {
        AnalogySolver {
            emb,
            unit: normalize_rows(emb.matrix()),
        }
    }

    fn index(&self, word: &str) -> Result<usize> {
        self.emb
            .index_of(word)
            .ok_or_else(|| Error::OovQuery(word.to_owned()))
    }

    /// The word maximizing `cos(x, b − a + c)` over the vocabulary minus
    /// `{a, b, c}`; exact ties go to the lexicographically smallest word.
    /// `None` when no candidate is left.
    pub fn answer(&self, a: &str, b: &str, c: &str) -> Result<Option<&'a str>> {
        let (ia, ib, ic) = (self.index(a)?, self.index(b)?, self.index(c)?);
        let query: Vec<f64> = self
            .unit
            .row(ib)
            .iter()
            .zip(self.unit.row(ia))
            .zip(self.unit.row(ic))
            .map(|((b, a), c)| b - a + c)
            .collect();
        let words = self.emb.words();
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.unit.iter_rows().enumerate() {
            if i == ia || i == ib || i == ic {
                continue;
            }
            let score = dot(row, &query);
            best = match best {
                Some((j, s)) if s > score || (s == score && words[j] <= words[i]) => Some((j, s)),
                _ => Some((i, score)),
            };
        }
        Ok(best.map(|(i, _)| words[i].as_str()))
    }
}

/// One-off analogy query; prefer [`AnalogySolver`] for many questions.
pub fn answer_analogy(emb: &EmbeddingSet, a: &str, b: &str, c: &str) -> Result<String> {
    AnalogySolver::new(emb)
        .answer(a, b, c)?
        .map(str::to_owned)
        .ok_or_else(|| Error::InvalidConfig("vocabulary has no word besides the query".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalogyReport {
    pub semantic: EvalResult,
    pub syntactic: EvalResult,
    pub total: EvalResult,
}

/// Accuracy (percent) per category. A question is skipped when any of its
/// four words is unknown; a category with nothing to evaluate scores 0.
pub fn eval_analogy(emb: &EmbeddingSet, ds: &AnalogyDataset) -> AnalogyReport {
    let solver = AnalogySolver::new(emb);
    let outcomes: Vec<Option<(AnalogyCategory, bool)>> = ds
        .questions
        .par_iter()
        .map(|q| {
            if !emb.contains(&q.d) {
                return None;
            }
            let guess = solver.answer(&q.a, &q.b, &q.c).ok()?;
            Some((q.category, guess == Some(q.d.as_str())))
        })
        .collect();

    let tally = |want: Option<AnalogyCategory>| {
        let mut correct = 0usize;
        let mut evaluated = 0usize;
        let mut oov = 0usize;
        for (q, outcome) in ds.questions.iter().zip(&outcomes) {
            if want.is_some_and(|c| c != q.category) {
                continue;
            }
            match outcome {
                Some((_, ok)) => {
                    evaluated += 1;
                    correct += usize::from(*ok);
                }
                None => oov += 1,
            }
        }
        EvalResult {
            score: if evaluated == 0 {
                0.0
            } else {
                100.0 * correct as f64 / evaluated as f64
            },
            oov_count: oov,
            evaluated_count: evaluated,
        }
    };
    AnalogyReport {
        semantic: tally(Some(AnalogyCategory::Semantic)),
        syntactic: tally(Some(AnalogyCategory::Syntactic)),
        total: tally(None),
    }
}
