use std::fs;
use std::path::Path;

use super::EvalResult;
use crate::embedding_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::cosine;

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

/// Reads `word1 word2 score` records separated by whitespace, tabs or
/// commas. Extra columns are ignored, `#` starts a comment, and a first line
/// whose score is not a number is taken as a header.
pub fn load_similarity(path: impl AsRef<Path>) -> Result<SimilarityDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_similarity(&text, &name, path)
}

pub fn parse_similarity(text: &str, name: &str, path: &Path) -> Result<SimilarityDataset> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        if fields.len() < 3 {
            return Err(parse_err(format!(
                "expected `word1 word2 score`, got `{line}`"
            )));
        }
        match fields[2].parse::<f64>() {
            Ok(score) if score.is_finite() => {
                pairs.push((fields[0].to_owned(), fields[1].to_owned(), score))
            }
            _ if pairs.is_empty() && lineno == 1 => continue,
            _ => return Err(parse_err(format!("`{}` is not a finite score", fields[2]))),
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(SimilarityDataset {
        name: name.to_owned(),
        pairs,
    })
}

/// Average (fractional) ranks, 1-based.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPairs {
            evaluated: xs.len(),
            oov: 0,
        });
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman ρ × 100 between gold scores and cosine similarities over the
/// pairs whose words are both known.
pub fn eval_similarity(emb: &EmbeddingSet, ds: &SimilarityDataset) -> Result<EvalResult> {
    let mut gold = Vec::with_capacity(ds.pairs.len());
    let mut model = Vec::with_capacity(ds.pairs.len());
    for (a, b, score) in &ds.pairs {
        if let (Some(u), Some(v)) = (emb.get(a), emb.get(b)) {
            gold.push(*score);
            model.push(cosine(u, v));
        }
    }
    let oov = ds.pairs.len() - gold.len();
    if gold.len() < 2 {
        return Err(Error::TooFewPairs {
            evaluated: gold.len(),
            oov,
        });
    }
    Ok(EvalResult {
        score: 100.0 * spearman(&model, &gold)?,
        oov_count: oov,
        evaluated_count: gold.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_reversed() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn matches_rank_difference_formula() {
        let formula = |d2: f64, n: f64| 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        // d = (-1, 1, -1, 1, 0)
        let rho = spearman(&xs, &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((rho - formula(4.0, 5.0)).abs() < 1e-12);
        assert!((rho - 0.8).abs() < 1e-12);
        // d = (-2, 1, 1, 0, 0)
        let rho = spearman(&xs, &[3.0, 1.0, 2.0, 4.0, 5.0]).unwrap();
        assert!((rho - 0.7).abs() < 1e-12);
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(ranks(&[5.0, 1.0, 5.0, 3.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            spearman(&[1.0], &[1.0]),
            Err(Error::TooFewPairs { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::ZeroVariance)
        ));
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn parses_headers_and_separators() {
        let ds = parse_similarity(
            "Word 1,Word 2,Human (mean)\nlove,sex,6.77\ntiger\tcat\t7.35\n# c\nbook paper 7.46 extra\n",
            "ws",
            Path::new("ws.csv"),
        )
        .unwrap();
        assert_eq!(ds.pairs.len(), 3);
        assert_eq!(ds.pairs[1], ("tiger".into(), "cat".into(), 7.35));
        assert!(parse_similarity("a b 1\nc d x\n", "x", Path::new("x")).is_err());
    }

    fn toy_space() -> EmbeddingSet {
        EmbeddingSet::new(
            "toy",
            vec!["a".into(), "b".into()],
            DenseMatrix::identity(2),
        )
        .unwrap()
    }

    #[test]
    fn perfect_agreement_on_two_word_space() {
        let ds = SimilarityDataset {
            name: "toy".into(),
            pairs: vec![
                ("a".into(), "b".into(), 2.0),
                ("a".into(), "a".into(), 9.0),
                ("b".into(), "b".into(), 9.0),
                ("a".into(), "zzz".into(), 1.0),
            ],
        };
        let r = eval_similarity(&toy_space(), &ds).unwrap();
        assert_eq!((r.oov_count, r.evaluated_count), (1, 3));
        assert!((r.score - 100.0).abs() < 1e-9);
    }

    #[test]
    fn no_coverage_is_an_error() {
        let ds = SimilarityDataset {
            name: "x".into(),
            pairs: vec![("p".into(), "q".into(), 1.0), ("r".into(), "s".into(), 2.0)],
        };
        match eval_similarity(&toy_space(), &ds) {
            Err(Error::TooFewPairs {
                evaluated: 0,
                oov: 2,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_transform(
            xs in prop::collection::vec(-100.0f64..100.0, 3..40),
            seed in 0u64..1000,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate()
                .map(|(i, x)| x * ((i as u64 * 7 + seed) % 5) as f64 - i as f64)
                .collect();
            let transformed: Vec<f64> = xs.iter().map(|x| (x / 50.0).exp() * 3.0 + 1.0).collect();
            match (spearman(&xs, &ys), spearman(&transformed, &ys)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "inconsistent result"),
            }
        }
    }
}
