//! Extending embedding sets to the union vocabulary.
//!
//! MutualLearning learns a linear map from every other set into the target
//! set on their shared words; a missing word then gets the element-wise mean
//! of its projections from the sets that know it. RND and AVG are the
//! random-vector and mean-vector baselines.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::optimizer::{adagrad_step, init_uniform, run_epochs, TrainConfig};
pub use crate::projection::{ProjectionMap, ProjectionProblem};
use crate::vocab::{align, VocabAlignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovFillStrategy {
    /// Seeded uniform random vector.
    Rnd,
    /// Mean of the set's known vectors.
    Avg,
    /// MutualLearning: mean of the projections from sets that know the word.
    Ml,
}

impl fmt::Display for OovFillStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OovFillStrategy::Rnd => "rnd",
            OovFillStrategy::Avg => "avg",
            OovFillStrategy::Ml => "ml",
        })
    }
}

impl FromStr for OovFillStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rnd" | "random" => Ok(OovFillStrategy::Rnd),
            "avg" | "average" => Ok(OovFillStrategy::Avg),
            "ml" | "mutual-learning" => Ok(OovFillStrategy::Ml),
            other => Err(Error::InvalidConfig(format!(
                "unknown OOV strategy `{other}` (expected rnd, avg or ml)"
            ))),
        }
    }
}

/// Learns `M` with `target ≈ M · source` on the words both sets know.
pub fn train_projection(
    source: &EmbeddingSet,
    target: &EmbeddingSet,
    config: &TrainConfig,
) -> Result<ProjectionMap> {
    let problem = ProjectionProblem::new(source, target, config.l2_weight)?;
    if problem.len() < source.dim() {
        warn!(
            "projection {} -> {}: only {} shared words for {} source dimensions",
            source.name(),
            target.name(),
            problem.len(),
            source.dim()
        );
    }
    let (rows, cols) = (target.dim(), source.dim());
    let mut m = DenseMatrix::from_vec_unchecked(
        rows,
        cols,
        init_uniform(&mut config.init_rng(), rows * cols),
    );
    let mut grad = DenseMatrix::zeros(rows, cols);
    let mut accum = vec![0.0; rows * cols];
    let (lr, eps) = (config.learning_rate, config.adagrad_epsilon);
    let report = run_epochs(problem.len(), config, |batch| {
        let loss = problem.gradient(&m, batch, &mut grad);
        adagrad_step(m.as_mut_slice(), grad.as_slice(), &mut accum, lr, eps);
        Ok(loss)
    })?;
    Ok(ProjectionMap {
        source_set: source.name().to_owned(),
        target_set: target.name().to_owned(),
        m,
        train_loss: report.final_loss,
    })
}

/// Extends `target` to `alignment`'s union vocabulary (union order). Rows of
/// words the target knows are copied unchanged.
pub fn fill_oov(
    target: &EmbeddingSet,
    others: &[EmbeddingSet],
    projections: &[ProjectionMap],
    alignment: &VocabAlignment,
    strategy: OovFillStrategy,
    seed: u64,
) -> Result<EmbeddingSet> {
    let union = alignment.union();
    if let Some(w) = target
        .words()
        .iter()
        .find(|w| alignment.union_position(w).is_none())
    {
        return Err(Error::InvalidConfig(format!(
            "word `{w}` of `{}` is not in the aligned vocabulary",
            target.name()
        )));
    }

    let maps: Vec<&ProjectionMap> = if strategy == OovFillStrategy::Ml {
        others
            .iter()
            .map(|o| {
                let map = projections
                    .iter()
                    .find(|p| p.source_set == o.name() && p.target_set == target.name())
                    .ok_or_else(|| Error::MissingProjection {
                        source_set: o.name().to_owned(),
                        target_set: target.name().to_owned(),
                    })?;
                if map.source_dim() != o.dim() || map.target_dim() != target.dim() {
                    return Err(Error::Shape(format!(
                        "projection {} -> {} is {}x{}, expected {}x{}",
                        o.name(),
                        target.name(),
                        map.target_dim(),
                        map.source_dim(),
                        target.dim(),
                        o.dim()
                    )));
                }
                Ok(map)
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let dim = target.dim();
    let average = (strategy == OovFillStrategy::Avg).then(|| {
        let mut mean = vec![0.0; dim];
        for row in target.matrix().iter_rows() {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= target.len() as f64);
        mean
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut out = DenseMatrix::zeros(union.len(), dim);
    for (u, word) in union.iter().enumerate() {
        let dst = out.row_mut(u);
        if let Some(v) = target.get(word) {
            dst.copy_from_slice(v);
            continue;
        }
        match strategy {
            OovFillStrategy::Rnd => dst.copy_from_slice(&init_uniform(&mut rng, dim)),
            OovFillStrategy::Avg => dst.copy_from_slice(average.as_deref().unwrap_or_default()),
            OovFillStrategy::Ml => {
                let mut count = 0usize;
                for (other, map) in others.iter().zip(&maps) {
                    if let Some(v) = other.get(word) {
                        for (d, p) in dst.iter_mut().zip(map.m.mul_vec(v)) {
                            *d += p;
                        }
                        count += 1;
                    }
                }
                if count == 0 {
                    return Err(Error::UncoveredWord(word.clone()));
                }
                dst.iter_mut().for_each(|d| *d /= count as f64);
            }
        }
    }
    EmbeddingSet::new(target.name(), union.to_vec(), out)
}

/// Trains the projections from every other set into `target`.
pub fn train_projections_into(
    target: &EmbeddingSet,
    sources: &[EmbeddingSet],
    config: &TrainConfig,
) -> Result<Vec<ProjectionMap>> {
    sources
        .par_iter()
        .filter(|s| s.name() != target.name())
        .map(|s| train_projection(s, target, config))
        .collect()
}

/// Extends every set to the union vocabulary. With [`OovFillStrategy::Ml`]
/// all `c·(c−1)` pairwise projections are trained first.
pub fn extend_all(
    sets: &[EmbeddingSet],
    config: &TrainConfig,
    strategy: OovFillStrategy,
) -> Result<Vec<EmbeddingSet>> {
    Ok(extend_all_with_projections(sets, config, strategy)?.0)
}

/// [`extend_all`] that also hands back the trained projections.
pub fn extend_all_with_projections(
    sets: &[EmbeddingSet],
    config: &TrainConfig,
    strategy: OovFillStrategy,
) -> Result<(Vec<EmbeddingSet>, Vec<ProjectionMap>)> {
    config.validate()?;
    let alignment = align(sets)?;
    let projections: Vec<ProjectionMap> = if strategy == OovFillStrategy::Ml {
        let pairs: Vec<(usize, usize)> = (0..sets.len())
            .flat_map(|j| {
                (0..sets.len())
                    .filter(move |&i| i != j)
                    .map(move |i| (i, j))
            })
            .collect();
        pairs
            .par_iter()
            .map(|&(i, j)| train_projection(&sets[i], &sets[j], config))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let extended = sets
        .par_iter()
        .enumerate()
        .map(|(j, target)| {
            let others: Vec<EmbeddingSet> = sets
                .iter()
                .filter(|s| s.name() != target.name())
                .cloned()
                .collect();
            fill_oov(
                target,
                &others,
                &projections,
                &alignment,
                strategy,
                config.seed.wrapping_add(j as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((extended, projections))
}

/// Extends a meta-embedding set to the union of `sets`, treating the meta
/// space as the target and every individual set as a source.
pub fn extend_meta(
    meta: &EmbeddingSet,
    sets: &[EmbeddingSet],
    config: &TrainConfig,
    strategy: OovFillStrategy,
) -> Result<(EmbeddingSet, Vec<ProjectionMap>)> {
    config.validate()?;
    if sets.iter().any(|s| s.name() == meta.name()) {
        return Err(Error::InvalidConfig(format!(
            "meta-embedding name `{}` clashes with an input set",
            meta.name()
        )));
    }
    let alignment = align(sets)?;
    let projections = if strategy == OovFillStrategy::Ml {
        train_projections_into(meta, sets, config)?
    } else {
        Vec::new()
    };
    let filled = fill_oov(meta, sets, &projections, &alignment, strategy, config.seed)?;
    Ok((filled, projections))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(name: &str, rows: &[(&str, &[f64])]) -> EmbeddingSet {
        let words = rows.iter().map(|(w, _)| w.to_string()).collect();
        let m = DenseMatrix::from_rows(&rows.iter().map(|(_, v)| v.to_vec()).collect::<Vec<_>>())
            .unwrap();
        EmbeddingSet::new(name, words, m).unwrap()
    }

    fn map(source: &str, target: &str, rows: &[&[f64]]) -> ProjectionMap {
        ProjectionMap {
            source_set: source.into(),
            target_set: target.into(),
            m: DenseMatrix::from_rows(rows).unwrap(),
            train_loss: 0.0,
        }
    }

    fn fixture() -> (
        EmbeddingSet,
        Vec<EmbeddingSet>,
        Vec<ProjectionMap>,
        VocabAlignment,
    ) {
        let target = set("t", &[("a", &[1.0, 1.0]), ("b", &[3.0, -1.0])]);
        let s1 = set("s1", &[("a", &[1.0]), ("x", &[1.0]), ("y", &[2.0])]);
        let s2 = set("s2", &[("b", &[1.0]), ("y", &[1.0])]);
        let al = align(&[target.clone(), s1.clone(), s2.clone()]).unwrap();
        let maps = vec![
            map("s1", "t", &[&[1.0], &[0.0]]),
            map("s2", "t", &[&[0.0], &[1.0]]),
        ];
        (target, vec![s1, s2], maps, al)
    }

    #[test]
    fn ml_averages_available_projections() {
        let (target, others, maps, al) = fixture();
        let out = fill_oov(&target, &others, &maps, &al, OovFillStrategy::Ml, 0).unwrap();
        assert_eq!(out.words(), &["a", "b", "x", "y"]);
        assert_eq!(out.get("a").unwrap(), target.get("a").unwrap());
        // only s1 knows x
        assert_eq!(out.get("x").unwrap(), &[1.0, 0.0]);
        // s1 -> (2, 0), s2 -> (0, 1)
        assert_eq!(out.get("y").unwrap(), &[1.0, 0.5]);
    }

    #[test]
    fn ml_hand_average_of_unit_vectors() {
        let target = set("t", &[("k", &[0.0, 0.0])]);
        let s1 = set("s1", &[("w", &[1.0])]);
        let s2 = set("s2", &[("w", &[1.0])]);
        let al = align(&[target.clone(), s1.clone(), s2.clone()]).unwrap();
        let maps = vec![
            map("s1", "t", &[&[1.0], &[0.0]]),
            map("s2", "t", &[&[0.0], &[1.0]]),
        ];
        let out = fill_oov(&target, &[s1, s2], &maps, &al, OovFillStrategy::Ml, 0).unwrap();
        assert_eq!(out.get("w").unwrap(), &[0.5, 0.5]);
    }

    #[test]
    fn ml_identical_projections() {
        let target = set("t", &[("k", &[0.0, 0.0])]);
        let s1 = set("s1", &[("w", &[2.0])]);
        let s2 = set("s2", &[("w", &[4.0])]);
        let al = align(&[target.clone(), s1.clone(), s2.clone()]).unwrap();
        let maps = vec![
            map("s1", "t", &[&[1.0], &[-1.0]]),
            map("s2", "t", &[&[0.5], &[-0.5]]),
        ];
        let out = fill_oov(&target, &[s1, s2], &maps, &al, OovFillStrategy::Ml, 0).unwrap();
        assert_eq!(out.get("w").unwrap(), &[2.0, -2.0]);
    }

    #[test]
    fn ml_missing_projection() {
        let (target, others, maps, al) = fixture();
        let err = fill_oov(&target, &others, &maps[..1], &al, OovFillStrategy::Ml, 0).unwrap_err();
        assert!(matches!(err, Error::MissingProjection { .. }));
    }

    #[test]
    fn avg_and_rnd() {
        let (target, others, _, al) = fixture();
        let out = fill_oov(&target, &others, &[], &al, OovFillStrategy::Avg, 0).unwrap();
        assert_eq!(out.get("x").unwrap(), &[2.0, 0.0]);
        assert_eq!(out.get("y").unwrap(), &[2.0, 0.0]);

        let r1 = fill_oov(&target, &others, &[], &al, OovFillStrategy::Rnd, 7).unwrap();
        let r2 = fill_oov(&target, &others, &[], &al, OovFillStrategy::Rnd, 7).unwrap();
        assert_eq!(r1.matrix(), r2.matrix());
        assert!(r1.get("x").unwrap().iter().all(|v| v.abs() <= 0.05));
        assert_ne!(r1.get("x"), r1.get("y"));
    }

    #[test]
    fn uncovered_word() {
        let (target, others, maps, al) = fixture();
        // s2 alone cannot explain `x`
        let err = fill_oov(
            &target,
            &others[1..],
            &maps[1..],
            &al,
            OovFillStrategy::Ml,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UncoveredWord(w) if w == "x"));
    }

    #[test]
    fn strategy_names() {
        assert_eq!(
            "ML".parse::<OovFillStrategy>().unwrap(),
            OovFillStrategy::Ml
        );
        assert_eq!(OovFillStrategy::Avg.to_string(), "avg");
        assert!("zero".parse::<OovFillStrategy>().is_err());
    }

    #[test]
    fn empty_intersection_projection() {
        let a = set("a", &[("x", &[1.0])]);
        let b = set("b", &[("y", &[1.0])]);
        assert!(matches!(
            train_projection(&a, &b, &TrainConfig::mutual_learning()),
            Err(Error::EmptyVocabulary)
        ));
    }
}
