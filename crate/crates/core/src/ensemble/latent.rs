//! 1toN and 1toN+: a latent meta-embedding per word predicts every
//! individual embedding through one linear map per set.
//!
//! Objective over a batch `B`:
//!
//! ```text
//! Σ_{w∈B} Σ_s γ_s |M_s·w* − w_s|²  +  λ Σ_s ‖M_s‖²_F
//! ```
//!
//! In 1toN the vocabulary is the intersection and every `w_s` is fixed. In
//! 1toN+ the vocabulary is the union and `w_s` is a free parameter wherever
//! set `s` does not know `w`.

use rayon::prelude::*;

use super::{MetaEmbeddings, Method, ProjectionBundle, SetWeights, META_SPACE};
use crate::embedding_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::optimizer::{adagrad_step, init_uniform, run_epochs, TrainConfig, TrainReport};
use crate::projection::ProjectionMap;
use crate::vocab::VocabAlignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    /// Row of the set's own matrix.
    Known(usize),
    /// Row of the set's free (OOV) parameter matrix.
    Free(usize),
}

/// Trainable state of a latent model.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentParams {
    /// `n x d`, one row per vocabulary word.
    pub meta: DenseMatrix,
    /// Per set, `d_s x d`.
    pub projections: Vec<DenseMatrix>,
    /// Per set, `oov_s x d_s`; empty unless training over the union.
    pub free: Vec<DenseMatrix>,
}

impl LatentParams {
    fn zeros_like(other: &LatentParams) -> Self {
        let z = |m: &DenseMatrix| DenseMatrix::zeros(m.rows(), m.cols());
        LatentParams {
            meta: z(&other.meta),
            projections: other.projections.iter().map(z).collect(),
            free: other.free.iter().map(z).collect(),
        }
    }

    /// Every parameter, in the order meta, projections, free rows.
    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.meta
            .as_mut_slice()
            .iter_mut()
            .chain(
                self.projections
                    .iter_mut()
                    .flat_map(|m| m.as_mut_slice().iter_mut()),
            )
            .chain(
                self.free
                    .iter_mut()
                    .flat_map(|m| m.as_mut_slice().iter_mut()),
            )
    }
}

/// Gradient of the batch objective. Meta rows line up with the batch;
/// free rows are listed per set as `(row, gradient)`.
#[derive(Clone, Debug)]
pub struct LatentGradient {
    /// Summed weighted squared error of the batch, before any update.
    pub data_loss: f64,
    pub meta: DenseMatrix,
    pub projections: Vec<DenseMatrix>,
    pub free: Vec<Vec<(usize, Vec<f64>)>>,
}

impl LatentGradient {
    /// Scatters the gradient into a dense parameter-shaped value, with the
    /// same ordering as [`LatentParams::values_mut`].
    pub fn to_dense(&self, params: &LatentParams, batch: &[usize]) -> Vec<f64> {
        let mut dense = LatentParams::zeros_like(params);
        for (bi, &w) in batch.iter().enumerate() {
            dense.meta.row_mut(w).copy_from_slice(self.meta.row(bi));
        }
        dense.projections.clone_from(&self.projections);
        for (s, rows) in self.free.iter().enumerate() {
            for (k, g) in rows {
                dense.free[s].row_mut(*k).copy_from_slice(g);
            }
        }
        dense.values_mut().map(|v| *v).collect()
    }
}

/// One set's share of a batch gradient: data loss, projection gradient,
/// meta gradient and sparse free-row gradients.
type SetGradient = (f64, DenseMatrix, DenseMatrix, Vec<(usize, Vec<f64>)>);

#[derive(Debug)]
pub struct LatentProblem<'a> {
    sets: &'a [EmbeddingSet],
    gammas: Vec<f64>,
    l2_weight: f64,
    dim: usize,
    words: Vec<String>,
    /// `slots[s][w]`
    slots: Vec<Vec<Slot>>,
    free_counts: Vec<usize>,
}

impl<'a> LatentProblem<'a> {
    /// 1toN: trains over the intersection vocabulary.
    pub fn one_to_n(
        sets: &'a [EmbeddingSet],
        alignment: &VocabAlignment,
        weights: &SetWeights,
        dim: usize,
        l2_weight: f64,
    ) -> Result<Self> {
        Self::build(sets, alignment, weights, dim, l2_weight, false)
    }

    /// 1toN+: trains over the union vocabulary with free OOV embeddings.
    pub fn one_to_n_plus(
        sets: &'a [EmbeddingSet],
        alignment: &VocabAlignment,
        weights: &SetWeights,
        dim: usize,
        l2_weight: f64,
    ) -> Result<Self> {
        if sets.len() < 2 {
            return Err(Error::TooFewSets {
                required: 2,
                found: sets.len(),
            });
        }
        Self::build(sets, alignment, weights, dim, l2_weight, true)
    }

    fn build(
        sets: &'a [EmbeddingSet],
        alignment: &VocabAlignment,
        weights: &SetWeights,
        dim: usize,
        l2_weight: f64,
        over_union: bool,
    ) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::TooFewSets {
                required: 1,
                found: 0,
            });
        }
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "meta-embedding dimension must be positive".into(),
            ));
        }
        if !(l2_weight >= 0.0 && l2_weight.is_finite()) {
            return Err(Error::InvalidConfig(
                "l2_weight must be non-negative".into(),
            ));
        }
        for s in sets {
            alignment.set_position(s.name())?;
        }
        let gammas = weights.resolve(sets)?;
        let words: Vec<String> = if over_union {
            alignment.union().to_vec()
        } else {
            alignment.intersection().to_vec()
        };
        if words.is_empty() {
            return Err(Error::EmptyVocabulary);
        }

        let mut slots = Vec::with_capacity(sets.len());
        let mut free_counts = Vec::with_capacity(sets.len());
        for set in sets {
            let mut free = 0;
            let mut row_slots = Vec::with_capacity(words.len());
            for w in &words {
                match set.index_of(w) {
                    Some(r) => row_slots.push(Slot::Known(r)),
                    None if over_union => {
                        row_slots.push(Slot::Free(free));
                        free += 1;
                    }
                    None => {
                        return Err(Error::MissingWord {
                            word: w.clone(),
                            set: set.name().to_owned(),
                        })
                    }
                }
            }
            slots.push(row_slots);
            free_counts.push(free);
        }
        if over_union {
            for (w, word) in words.iter().enumerate() {
                if slots.iter().all(|s| matches!(s[w], Slot::Free(_))) {
                    return Err(Error::UncoveredWord(word.clone()));
                }
            }
        }

        Ok(LatentProblem {
            sets,
            gammas,
            l2_weight,
            dim,
            words,
            slots,
            free_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of free OOV embeddings of set `s`.
    pub fn free_count(&self, s: usize) -> usize {
        self.free_counts[s]
    }

    /// Uniform random initialization in the order meta, projections, free.
    pub fn init_params(&self, config: &TrainConfig) -> LatentParams {
        let mut rng = config.init_rng();
        let n = self.len();
        let meta =
            DenseMatrix::from_vec_unchecked(n, self.dim, init_uniform(&mut rng, n * self.dim));
        let projections = self
            .sets
            .iter()
            .map(|s| {
                DenseMatrix::from_vec_unchecked(
                    s.dim(),
                    self.dim,
                    init_uniform(&mut rng, s.dim() * self.dim),
                )
            })
            .collect();
        let free = self
            .sets
            .iter()
            .zip(&self.free_counts)
            .map(|(s, &k)| {
                DenseMatrix::from_vec_unchecked(k, s.dim(), init_uniform(&mut rng, k * s.dim()))
            })
            .collect();
        LatentParams {
            meta,
            projections,
            free,
        }
    }

    fn target<'p>(&self, params: &'p LatentParams, s: usize, w: usize) -> &'p [f64]
    where
        'a: 'p,
    {
        match self.slots[s][w] {
            Slot::Known(r) => self.sets[s].matrix().row(r),
            Slot::Free(k) => params.free[s].row(k),
        }
    }

    /// Full batch objective, penalty included.
    pub fn objective(&self, params: &LatentParams, batch: &[usize]) -> f64 {
        let mut total = 0.0;
        for (s, &gamma) in self.gammas.iter().enumerate() {
            let proj = &params.projections[s];
            for &w in batch {
                let meta = params.meta.row(w);
                let sq: f64 = proj
                    .iter_rows()
                    .zip(self.target(params, s, w))
                    .map(|(row, t)| {
                        let r = dot(row, meta) - t;
                        r * r
                    })
                    .sum();
                total += gamma * sq;
            }
            total += self.l2_weight * proj.frobenius_norm().powi(2);
        }
        total
    }

    /// Mean squared prediction error per word for each set (unweighted).
    pub fn per_set_loss(&self, params: &LatentParams) -> Vec<f64> {
        (0..self.sets.len())
            .map(|s| {
                let proj = &params.projections[s];
                let sum: f64 = (0..self.len())
                    .map(|w| {
                        let meta = params.meta.row(w);
                        proj.iter_rows()
                            .zip(self.target(params, s, w))
                            .map(|(row, t)| (dot(row, meta) - t).powi(2))
                            .sum::<f64>()
                    })
                    .sum();
                sum / self.len() as f64
            })
            .collect()
    }

    /// Analytic gradient of [`objective`](Self::objective) on `batch`.
    ///
    /// Sets are processed in parallel and combined in set order, so the
    /// result does not depend on the thread count.
    pub fn gradient(&self, params: &LatentParams, batch: &[usize]) -> LatentGradient {
        let d = self.dim;
        let per_set: Vec<SetGradient> = (0..self.sets.len())
            .into_par_iter()
            .map(|s| {
                let gamma = self.gammas[s];
                let proj = &params.projections[s];
                let ds = proj.rows();
                let mut g_proj = proj.clone();
                g_proj
                    .as_mut_slice()
                    .iter_mut()
                    .for_each(|v| *v *= 2.0 * self.l2_weight);
                let mut g_meta = DenseMatrix::zeros(batch.len(), d);
                let mut g_free = Vec::new();
                let mut resid = vec![0.0; ds];
                let mut loss = 0.0;
                for (bi, &w) in batch.iter().enumerate() {
                    let meta = params.meta.row(w);
                    let target = self.target(params, s, w);
                    for (r, res) in resid.iter_mut().enumerate() {
                        *res = dot(proj.row(r), meta) - target[r];
                    }
                    loss += gamma * dot(&resid, &resid);
                    let gm = g_meta.row_mut(bi);
                    for (r, &res) in resid.iter().enumerate() {
                        let coef = 2.0 * gamma * res;
                        for ((gp, gmv), (&m, &p)) in g_proj
                            .row_mut(r)
                            .iter_mut()
                            .zip(gm.iter_mut())
                            .zip(meta.iter().zip(proj.row(r)))
                        {
                            *gp += coef * m;
                            *gmv += coef * p;
                        }
                    }
                    if let Slot::Free(k) = self.slots[s][w] {
                        g_free.push((k, resid.iter().map(|r| -2.0 * gamma * r).collect()));
                    }
                }
                (loss, g_proj, g_meta, g_free)
            })
            .collect();

        let mut data_loss = 0.0;
        let mut meta = DenseMatrix::zeros(batch.len(), d);
        let mut projections = Vec::with_capacity(per_set.len());
        let mut free = Vec::with_capacity(per_set.len());
        for (loss, g_proj, g_meta, g_free) in per_set {
            data_loss += loss;
            for (a, b) in meta.as_mut_slice().iter_mut().zip(g_meta.as_slice()) {
                *a += b;
            }
            projections.push(g_proj);
            free.push(g_free);
        }
        LatentGradient {
            data_loss,
            meta,
            projections,
            free,
        }
    }

    fn train(&self, config: &TrainConfig) -> Result<(LatentParams, TrainReport)> {
        config.validate()?;
        let mut params = self.init_params(config);
        let mut accum = LatentParams::zeros_like(&params);
        let (lr, eps) = (config.learning_rate, config.adagrad_epsilon);
        let report = run_epochs(self.len(), config, |batch| {
            let g = self.gradient(&params, batch);
            for (bi, &w) in batch.iter().enumerate() {
                adagrad_step(
                    params.meta.row_mut(w),
                    g.meta.row(bi),
                    accum.meta.row_mut(w),
                    lr,
                    eps,
                );
            }
            for (s, gp) in g.projections.iter().enumerate() {
                adagrad_step(
                    params.projections[s].as_mut_slice(),
                    gp.as_slice(),
                    accum.projections[s].as_mut_slice(),
                    lr,
                    eps,
                );
            }
            for (s, rows) in g.free.iter().enumerate() {
                for (k, gv) in rows {
                    adagrad_step(
                        params.free[s].row_mut(*k),
                        gv,
                        accum.free[s].row_mut(*k),
                        lr,
                        eps,
                    );
                }
            }
            if !g.data_loss.is_finite() {
                return Err(Error::InvalidConfig(
                    "training diverged (non-finite loss); lower the learning rate".into(),
                ));
            }
            Ok(g.data_loss)
        })?;
        Ok((params, report))
    }

    fn bundle(&self, params: &LatentParams) -> ProjectionBundle {
        let losses = self.per_set_loss(params);
        ProjectionBundle {
            maps: self
                .sets
                .iter()
                .zip(&params.projections)
                .zip(losses)
                .map(|((s, m), loss)| ProjectionMap {
                    source_set: META_SPACE.to_owned(),
                    target_set: s.name().to_owned(),
                    m: m.clone(),
                    train_loss: loss,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OneToNOutput {
    pub meta: MetaEmbeddings,
    pub projections: ProjectionBundle,
    pub report: TrainReport,
}

#[derive(Clone, Debug)]
pub struct OneToNPlusOutput {
    /// Meta-embeddings over the union vocabulary.
    pub meta: MetaEmbeddings,
    /// Every input set extended to the union vocabulary, union order.
    pub extended: Vec<EmbeddingSet>,
    pub projections: ProjectionBundle,
    pub report: TrainReport,
}

/// Learns meta-embeddings for the intersection vocabulary.
pub fn train_1ton(
    sets: &[EmbeddingSet],
    alignment: &VocabAlignment,
    weights: &SetWeights,
    dim: usize,
    config: &TrainConfig,
) -> Result<OneToNOutput> {
    let problem = LatentProblem::one_to_n(sets, alignment, weights, dim, config.l2_weight)?;
    let (params, report) = problem.train(config)?;
    let projections = problem.bundle(&params);
    let meta = EmbeddingSet::new(Method::OneToN.as_str(), problem.words.clone(), params.meta)?;
    Ok(OneToNOutput {
        meta: MetaEmbeddings {
            embeddings: meta,
            method: Method::OneToN,
        },
        projections,
        report,
    })
}

/// Learns meta-embeddings for the union vocabulary, jointly with embeddings
/// for every word a set is missing. Known embeddings are never changed.
pub fn train_1ton_plus(
    sets: &[EmbeddingSet],
    alignment: &VocabAlignment,
    weights: &SetWeights,
    dim: usize,
    config: &TrainConfig,
) -> Result<OneToNPlusOutput> {
    let problem = LatentProblem::one_to_n_plus(sets, alignment, weights, dim, config.l2_weight)?;
    let (params, report) = problem.train(config)?;
    let projections = problem.bundle(&params);

    let extended = sets
        .iter()
        .enumerate()
        .map(|(s, set)| {
            let mut m = DenseMatrix::zeros(problem.len(), set.dim());
            for w in 0..problem.len() {
                m.row_mut(w).copy_from_slice(problem.target(&params, s, w));
            }
            EmbeddingSet::new(set.name(), problem.words.clone(), m)
        })
        .collect::<Result<Vec<_>>>()?;

    let meta = EmbeddingSet::new(
        Method::OneToNPlus.as_str(),
        problem.words.clone(),
        params.meta,
    )?;
    Ok(OneToNPlusOutput {
        meta: MetaEmbeddings {
            embeddings: meta,
            method: Method::OneToNPlus,
        },
        extended,
        projections,
        report,
    })
}
