use super::{MetaEmbeddings, Method, SetWeights};
use crate::embedding_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::{
    l2_normalize, normalize_columns, normalize_rows_in_place, truncated_svd, DenseMatrix,
};
use crate::vocab::VocabAlignment;

/// Meta-embedding dimensionality used unless asked otherwise.
pub const DEFAULT_META_DIM: usize = 200;

/// Weighted concatenation over the intersection vocabulary.
///
/// Sets named in `column_normalize` first get every dimension scaled to unit
/// L2 norm across their whole vocabulary. Each per-set vector is then scaled
/// to unit length and multiplied by its weight, so that
/// `⟨meta(u), meta(v)⟩ = Σ_s γ_s² ⟨û_s, v̂_s⟩`.
pub fn conc<S: AsRef<str>>(
    sets: &[EmbeddingSet],
    weights: &SetWeights,
    alignment: &VocabAlignment,
    column_normalize: &[S],
) -> Result<MetaEmbeddings> {
    if sets.is_empty() {
        return Err(Error::TooFewSets {
            required: 1,
            found: 0,
        });
    }
    let gammas = weights.resolve(sets)?;
    for name in column_normalize {
        if !sets.iter().any(|s| s.name() == name.as_ref()) {
            return Err(Error::UnknownSet(name.as_ref().to_owned()));
        }
    }
    for s in sets {
        alignment.set_position(s.name())?;
    }
    let words = alignment.intersection();
    if words.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let k: usize = sets.iter().map(EmbeddingSet::dim).sum();
    let mut out = DenseMatrix::zeros(words.len(), k);
    let mut offset = 0;
    for (set, &gamma) in sets.iter().zip(&gammas) {
        let colnorm;
        let source = if column_normalize.iter().any(|n| n.as_ref() == set.name()) {
            colnorm = normalize_columns(set.matrix());
            &colnorm
        } else {
            set.matrix()
        };
        for (r, w) in words.iter().enumerate() {
            let row = set.index_of(w).ok_or_else(|| Error::MissingWord {
                word: w.clone(),
                set: set.name().to_owned(),
            })?;
            let dst = &mut out.row_mut(r)[offset..offset + set.dim()];
            dst.copy_from_slice(source.row(row));
            l2_normalize(dst);
            dst.iter_mut().for_each(|v| *v *= gamma);
        }
        offset += set.dim();
    }

    Ok(MetaEmbeddings {
        embeddings: EmbeddingSet::new(Method::Conc.as_str(), words.to_vec(), out)?,
        method: Method::Conc,
    })
}

/// Row-normalized leading `d` left singular vectors of the CONC matrix.
pub fn svd_meta(conc: &MetaEmbeddings, d: usize) -> Result<MetaEmbeddings> {
    if conc.method != Method::Conc {
        return Err(Error::InvalidConfig(format!(
            "SVD meta-embeddings are built from CONC output, got {}",
            conc.method
        )));
    }
    let svd = truncated_svd(conc.embeddings.matrix(), d)?;
    let mut u = svd.u_d;
    normalize_rows_in_place(&mut u);
    Ok(MetaEmbeddings {
        embeddings: EmbeddingSet::new(Method::Svd.as_str(), conc.words().to_vec(), u)?,
        method: Method::Svd,
    })
}
