//! Meta-embedding constructions: CONC, SVD, 1toN and 1toN+.

mod conc;
mod latent;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use conc::{conc, svd_meta, DEFAULT_META_DIM};
pub use latent::{
    train_1ton, train_1ton_plus, LatentGradient, LatentParams, LatentProblem, OneToNOutput,
    OneToNPlusOutput,
};

use crate::embedding_io::EmbeddingSet;
use crate::error::{Error, Result};
use crate::projection::ProjectionMap;

/// Name used as the source space of the projections learned by 1toN.
pub const META_SPACE: &str = "meta";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "conc")]
    Conc,
    #[serde(rename = "svd")]
    Svd,
    #[serde(rename = "1ton")]
    OneToN,
    #[serde(rename = "1ton-plus")]
    OneToNPlus,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Conc => "conc",
            Method::Svd => "svd",
            Method::OneToN => "1ton",
            Method::OneToNPlus => "1ton-plus",
        }
    }

    pub fn is_trained(self) -> bool {
        matches!(self, Method::OneToN | Method::OneToNPlus)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conc" => Ok(Method::Conc),
            "svd" => Ok(Method::Svd),
            "1ton" | "1-to-n" => Ok(Method::OneToN),
            "1ton-plus" | "1ton+" | "1tonplus" => Ok(Method::OneToNPlus),
            other => Err(Error::InvalidConfig(format!(
                "unknown method `{other}` (expected conc, svd, 1ton or 1ton-plus)"
            ))),
        }
    }
}

/// Meta-embeddings together with the method that produced them.
#[derive(Clone, Debug)]
pub struct MetaEmbeddings {
    pub embeddings: EmbeddingSet,
    pub method: Method,
}

impl MetaEmbeddings {
    pub fn words(&self) -> &[String] {
        self.embeddings.words()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.embeddings.get(word)
    }
}

/// Per-set weights γ. Sets without an entry weigh 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SetWeights(BTreeMap<String, f64>);

impl SetWeights {
    pub fn uniform() -> Self {
        SetWeights::default()
    }

    /// `scalar` for every set in `favored`, 1 for the rest.
    pub fn favoring<S: AsRef<str>>(favored: &[S], scalar: f64) -> Result<Self> {
        let mut w = SetWeights::default();
        for s in favored {
            w.set(s.as_ref(), scalar)?;
        }
        Ok(w)
    }

    pub fn set(&mut self, name: &str, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::NonPositiveWeight {
                set: name.to_owned(),
                weight,
            });
        }
        self.0.insert(name.to_owned(), weight);
        Ok(())
    }

    pub fn with(mut self, name: &str, weight: f64) -> Result<Self> {
        self.set(name, weight)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or(1.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (name, &weight) in &self.0 {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::NonPositiveWeight {
                    set: name.clone(),
                    weight,
                });
            }
        }
        Ok(())
    }

    /// Weights of `sets` in order.
    pub(crate) fn resolve(&self, sets: &[EmbeddingSet]) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(sets.iter().map(|s| self.get(s.name())).collect())
    }
}

/// One learned map from the meta space into each individual set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProjectionBundle {
    pub maps: Vec<ProjectionMap>,
}

impl ProjectionBundle {
    pub fn get(&self, target_set: &str) -> Option<&ProjectionMap> {
        self.maps.iter().find(|m| m.target_set == target_set)
    }
}
