//! Meta-embeddings: combining several pre-trained word embedding sets.
//!
//! The crate provides
//!
//! * loading and saving of text vector files ([`embedding_io`]),
//! * vocabulary alignment across sets ([`vocab`]),
//! * the CONC, SVD, 1toN and 1toN+ ensembles ([`ensemble`]),
//! * OOV filling with MutualLearning projections or the RND/AVG baselines
//!   ([`oov`]),
//! * word similarity and analogy evaluation ([`eval`]).
//!
//! All training uses mini-batch AdaGrad ([`optimizer`]) and is fully
//! determined by [`TrainConfig::seed`].

pub mod embedding_io;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod oov;
pub mod optimizer;
pub mod projection;
pub mod vocab;

pub use embedding_io::{load_embedding_set, save_embedding_set, EmbeddingSet, VectorFileFormat};
pub use ensemble::{MetaEmbeddings, Method, ProjectionBundle, SetWeights};
pub use error::{Error, Result};
pub use eval::EvalResult;
pub use linalg::{DenseMatrix, SvdResult};
pub use oov::OovFillStrategy;
pub use optimizer::{TrainConfig, TrainReport};
pub use projection::ProjectionMap;
pub use vocab::{align, VocabAlignment};
