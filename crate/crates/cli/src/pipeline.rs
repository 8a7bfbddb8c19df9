//! Loading, building and writing, shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use log::info;
use serde::Serialize;

use crate::config::{FormatChoice, SetSpec};
use metaemb::ensemble::{conc, svd_meta, train_1ton, train_1ton_plus};
use metaemb::{
    align, load_embedding_set, save_embedding_set, EmbeddingSet, MetaEmbeddings, Method,
    ProjectionBundle, SetWeights, TrainConfig, TrainReport, VectorFileFormat,
};

pub fn load_set(name: &str, path: &Path, format: FormatChoice) -> Result<EmbeddingSet> {
    let fmt = format
        .resolve(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let set = load_embedding_set(path, fmt, name)
        .with_context(|| format!("loading embedding set `{name}`"))?;
    info!("{name}: {} words, dim {}", set.len(), set.dim());
    Ok(set)
}

/// Loads every set; a spec's own format wins over `default_format`.
pub fn load_sets(specs: &[SetSpec], default_format: FormatChoice) -> Result<Vec<EmbeddingSet>> {
    specs
        .iter()
        .map(|s| load_set(&s.name, &s.path, s.format.unwrap_or(default_format)))
        .collect()
}

/// Per-set weight times `scalar` for favored sets.
pub fn set_weights(specs: &[SetSpec], favored: &[String], scalar: f64) -> Result<SetWeights> {
    let mut weights = SetWeights::uniform();
    for s in specs {
        let factor = if favored.contains(&s.name) {
            scalar
        } else {
            1.0
        };
        weights.set(&s.name, s.weight * factor)?;
    }
    Ok(weights)
}

/// Everything needed to build one meta-embedding.
#[derive(Clone, Debug)]
pub struct BuildPlan {
    pub method: Method,
    pub dim: usize,
    pub weights: SetWeights,
    pub column_normalize: Vec<String>,
    pub train: TrainConfig,
}

#[derive(Clone, Debug)]
pub struct Built {
    pub meta: MetaEmbeddings,
    /// Input sets extended to the union vocabulary (1toN+ only).
    pub extended: Vec<EmbeddingSet>,
    pub projections: Option<ProjectionBundle>,
    pub report: Option<TrainReport>,
}

/// Largest admissible meta dimensionality: vocabulary size and the summed
/// input dimensionality.
pub fn max_dim(sets: &[EmbeddingSet], method: Method) -> Result<usize> {
    let al = align(sets)?;
    let n = match method {
        Method::OneToNPlus => al.union().len(),
        _ => al.intersection().len(),
    };
    Ok(n.min(sets.iter().map(EmbeddingSet::dim).sum()))
}

pub fn check_dim(sets: &[EmbeddingSet], method: Method, dim: usize) -> Result<()> {
    if method == Method::Conc {
        return Ok(());
    }
    let max = max_dim(sets, method)?;
    ensure!(
        dim >= 1 && dim <= max,
        "dimension {dim} is out of range for {method}: must be between 1 and {max} (vocabulary size and summed input dimensions)"
    );
    Ok(())
}

pub fn build(sets: &[EmbeddingSet], plan: &BuildPlan) -> Result<Built> {
    if sets.len() < 2 {
        bail!("at least two embedding sets are needed, got {}", sets.len());
    }
    check_dim(sets, plan.method, plan.dim)?;
    let alignment = align(sets)?;
    info!(
        "vocabulary: {} shared, {} in total",
        alignment.intersection().len(),
        alignment.union().len()
    );
    let built = match plan.method {
        Method::Conc | Method::Svd => {
            let c = conc(sets, &plan.weights, &alignment, &plan.column_normalize)?;
            let meta = if plan.method == Method::Svd {
                svd_meta(&c, plan.dim)?
            } else {
                c
            };
            Built {
                meta,
                extended: Vec::new(),
                projections: None,
                report: None,
            }
        }
        Method::OneToN => {
            let out = train_1ton(sets, &alignment, &plan.weights, plan.dim, &plan.train)?;
            Built {
                meta: out.meta,
                extended: Vec::new(),
                projections: Some(out.projections),
                report: Some(out.report),
            }
        }
        Method::OneToNPlus => {
            let out = train_1ton_plus(sets, &alignment, &plan.weights, plan.dim, &plan.train)?;
            Built {
                meta: out.meta,
                extended: out.extended,
                projections: Some(out.projections),
                report: Some(out.report),
            }
        }
    };
    if let Some(r) = &built.report {
        info!(
            "{}: {} epochs, final loss {:.6e}",
            plan.method,
            r.epoch_losses.len(),
            r.final_loss
        );
    }
    Ok(built)
}

#[derive(Serialize)]
struct SidecarSet<'a> {
    name: &'a str,
    path: String,
    words: usize,
    dim: usize,
    weight: f64,
    column_normalize: bool,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    method: Method,
    dim: usize,
    words: usize,
    sets: Vec<SidecarSet<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<&'a TrainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epochs_run: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_loss: Option<f64>,
}

/// Writes `<method>.txt`, `<method>.meta.json`, trained projections and
/// extended sets into `out`. Returns the paths written, vectors first.
pub fn write_built(
    out: &Path,
    built: &Built,
    plan: &BuildPlan,
    specs: &[SetSpec],
    sets: &[EmbeddingSet],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let stem = plan.method.as_str();
    let mut written = Vec::new();

    let vectors = out.join(format!("{stem}.txt"));
    save(&built.meta.embeddings, &vectors)?;
    written.push(vectors);

    let sidecar = Sidecar {
        method: plan.method,
        dim: built.meta.dim(),
        words: built.meta.len(),
        sets: specs
            .iter()
            .zip(sets)
            .map(|(spec, set)| SidecarSet {
                name: &spec.name,
                path: spec.path.display().to_string(),
                words: set.len(),
                dim: set.dim(),
                weight: plan.weights.get(&spec.name),
                column_normalize: plan.column_normalize.contains(&spec.name),
            })
            .collect(),
        train: built.report.as_ref().map(|_| &plan.train),
        epochs_run: built.report.as_ref().map(|r| r.epoch_losses.len()),
        final_loss: built.report.as_ref().map(|r| r.final_loss),
    };
    let json_path = out.join(format!("{stem}.meta.json"));
    let json = serde_json::to_string_pretty(&sidecar)? + "\n";
    fs::write(&json_path, json).with_context(|| format!("writing {}", json_path.display()))?;
    written.push(json_path);

    if let Some(bundle) = &built.projections {
        for map in &bundle.maps {
            let p = out.join(format!("{stem}.proj.{}.txt", map.target_set));
            map.save(&p)
                .with_context(|| format!("writing {}", p.display()))?;
            written.push(p);
        }
    }
    for set in &built.extended {
        let p = out.join(format!("{stem}.{}.txt", set.name()));
        save(set, &p)?;
        written.push(p);
    }
    Ok(written)
}

pub fn save(set: &EmbeddingSet, path: &Path) -> Result<()> {
    save_embedding_set(set, path, VectorFileFormat::Plain)
        .with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {} ({} x {})", path.display(), set.len(), set.dim());
    Ok(())
}
