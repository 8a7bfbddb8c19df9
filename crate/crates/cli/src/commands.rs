use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use log::info;

use crate::args::{BuildArgs, EvalArgs, ExtendArgs, InfoArgs, MetaArgs, SweepArgs, SweepParam};
use crate::config::{
    check_favored, dataset_path, default_train_config, dev_path, merge_sets, FileConfig, SetSpec,
};
use crate::pipeline::{self, BuildPlan};
use metaemb::ensemble::DEFAULT_META_DIM;
use metaemb::eval::{
    eval_analogy, eval_similarity, load_analogy, load_similarity, AnalogyDataset, SimilarityDataset,
};
use metaemb::oov::{extend_all_with_projections, extend_meta};
use metaemb::{align, EmbeddingSet, Method, OovFillStrategy, TrainConfig};

fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn score(v: f64) -> String {
    format!("{v:.4}")
}

pub fn info(args: &InfoArgs) -> Result<()> {
    let file = FileConfig::load_opt(args.sets.config.as_deref())?;
    let specs = merge_sets(&args.sets.sets, &file.sets)?;
    ensure!(
        !specs.is_empty(),
        "no embedding sets given (use --sets or a config file)"
    );
    let format = args.sets.format.or(file.format).unwrap_or_default();
    let sets = pipeline::load_sets(&specs, format)?;

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["name", "words", "dim", "oov_count"])?;
    if sets.len() >= 2 {
        let al = align(&sets)?;
        for s in &sets {
            let oov = al.oov_words(s.name())?.len();
            w.write_record([
                s.name(),
                &s.len().to_string(),
                &s.dim().to_string(),
                &oov.to_string(),
            ])?;
        }
        w.write_record([
            "(intersection)",
            &al.intersection().len().to_string(),
            "",
            "",
        ])?;
        w.write_record(["(union)", &al.union().len().to_string(), "", ""])?;
    } else {
        let s = &sets[0];
        w.write_record([s.name(), &s.len().to_string(), &s.dim().to_string(), "0"])?;
    }
    w.flush()?;
    Ok(())
}

/// Sets, plan and the file config behind a `build` or `sweep`.
struct Prepared {
    specs: Vec<SetSpec>,
    sets: Vec<EmbeddingSet>,
    plan: BuildPlan,
    favored: Vec<String>,
    file: FileConfig,
}

fn prepare(args: &MetaArgs) -> Result<Prepared> {
    let file = FileConfig::load_opt(args.sets.config.as_deref())?;
    let specs = merge_sets(&args.sets.sets, &file.sets)?;
    ensure!(
        specs.len() >= 2,
        "at least two embedding sets are needed (use --sets or a config file)"
    );
    let method = args.method.or(file.method).unwrap_or(Method::Svd);
    let dim = args.dim.or(file.dim).unwrap_or(DEFAULT_META_DIM);
    let favored = if args.favored.is_empty() {
        file.favored.clone()
    } else {
        args.favored.clone()
    };
    check_favored(&favored, &specs)?;
    let train = file
        .train
        .merged(&args.train.overrides())
        .apply(default_train_config(method))?;
    let weights = pipeline::set_weights(&specs, &favored, train.loss_weight_scalar)?;
    let column_normalize = specs
        .iter()
        .filter(|s| s.column_normalize)
        .map(|s| s.name.clone())
        .collect();
    let format = args.sets.format.or(file.format).unwrap_or_default();
    let sets = pipeline::load_sets(&specs, format)?;
    Ok(Prepared {
        specs,
        sets,
        plan: BuildPlan {
            method,
            dim,
            weights,
            column_normalize,
            train,
        },
        favored,
        file,
    })
}

pub fn build(args: &BuildArgs) -> Result<()> {
    let p = prepare(&args.meta)?;
    let out = args
        .out
        .clone()
        .or_else(|| p.file.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let built = pipeline::build(&p.sets, &p.plan)?;
    for path in pipeline::write_built(&out, &built, &p.plan, &p.specs, &p.sets)? {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn extend(args: &ExtendArgs) -> Result<()> {
    let file = FileConfig::load_opt(args.sets.config.as_deref())?;
    let specs = merge_sets(&args.sets.sets, &file.sets)?;
    ensure!(
        specs.len() >= 2,
        "at least two embedding sets are needed (use --sets or a config file)"
    );
    let strategy = args
        .strategy
        .or(file.strategy)
        .unwrap_or(OovFillStrategy::Ml);
    let config = file
        .train
        .merged(&args.train.overrides())
        .apply(TrainConfig::mutual_learning())?;
    let out = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let format = args.sets.format.or(file.format).unwrap_or_default();
    let sets = pipeline::load_sets(&specs, format)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut written = Vec::new();
    let projections = if let Some(meta) = &args.meta {
        let meta_set = pipeline::load_set(&meta.label, &meta.path, format)?;
        let (filled, maps) = extend_meta(&meta_set, &sets, &config, strategy)?;
        let p = out.join(format!("{}.{strategy}.txt", meta.label));
        pipeline::save(&filled, &p)?;
        written.push(p);
        maps
    } else {
        let (extended, maps) = extend_all_with_projections(&sets, &config, strategy)?;
        for set in &extended {
            let p = out.join(format!("{}.{strategy}.txt", set.name()));
            pipeline::save(set, &p)?;
            written.push(p);
        }
        maps
    };
    for map in &projections {
        let p = out.join(format!("proj.{}.{}.txt", map.source_set, map.target_set));
        map.save(&p)
            .with_context(|| format!("writing {}", p.display()))?;
        info!(
            "projection {} -> {}: loss {:.6e}",
            map.source_set, map.target_set, map.train_loss
        );
        written.push(p);
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn dataset_paths(args: &EvalArgs, file: &FileConfig) -> Result<Vec<PathBuf>> {
    let raw = if args.datasets.is_empty() {
        &file.datasets
    } else {
        &args.datasets
    };
    ensure!(
        !raw.is_empty(),
        "no datasets given (use --datasets or a config file)"
    );
    Ok(raw.iter().map(|p| dataset_path(p)).collect())
}

fn lowercase_pairs(ds: SimilarityDataset) -> SimilarityDataset {
    SimilarityDataset {
        name: ds.name,
        pairs: ds
            .pairs
            .into_iter()
            .map(|(a, b, s)| (a.to_lowercase(), b.to_lowercase(), s))
            .collect(),
    }
}

fn load_sim(path: &Path, lowercase: bool) -> Result<SimilarityDataset> {
    let ds =
        load_similarity(path).with_context(|| format!("loading dataset {}", path.display()))?;
    Ok(if lowercase { lowercase_pairs(ds) } else { ds })
}

pub fn eval_sim(args: &EvalArgs) -> Result<()> {
    let file = FileConfig::load_opt(args.config.as_deref())?;
    let lowercase = args.lowercase || file.lowercase.unwrap_or(false);
    let datasets = dataset_paths(args, &file)?
        .iter()
        .map(|p| load_sim(p, lowercase))
        .collect::<Result<Vec<_>>>()?;
    let format = args.format.or(file.format).unwrap_or_default();

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["dataset", "method", "score", "oov_count"])?;
    for emb in &args.emb {
        let set = pipeline::load_set(&emb.label, &emb.path, format)?;
        for ds in &datasets {
            let r = eval_similarity(&set, ds)
                .with_context(|| format!("evaluating `{}` on {}", emb.label, ds.name))?;
            w.write_record([
                &ds.name,
                &emb.label,
                &score(r.score),
                &r.oov_count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn eval_analogy_cmd(args: &EvalArgs) -> Result<()> {
    let file = FileConfig::load_opt(args.config.as_deref())?;
    let lowercase = args.lowercase || file.lowercase.unwrap_or(false);
    let datasets = dataset_paths(args, &file)?
        .iter()
        .map(|p| {
            let ds = load_analogy(p).with_context(|| format!("loading dataset {}", p.display()))?;
            Ok(if lowercase { ds.lowercased() } else { ds })
        })
        .collect::<Result<Vec<AnalogyDataset>>>()?;
    let format = args.format.or(file.format).unwrap_or_default();

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["dataset", "method", "score", "oov_count"])?;
    for emb in &args.emb {
        let set = pipeline::load_set(&emb.label, &emb.path, format)?;
        for ds in &datasets {
            let rep = eval_analogy(&set, ds);
            for (part, r) in [
                ("semantic", rep.semantic),
                ("syntactic", rep.syntactic),
                ("total", rep.total),
            ] {
                w.write_record([
                    &format!("{}/{part}", ds.name),
                    &emb.label,
                    &score(r.score),
                    &r.oov_count.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let p = prepare(&args.meta)?;
    let dev = dev_path(args.dev.as_deref(), p.file.dev.as_deref());
    let lowercase = args.lowercase || p.file.lowercase.unwrap_or(false);
    let dev_set = load_sim(&dev, lowercase)?;

    let plans = args
        .values
        .iter()
        .map(|&v| {
            let mut plan = p.plan.clone();
            match args.param {
                SweepParam::Weight => {
                    ensure!(!p.favored.is_empty(), "a weight sweep needs --favored sets");
                    ensure!(v > 0.0 && v.is_finite(), "weight {v} must be positive");
                    plan.train.loss_weight_scalar = v;
                    plan.weights = pipeline::set_weights(&p.specs, &p.favored, v)?;
                }
                SweepParam::Dim => {
                    ensure!(
                        plan.method != Method::Conc,
                        "CONC has no dimensionality parameter to sweep"
                    );
                    ensure!(
                        v >= 1.0 && v.fract() == 0.0,
                        "dimension {v} must be a positive integer"
                    );
                    plan.dim = v as usize;
                    pipeline::check_dim(&p.sets, plan.method, plan.dim)?;
                }
            }
            Ok((v, plan))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["value", "score", "oov_count"])?;
    for (v, plan) in plans {
        let built = pipeline::build(&p.sets, &plan)?;
        let r = eval_similarity(&built.meta.embeddings, &dev_set)
            .with_context(|| format!("evaluating on {}", dev.display()))?;
        info!("{:?} = {v}: {:.4}", args.param, r.score);
        w.write_record([&v.to_string(), &score(r.score), &r.oov_count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
