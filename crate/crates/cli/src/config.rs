//! Pipeline configuration: TOML file, command-line flags, and method
//! defaults. Flags win over the file, the file wins over defaults.

use std::env;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use metaemb::{Method, OovFillStrategy, TrainConfig, VectorFileFormat};

/// Environment variable naming the root directory of evaluation datasets.
pub const DATA_DIR_VAR: &str = "METAEMB_DATA_DIR";

/// File name of the default dev set inside the data directory.
pub const DEFAULT_DEV_FILE: &str = "MC30.txt";

/// On-disk vector format, or detection from the first line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatChoice {
    #[default]
    Auto,
    Plain,
    #[serde(alias = "with-header")]
    Header,
}

impl FormatChoice {
    pub fn resolve(self, path: &Path) -> Result<VectorFileFormat> {
        Ok(match self {
            FormatChoice::Auto => VectorFileFormat::detect(path)?,
            FormatChoice::Plain => VectorFileFormat::Plain,
            FormatChoice::Header => VectorFileFormat::WithHeader,
        })
    }
}

impl FromStr for FormatChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(FormatChoice::Auto),
            "plain" | "text" => Ok(FormatChoice::Plain),
            "header" | "with-header" => Ok(FormatChoice::Header),
            _ => Err(format!(
                "unknown format `{s}` (expected auto, plain or header)"
            )),
        }
    }
}

/// One input embedding set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default)]
    pub column_normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatChoice>,
}

fn one() -> f64 {
    1.0
}

/// `name=path[:weight][:colnorm]`
impl FromStr for SetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, mut rest) = s
            .split_once('=')
            .ok_or_else(|| format!("`{s}`: expected name=path[:weight][:colnorm]"))?;
        if name.is_empty() {
            return Err(format!("`{s}`: empty set name"));
        }
        let mut column_normalize = false;
        if let Some(head) = rest.strip_suffix(":colnorm") {
            column_normalize = true;
            rest = head;
        }
        let mut weight = 1.0;
        if let Some((head, tail)) = rest.rsplit_once(':') {
            if let Ok(w) = tail.parse::<f64>() {
                weight = w;
                rest = head;
            }
        }
        if rest.is_empty() {
            return Err(format!("`{s}`: empty path"));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(format!("`{s}`: weight must be positive"));
        }
        Ok(SetSpec {
            name: name.to_owned(),
            path: PathBuf::from(rest),
            weight,
            column_normalize,
            format: None,
        })
    }
}

/// `label=path`, or a bare path labelled by its file stem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledPath {
    pub label: String,
    pub path: PathBuf,
}

impl FromStr for LabeledPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((label, path)) = s.split_once('=') {
            if label.is_empty() || path.is_empty() {
                return Err(format!("`{s}`: expected label=path"));
            }
            return Ok(LabeledPath {
                label: label.to_owned(),
                path: PathBuf::from(path),
            });
        }
        let path = PathBuf::from(s);
        let label = path
            .file_stem()
            .map(|x| x.to_string_lossy().into_owned())
            .filter(|x| !x.is_empty())
            .ok_or_else(|| format!("`{s}`: cannot derive a label"))?;
        Ok(LabeledPath { label, path })
    }
}

impl fmt::Display for LabeledPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.label, self.path.display())
    }
}

/// Optional training settings; unset fields keep the method default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverrides {
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2_weight: Option<f64>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub loss_weight_scalar: Option<f64>,
    pub early_stop_tol: Option<f64>,
}

impl TrainOverrides {
    /// Fields set in `other` replace ours.
    pub fn merged(&self, other: &TrainOverrides) -> TrainOverrides {
        TrainOverrides {
            batch_size: other.batch_size.or(self.batch_size),
            learning_rate: other.learning_rate.or(self.learning_rate),
            l2_weight: other.l2_weight.or(self.l2_weight),
            epochs: other.epochs.or(self.epochs),
            seed: other.seed.or(self.seed),
            loss_weight_scalar: other.loss_weight_scalar.or(self.loss_weight_scalar),
            early_stop_tol: other.early_stop_tol.or(self.early_stop_tol),
        }
    }

    pub fn apply(&self, mut base: TrainConfig) -> Result<TrainConfig> {
        if let Some(v) = self.batch_size {
            base.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            base.learning_rate = v;
        }
        if let Some(v) = self.l2_weight {
            base.l2_weight = v;
        }
        if let Some(v) = self.epochs {
            base.epochs = v;
        }
        if let Some(v) = self.seed {
            base.seed = v;
        }
        if let Some(v) = self.loss_weight_scalar {
            base.loss_weight_scalar = v;
        }
        if let Some(v) = self.early_stop_tol {
            base.early_stop_tol = v;
        }
        base.validate()?;
        Ok(base)
    }
}

/// Contents of a `--config` TOML file. Every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub sets: Vec<SetSpec>,
    pub format: Option<FormatChoice>,
    pub method: Option<Method>,
    pub dim: Option<usize>,
    pub favored: Vec<String>,
    pub strategy: Option<OovFillStrategy>,
    pub out: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub datasets: Vec<PathBuf>,
    pub lowercase: Option<bool>,
    pub train: TrainOverrides,
}

impl FileConfig {
    /// Reads a TOML file; relative set paths are taken from the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for s in &mut cfg.sets {
            if s.path.is_relative() {
                s.path = base.join(&s.path);
            }
        }
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
    }
}

/// Method-specific training defaults.
pub fn default_train_config(method: Method) -> TrainConfig {
    match method {
        Method::OneToNPlus => TrainConfig::one_to_n_plus(),
        _ => TrainConfig::one_to_n(),
    }
}

/// Root for relative dataset paths: `$METAEMB_DATA_DIR`, if set.
pub fn data_dir() -> Option<PathBuf> {
    env::var_os(DATA_DIR_VAR)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Resolves a dataset path against the data directory.
pub fn dataset_path(path: &Path) -> PathBuf {
    match data_dir() {
        Some(root) if path.is_relative() => root.join(path),
        _ => path.to_path_buf(),
    }
}

/// `--dev`, else the file config's dev set, else MC30 in the data
/// directory.
pub fn dev_path(flag: Option<&Path>, file: Option<&Path>) -> PathBuf {
    match flag.or(file) {
        Some(p) => dataset_path(p),
        None => data_dir()
            .unwrap_or_else(|| PathBuf::from("data"))
            .join(DEFAULT_DEV_FILE),
    }
}

/// Flag sets replace file sets entirely; names must be unique.
pub fn merge_sets(flags: &[SetSpec], file: &[SetSpec]) -> Result<Vec<SetSpec>> {
    let sets = if flags.is_empty() {
        file.to_vec()
    } else {
        flags.to_vec()
    };
    for (i, s) in sets.iter().enumerate() {
        ensure!(
            !sets[..i].iter().any(|o| o.name == s.name),
            "embedding set name `{}` is used twice",
            s.name
        );
    }
    Ok(sets)
}

/// Checks the favored names against the configured sets.
pub fn check_favored(favored: &[String], sets: &[SetSpec]) -> Result<()> {
    for f in favored {
        if !sets.iter().any(|s| &s.name == f) {
            bail!("favored set `{f}` is not among --sets");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_spec_forms() {
        let s: SetSpec = "glove=/data/glove.txt".parse().unwrap();
        assert_eq!(
            (s.name.as_str(), s.weight, s.column_normalize),
            ("glove", 1.0, false)
        );
        let s: SetSpec = "glove=/data/glove.txt:8:colnorm".parse().unwrap();
        assert_eq!(s.path, PathBuf::from("/data/glove.txt"));
        assert_eq!((s.weight, s.column_normalize), (8.0, true));
        let s: SetSpec = "w2v=c:/x/y.txt:colnorm".parse().unwrap();
        assert_eq!(s.path, PathBuf::from("c:/x/y.txt"));
        assert_eq!(s.weight, 1.0);
        let s: SetSpec = "a=b.txt:0.5".parse().unwrap();
        assert_eq!((s.path, s.weight), (PathBuf::from("b.txt"), 0.5));
        assert!("noequals".parse::<SetSpec>().is_err());
        assert!("=x.txt".parse::<SetSpec>().is_err());
        assert!("a=x.txt:-1".parse::<SetSpec>().is_err());
        assert!("a=:2".parse::<SetSpec>().is_err());
    }

    #[test]
    fn labeled_paths() {
        let l: LabeledPath = "svd=out/svd.txt".parse().unwrap();
        assert_eq!(l.label, "svd");
        let l: LabeledPath = "out/conc.txt".parse().unwrap();
        assert_eq!(l.label, "conc");
    }

    #[test]
    fn overrides_layer() {
        let file = TrainOverrides {
            epochs: Some(7),
            learning_rate: Some(0.1),
            ..Default::default()
        };
        let flags = TrainOverrides {
            epochs: Some(9),
            ..Default::default()
        };
        let cfg = file
            .merged(&flags)
            .apply(TrainConfig::one_to_n_plus())
            .unwrap();
        assert_eq!(
            (cfg.epochs, cfg.learning_rate, cfg.batch_size),
            (9, 0.1, 2000)
        );
        let bad = TrainOverrides {
            batch_size: Some(0),
            ..Default::default()
        };
        assert!(bad.apply(TrainConfig::one_to_n()).is_err());
    }

    #[test]
    fn file_config_parses() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        fs::write(
            &p,
            r#"
method = "1ton-plus"
dim = 50
favored = ["glove"]

[[sets]]
name = "glove"
path = "glove.txt"
column_normalize = true

[[sets]]
name = "w2v"
path = "/abs/w2v.txt"
weight = 2.0
format = "header"

[train]
epochs = 3
seed = 7
"#,
        )
        .unwrap();
        let cfg = FileConfig::load(&p).unwrap();
        assert_eq!(cfg.method, Some(Method::OneToNPlus));
        assert_eq!(cfg.sets[0].path, dir.path().join("glove.txt"));
        assert_eq!(cfg.sets[1].path, PathBuf::from("/abs/w2v.txt"));
        assert_eq!(cfg.sets[1].format, Some(FormatChoice::Header));
        assert_eq!(cfg.train.seed, Some(7));

        fs::write(&p, "methd = \"svd\"\n").unwrap();
        assert!(FileConfig::load(&p).is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let a: SetSpec = "a=x.txt".parse().unwrap();
        assert!(merge_sets(&[a.clone(), a.clone()], &[]).is_err());
        assert_eq!(merge_sets(&[], std::slice::from_ref(&a)).unwrap(), vec![a]);
    }
}
