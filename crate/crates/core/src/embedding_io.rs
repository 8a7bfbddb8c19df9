//! Embedding sets and the plain-text vector format.
//!
//! One record per line: the token, then its values, separated by single
//! ASCII spaces. The header variant starts with a `<count> <dim>` line.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Significant digits written for every value.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// A named vocabulary with one `dim`-dimensional vector per word.
#[derive(Clone, Debug)]
pub struct EmbeddingSet {
    name: String,
    words: Vec<String>,
    matrix: DenseMatrix,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    /// Validates that words are unique, non-empty, and line up with the
    /// matrix rows.
    pub fn new(name: impl Into<String>, words: Vec<String>, matrix: DenseMatrix) -> Result<Self> {
        let name = name.into();
        let invalid = |message: String| Error::InvalidSet {
            name: name.clone(),
            message,
        };
        if words.is_empty() {
            return Err(invalid("no words".into()));
        }
        if matrix.cols() == 0 {
            return Err(invalid("zero-dimensional vectors".into()));
        }
        if words.len() != matrix.rows() {
            return Err(invalid(format!(
                "{} words but {} vectors",
                words.len(),
                matrix.rows()
            )));
        }
        if matrix.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite vector entry".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(invalid(format!("duplicate word `{w}`")));
            }
        }
        Ok(EmbeddingSet {
            name,
            words,
            matrix,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
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

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.matrix.row(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.words
            .iter()
            .enumerate()
            .map(move |(i, w)| (w.as_str(), self.matrix.row(i)))
    }

    /// Same words, different vectors.
    pub fn with_matrix(&self, matrix: DenseMatrix) -> Result<Self> {
        EmbeddingSet::new(self.name.clone(), self.words.clone(), matrix)
    }

    /// Sub-set restricted to `words`, in that order.
    pub fn subset(&self, words: &[String]) -> Result<Self> {
        let rows = words
            .iter()
            .map(|w| {
                self.index_of(w).ok_or_else(|| Error::MissingWord {
                    word: w.clone(),
                    set: self.name.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EmbeddingSet::new(
            self.name.clone(),
            words.to_vec(),
            self.matrix.select_rows(&rows),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VectorFileFormat {
    /// `word v1 v2 ...` on every line.
    #[default]
    Plain,
    /// A `count dim` line followed by plain records.
    WithHeader,
}

impl VectorFileFormat {
    /// Guesses the format from the first line: two unsigned integers mean a
    /// header.
    pub fn detect(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut first = String::new();
        BufReader::new(file)
            .read_line(&mut first)
            .map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = first.split_whitespace().collect();
        let is_header = fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok());
        Ok(if is_header {
            VectorFileFormat::WithHeader
        } else {
            VectorFileFormat::Plain
        })
    }
}

impl fmt::Display for VectorFileFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VectorFileFormat::Plain => "plain",
            VectorFileFormat::WithHeader => "header",
        })
    }
}

impl FromStr for VectorFileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" | "text" => Ok(VectorFileFormat::Plain),
            "header" | "with-header" => Ok(VectorFileFormat::WithHeader),
            other => Err(Error::InvalidConfig(format!(
                "unknown vector file format `{other}` (expected plain or header)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub records: usize,
    /// Records dropped because their word already appeared earlier.
    pub duplicates: usize,
}

pub fn load_embedding_set(
    path: impl AsRef<Path>,
    format: VectorFileFormat,
    name: &str,
) -> Result<EmbeddingSet> {
    load_embedding_set_with_stats(path, format, name).map(|(set, _)| set)
}

pub fn load_embedding_set_with_stats(
    path: impl AsRef<Path>,
    format: VectorFileFormat,
    name: &str,
) -> Result<(EmbeddingSet, LoadStats)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (set, stats) = read_embedding_set(BufReader::new(file), format, name, path)?;
    if stats.duplicates > 0 {
        warn!(
            "{}: dropped {} duplicate word(s), kept first occurrences",
            path.display(),
            stats.duplicates
        );
    }
    Ok((set, stats))
}

/// Parses vectors from any buffered reader; `path` is only used in errors.
pub fn read_embedding_set<R: BufRead>(
    reader: R,
    format: VectorFileFormat,
    name: &str,
    path: &Path,
) -> Result<(EmbeddingSet, LoadStats)> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut header: Option<(usize, usize)> = None;
    let mut dim: Option<usize> = None;
    let mut words = Vec::new();
    let mut data = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut stats = LoadStats::default();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n', ' ']);
        if line.is_empty() {
            continue;
        }
        if lineno == 1 && format == VectorFileFormat::WithHeader {
            let fields: Vec<&str> = line.split(' ').collect();
            let parsed: Vec<Option<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed.as_slice() {
                [Some(count), Some(d)] if *d > 0 => {
                    header = Some((*count, *d));
                    dim = Some(*d);
                }
                _ => return Err(parse_err(lineno, format!("malformed header `{line}`"))),
            }
            continue;
        }

        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        if word.is_empty() {
            return Err(parse_err(lineno, "record starts with a space".into()));
        }
        let start = data.len();
        for field in fields {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => {
                    return Err(parse_err(
                        lineno,
                        format!("`{field}` is not a finite number"),
                    ));
                }
            }
        }
        let found = data.len() - start;
        let expected = *dim.get_or_insert(found);
        if found != expected || found == 0 {
            return Err(Error::DimensionMismatch {
                path: path.to_path_buf(),
                line: lineno,
                expected,
                found,
            });
        }
        stats.records += 1;
        if seen.insert(word.to_owned(), ()).is_some() {
            stats.duplicates += 1;
            data.truncate(start);
            continue;
        }
        words.push(word.to_owned());
    }

    if let Some((count, _)) = header {
        if count != stats.records {
            return Err(parse_err(
                1,
                format!(
                    "header announces {count} records, file has {}",
                    stats.records
                ),
            ));
        }
    }
    let Some(dim) = dim else {
        return Err(Error::EmptyFile(path.to_path_buf()));
    };
    if words.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let matrix = DenseMatrix::from_vec(words.len(), dim, data)?;
    Ok((EmbeddingSet::new(name, words, matrix)?, stats))
}

pub fn save_embedding_set(
    set: &EmbeddingSet,
    path: impl AsRef<Path>,
    format: VectorFileFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_embedding_set(set, &mut w, format)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_embedding_set<W: Write>(
    set: &EmbeddingSet,
    w: &mut W,
    format: VectorFileFormat,
) -> std::io::Result<()> {
    if format == VectorFileFormat::WithHeader {
        writeln!(w, "{} {}", set.len(), set.dim())?;
    }
    let mut buf = String::new();
    for (word, row) in set.iter() {
        buf.clear();
        buf.push_str(word);
        for &v in row {
            buf.push(' ');
            push_value(&mut buf, v);
        }
        buf.push('\n');
        w.write_all(buf.as_bytes())?;
    }
    Ok(())
}

/// Appends `v` with [`SIGNIFICANT_DIGITS`] significant digits.
pub fn push_value(buf: &mut String, v: f64) {
    use std::fmt::Write as _;
    if v == 0.0 {
        buf.push('0');
    } else {
        let _ = write!(buf, "{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    }
}
