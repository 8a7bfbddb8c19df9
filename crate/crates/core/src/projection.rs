//! Linear maps between embedding spaces and their text serialization.
//!
//! File layout: a header line `<source> <target> <rows> <cols> <train_loss>`
//! followed by `rows` lines of `cols` space-separated values, where the map
//! sends `cols`-dimensional source vectors to `rows`-dimensional targets.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::embedding_io::{push_value, EmbeddingSet};
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

/// `target ≈ m · source`, with `m` of shape `target_dim x source_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMap {
    pub source_set: String,
    pub target_set: String,
    pub m: DenseMatrix,
    pub train_loss: f64,
}

impl ProjectionMap {
    pub fn source_dim(&self) -> usize {
        self.m.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.m.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.source_dim() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.source_dim(),
            });
        }
        Ok(self.m.mul_vec(x))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        for name in [&self.source_set, &self.target_set] {
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::InvalidConfig(format!(
                    "set name `{name}` cannot be stored in a projection header"
                )));
            }
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut buf = String::new();
        push_value(&mut buf, self.train_loss);
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(
                w,
                "{} {} {} {} {}",
                self.source_set,
                self.target_set,
                self.m.rows(),
                self.m.cols(),
                buf
            )?;
            let mut line = String::new();
            for row in self.m.iter_rows() {
                line.clear();
                for (i, &v) in row.iter().enumerate() {
                    if i > 0 {
                        line.push(' ');
                    }
                    push_value(&mut line, v);
                }
                line.push('\n');
                w.write_all(line.as_bytes())?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::EmptyFile(path.to_path_buf()))?
            .map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [source, target, rows, cols, loss] = fields.as_slice() else {
            return Err(parse_err(
                1,
                "expected `source target rows cols loss`".into(),
            ));
        };
        let rows: usize = rows
            .parse()
            .map_err(|_| parse_err(1, "bad row count".into()))?;
        let cols: usize = cols
            .parse()
            .map_err(|_| parse_err(1, "bad column count".into()))?;
        let train_loss: f64 = loss.parse().map_err(|_| parse_err(1, "bad loss".into()))?;

        let mut data = Vec::with_capacity(rows * cols);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let before = data.len();
            for f in line.split_whitespace() {
                data.push(
                    f.parse::<f64>()
                        .map_err(|_| parse_err(lineno, format!("`{f}` is not a number")))?,
                );
            }
            if data.len() - before != cols {
                return Err(Error::DimensionMismatch {
                    path: path.to_path_buf(),
                    line: lineno,
                    expected: cols,
                    found: data.len() - before,
                });
            }
        }
        if data.len() != rows * cols {
            return Err(parse_err(
                1,
                format!(
                    "header announces {rows} rows, found {}",
                    data.len() / cols.max(1)
                ),
            ));
        }
        Ok(ProjectionMap {
            source_set: source.to_string(),
            target_set: target.to_string(),
            m: DenseMatrix::from_vec(rows, cols, data)?,
            train_loss,
        })
    }
}

/// Least-squares problem `Σ_w |M·x_w − y_w|² + λ‖M‖²_F` over the words two
/// embedding sets share.
#[derive(Debug)]
pub struct ProjectionProblem<'a> {
    sources: Vec<&'a [f64]>,
    targets: Vec<&'a [f64]>,
    source_dim: usize,
    target_dim: usize,
    l2_weight: f64,
}

impl<'a> ProjectionProblem<'a> {
    /// Shared words are visited in lexicographic order.
    pub fn new(source: &'a EmbeddingSet, target: &'a EmbeddingSet, l2_weight: f64) -> Result<Self> {
        let mut shared: Vec<(&str, usize, usize)> = source
            .words()
            .iter()
            .enumerate()
            .filter_map(|(i, w)| target.index_of(w).map(|j| (w.as_str(), i, j)))
            .collect();
        if shared.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        shared.sort_unstable_by(|a, b| a.0.cmp(b.0));
        Ok(ProjectionProblem {
            sources: shared
                .iter()
                .map(|&(_, i, _)| source.matrix().row(i))
                .collect(),
            targets: shared
                .iter()
                .map(|&(_, _, j)| target.matrix().row(j))
                .collect(),
            source_dim: source.dim(),
            target_dim: target.dim(),
            l2_weight,
        })
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Full objective on `batch`, penalty included.
    pub fn objective(&self, m: &DenseMatrix, batch: &[usize]) -> f64 {
        let data: f64 = batch.iter().map(|&w| self.example_loss(m, w)).sum();
        data + self.l2_weight * m.frobenius_norm().powi(2)
    }

    fn example_loss(&self, m: &DenseMatrix, w: usize) -> f64 {
        let x = self.sources[w];
        m.iter_rows()
            .zip(self.targets[w])
            .map(|(row, y)| {
                let r = dot(row, x) - y;
                r * r
            })
            .sum()
    }

    /// Writes the gradient of [`objective`](Self::objective) into `grad`
    /// and returns the summed data loss of the batch.
    pub fn gradient(&self, m: &DenseMatrix, batch: &[usize], grad: &mut DenseMatrix) -> f64 {
        debug_assert_eq!(m.shape(), (self.target_dim, self.source_dim));
        let lambda2 = 2.0 * self.l2_weight;
        for (g, &v) in grad.as_mut_slice().iter_mut().zip(m.as_slice()) {
            *g = lambda2 * v;
        }
        let mut loss = 0.0;
        for &w in batch {
            let x = self.sources[w];
            for (r, &y) in self.targets[w].iter().enumerate() {
                let resid = dot(m.row(r), x) - y;
                loss += resid * resid;
                let scale = 2.0 * resid;
                for (g, &xv) in grad.row_mut(r).iter_mut().zip(x) {
                    *g += scale * xv;
                }
            }
        }
        loss
    }
}
