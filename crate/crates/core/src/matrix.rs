//! Column-stochastic matrices Φ (words × topics) and Θ (topics × documents)
//! and their dense text format: a header line with the two dimensions, then
//! one line per row of space separated 9-significant-digit reals.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const COLUMN_TOLERANCE: f64 = 1e-8;

fn validate(data: &[f64], rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 || data.len() != rows * cols {
        return Err(Error::InvalidMatrix(format!(
            "{} entries for a {rows}x{cols} matrix",
            data.len()
        )));
    }
    for (c, col) in data.chunks_exact(rows).enumerate() {
        if let Some(v) = col.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("column {c} has entry {v}")));
        }
        let sum: f64 = col.iter().sum();
        if (sum - 1.0).abs() > COLUMN_TOLERANCE {
            return Err(Error::InvalidMatrix(format!("column {c} sums to {sum}")));
        }
    }
    Ok(())
}

/// Normalize every column of a non-negative column-major matrix in place.
/// Columns with zero mass become uniform.
pub(crate) fn normalize_columns(data: &mut [f64], rows: usize) {
    for col in data.chunks_exact_mut(rows) {
        let sum: f64 = col.iter().sum();
        if sum > 0.0 {
            col.iter_mut().for_each(|v| *v /= sum);
        } else {
            col.iter_mut().for_each(|v| *v = 1.0 / rows as f64);
        }
    }
}

fn write_dense(path: &Path, rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut go = || -> std::io::Result<()> {
        writeln!(out, "{rows} {cols}")?;
        for r in 0..rows {
            let line: Vec<String> = (0..cols).map(|c| format!("{:.8e}", at(r, c))).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()
    };
    go().map_err(|e| Error::io(path, e))
}

/// Returns `(rows, cols, column-major data)`.
fn read_dense(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, 1, "missing header"))?
        .map_err(|e| Error::io(path, e))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::format(path, 1, "bad header")))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::format(path, 1, "header must hold two dimensions"));
    };
    let mut data = vec![0.0; rows * cols];
    for r in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::format(path, r + 2, "missing row"))?
            .map_err(|e| Error::io(path, e))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::format(path, r + 2, "bad number")))
            .collect::<Result<_>>()?;
        if vals.len() != cols {
            return Err(Error::format(path, r + 2, format!("expected {cols} values")));
        }
        for (c, v) in vals.into_iter().enumerate() {
            data[c * rows + r] = v;
        }
    }
    Ok((rows, cols, data))
}

/// Φ: column `t` is the word distribution of topic `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicWordMatrix {
    words: usize,
    topics: usize,
    data: Vec<f64>,
}

impl TopicWordMatrix {
    /// `data` is column-major: `data[t * words + w] = φ_wt`.
    pub fn from_columns(words: usize, topics: usize, data: Vec<f64>) -> Result<Self> {
        validate(&data, words, topics)?;
        Ok(Self { words, topics, data })
    }

    pub fn from_column_vecs(columns: &[Vec<f64>]) -> Result<Self> {
        let words = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != words) {
            return Err(Error::InvalidMatrix("ragged columns".into()));
        }
        Self::from_columns(words, columns.len(), columns.concat())
    }

    /// Normalizes non-negative column-major weights; empty columns become uniform.
    pub(crate) fn from_weights(words: usize, topics: usize, mut data: Vec<f64>) -> Self {
        normalize_columns(&mut data, words);
        Self { words, topics, data }
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn get(&self, w: usize, t: usize) -> f64 {
        self.data[t * self.words + w]
    }

    pub fn column(&self, t: usize) -> &[f64] {
        &self.data[t * self.words..(t + 1) * self.words]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.words)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sub-matrix made of the listed columns.
    pub fn select_columns(&self, cols: impl IntoIterator<Item = usize>) -> Result<Self> {
        let data: Vec<f64> = cols.into_iter().flat_map(|t| self.column(t).to_vec()).collect();
        let topics = data.len() / self.words;
        Self::from_columns(self.words, topics, data)
    }

    /// Term ids of the `m` most probable words of topic `t`, ties broken by id.
    pub fn top_words(&self, t: usize, m: usize) -> Vec<u32> {
        let col = self.column(t);
        let mut ids: Vec<u32> = (0..self.words as u32).collect();
        ids.sort_by(|&a, &b| col[b as usize].total_cmp(&col[a as usize]).then(a.cmp(&b)));
        ids.truncate(m);
        ids
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_dense(path, self.words, self.topics, |w, t| self.get(w, t))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (rows, cols, data) = read_dense(path)?;
        Self::from_columns(rows, cols, data)
    }
}

/// Θ: column `d` is the topic distribution of document `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicMatrix {
    topics: usize,
    docs: usize,
    data: Vec<f64>,
}

impl DocTopicMatrix {
    /// `data` is column-major: `data[d * topics + t] = θ_td`.
    pub fn from_columns(topics: usize, docs: usize, data: Vec<f64>) -> Result<Self> {
        validate(&data, topics, docs)?;
        Ok(Self { topics, docs, data })
    }

    pub(crate) fn from_weights(topics: usize, docs: usize, mut data: Vec<f64>) -> Self {
        normalize_columns(&mut data, topics);
        Self { topics, docs, data }
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn docs(&self) -> usize {
        self.docs
    }

    pub fn get(&self, t: usize, d: usize) -> f64 {
        self.data[d * self.topics + t]
    }

    pub fn column(&self, d: usize) -> &[f64] {
        &self.data[d * self.topics..(d + 1) * self.topics]
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_dense(path, self.topics, self.docs, |t, d| self.get(t, d))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (rows, cols, data) = read_dense(path)?;
        Self::from_columns(rows, cols, data)
    }
}
