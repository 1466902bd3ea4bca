//! Level-wise Renyi entropy and the classical quality metrics
//! (log-likelihood, perplexity, coherence).
//!
//! For a level with `T` topics over `W` words, only entries strictly above
//! the uniform threshold `1/W` count: `N` is their number and `P̃` their
//! total probability. With `q = 1/T`, `ρ = N/(WT)`:
//!
//! ```text
//! E   = -ln(P̃/T)        S = ln ρ
//! S^R = (q ln(q P̃) + q⁻¹ ln ρ) / (q - 1)
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::{DocTopicMatrix, TopicWordMatrix};

/// `(N, P̃)`: number and total mass of entries with `φ_wt > 1/W`.
pub fn threshold_stats(phi: &TopicWordMatrix) -> (usize, f64) {
    let threshold = 1.0 / phi.words() as f64;
    phi.as_slice()
        .iter()
        .filter(|&&p| p > threshold)
        .fold((0, 0.0), |(n, mass), &p| (n + 1, mass + p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEntropyReport {
    pub level: usize,
    pub topics: usize,
    pub words: usize,
    /// Entries above the `1/W` threshold.
    pub above_threshold: usize,
    /// Summed probability of those entries.
    pub mass: f64,
    pub q: f64,
    pub energy: f64,
    pub shannon: f64,
    /// `-qE + S`.
    pub free_energy: f64,
    /// `E - T S`.
    pub level_free_energy: f64,
    pub renyi: f64,
}

impl LevelEntropyReport {
    /// No word exceeds the uniform threshold; `renyi` is `+∞`.
    pub fn is_degenerate(&self) -> bool {
        self.above_threshold == 0 || self.mass <= 0.0
    }

    pub const CSV_HEADER: &'static str = "level,T,N,Ptilde,energy,shannon,renyi";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.level,
            self.topics,
            self.above_threshold,
            fixed6(self.mass),
            fixed6(self.energy),
            fixed6(self.shannon),
            fixed6(self.renyi)
        )
    }
}

pub(crate) fn fixed6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Closed-form Renyi entropy from the level statistics.
pub fn renyi_from_stats(topics: usize, words: usize, above: usize, mass: f64) -> f64 {
    if above == 0 || mass <= 0.0 {
        return f64::INFINITY;
    }
    let t = topics as f64;
    let q = 1.0 / t;
    let rho = above as f64 / (words as f64 * t);
    (q * (q * mass).ln() + rho.ln() / q) / (q - 1.0)
}

/// Entropy report for one hierarchy level (index 0 in the report; see
/// [`level_entropy`] to tag it). Requires `T ≥ 2`.
pub fn renyi_entropy(phi: &TopicWordMatrix) -> Result<LevelEntropyReport> {
    level_entropy(phi, 0)
}

pub fn level_entropy(phi: &TopicWordMatrix, level: usize) -> Result<LevelEntropyReport> {
    let topics = phi.topics();
    if topics < 2 {
        return Err(Error::SingularDeformation(topics));
    }
    Ok(level_report(phi, level))
}

/// Same as [`level_entropy`], except that a one-topic level (`q = 1`) gets
/// the `+∞` sentinel instead of an error.
pub fn level_report(phi: &TopicWordMatrix, level: usize) -> LevelEntropyReport {
    let topics = phi.topics();
    let words = phi.words();
    let (above, mass) = threshold_stats(phi);
    let t = topics as f64;
    let q = 1.0 / t;
    let energy = -(mass / t).ln();
    let shannon = (above as f64 / (words as f64 * t)).ln();
    LevelEntropyReport {
        level,
        topics,
        words,
        above_threshold: above,
        mass,
        q,
        energy,
        shannon,
        free_energy: -q * energy + shannon,
        level_free_energy: energy - t * shannon,
        renyi: if topics < 2 {
            f64::INFINITY
        } else {
            renyi_from_stats(topics, words, above, mass)
        },
    }
}

/// Corpus log-likelihood `Σ_d Σ_w n_dw ln Σ_t φ_wt θ_td`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    /// `-∞` as soon as one token has zero mixture mass.
    pub value: f64,
    /// Tokens whose mixture probability is exactly zero.
    pub zero_mass_tokens: u64,
}

pub fn log_likelihood(
    phi: &TopicWordMatrix,
    theta: &DocTopicMatrix,
    corpus: &Corpus,
) -> Result<LogLikelihood> {
    if phi.words() != corpus.vocab_size() {
        return Err(Error::Dimension(format!(
            "Φ has {} words, corpus has {}",
            phi.words(),
            corpus.vocab_size()
        )));
    }
    if theta.docs() != corpus.num_docs() || theta.topics() != phi.topics() {
        return Err(Error::Dimension(format!(
            "Θ is {}x{}, expected {}x{}",
            theta.topics(),
            theta.docs(),
            phi.topics(),
            corpus.num_docs()
        )));
    }
    let mut value = 0.0;
    let mut zero_mass_tokens = 0;
    for d in 0..corpus.num_docs() {
        let th = theta.column(d);
        for &(w, n) in corpus.doc_term_counts(d) {
            let p: f64 = th
                .iter()
                .enumerate()
                .map(|(t, &x)| phi.get(w as usize, t) * x)
                .sum();
            if p > 0.0 {
                value += n as f64 * p.ln();
            } else {
                zero_mass_tokens += n as u64;
            }
        }
    }
    if zero_mass_tokens > 0 {
        value = f64::NEG_INFINITY;
    }
    Ok(LogLikelihood {
        value,
        zero_mass_tokens,
    })
}

pub fn perplexity(phi: &TopicWordMatrix, theta: &DocTopicMatrix, corpus: &Corpus) -> Result<f64> {
    let ll = log_likelihood(phi, theta, corpus)?;
    Ok((-ll.value / corpus.total_tokens() as f64).exp())
}

/// Document-frequency index for co-occurrence counts.
pub struct DocFrequencies {
    postings: Vec<Vec<u32>>,
}

impl DocFrequencies {
    pub fn new(corpus: &Corpus) -> Self {
        let mut postings = vec![Vec::new(); corpus.vocab_size()];
        for d in 0..corpus.num_docs() {
            for &(w, _) in corpus.doc_term_counts(d) {
                postings[w as usize].push(d as u32);
            }
        }
        Self { postings }
    }

    pub fn df(&self, w: u32) -> usize {
        self.postings[w as usize].len()
    }

    pub fn co_df(&self, a: u32, b: u32) -> usize {
        let (x, y) = (&self.postings[a as usize], &self.postings[b as usize]);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    /// `Σ_{m≥2} Σ_{l<m} ln((D(v_m, v_l) + 1) / D(v_l))`.
    pub fn coherence(&self, top_words: &[u32]) -> Result<f64> {
        if top_words.len() < 2 {
            return Err(Error::Config("coherence needs at least 2 words".into()));
        }
        if let Some(&w) = top_words.iter().find(|&&w| w as usize >= self.postings.len()) {
            return Err(Error::IdOutOfRange {
                what: "term",
                id: w as usize,
                limit: self.postings.len(),
            });
        }
        if let Some(&w) = top_words.iter().find(|&&w| self.df(w) == 0) {
            return Err(Error::AbsentWord(w));
        }
        let mut score = 0.0;
        for m in 1..top_words.len() {
            for l in 0..m {
                let co = self.co_df(top_words[m], top_words[l]) as f64;
                score += ((co + 1.0) / self.df(top_words[l]) as f64).ln();
            }
        }
        Ok(score)
    }
}

pub fn coherence(top_words: &[u32], corpus: &Corpus) -> Result<f64> {
    DocFrequencies::new(corpus).coherence(top_words)
}

pub const DEFAULT_COHERENCE_WORDS: usize = 10;

/// Average coherence over the top-`m` words of every topic.
pub fn mean_topic_coherence(phi: &TopicWordMatrix, corpus: &Corpus, m: usize) -> Result<f64> {
    let index = DocFrequencies::new(corpus);
    let mut total = 0.0;
    for t in 0..phi.topics() {
        total += index.coherence(&phi.top_words(t, m))?;
    }
    Ok(total / phi.topics() as f64)
}

/// CSV with a header and one row per report.
pub fn reports_to_csv(reports: &[LevelEntropyReport]) -> String {
    let mut s = String::from(LevelEntropyReport::CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}
