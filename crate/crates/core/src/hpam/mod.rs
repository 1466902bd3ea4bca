//! Hierarchical Pachinko allocation ("model 2"): a root, `T_1` super-topics
//! and `T_2` sub-topics shared by every super-topic. Each token picks a cell
//! `(x, y)` of the grid: `x = 0` emits from the root, `(x, 0)` from
//! super-topic `x`, `(x, y)` from sub-topic `y` reached through `x`.
//!
//! Topic columns use one flat index: `k = 0` root, `k = x` super-topics,
//! `k = T_1 + y` sub-topics.

mod sampler;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::{DocTopicMatrix, TopicWordMatrix};
use crate::special::digamma;

pub use sampler::{HpamSampler, HpamState};

/// Floor applied to every optimized Dirichlet component.
pub const ALPHA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpamConfig {
    pub super_topics: usize,
    pub sub_topics: usize,
    pub eta: f64,
    /// Initial value of every α component.
    pub alpha_init: f64,
    pub iterations: usize,
    pub burn_in: usize,
    /// Sweeps between α updates once burn-in is over.
    pub alpha_interval: usize,
    /// Fixed-point steps per α update.
    pub alpha_steps: usize,
    pub seed: u64,
}

impl HpamConfig {
    pub fn new(super_topics: usize, sub_topics: usize, seed: u64) -> Self {
        Self {
            super_topics,
            sub_topics,
            eta: 0.01,
            alpha_init: 1.0,
            iterations: 500,
            burn_in: 300,
            alpha_interval: 25,
            alpha_steps: 5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.super_topics == 0 || self.sub_topics == 0 {
            return Err(Error::Config("hPAM needs at least one super- and one sub-topic".into()));
        }
        if self.super_topics >= u16::MAX as usize || self.sub_topics >= u16::MAX as usize {
            return Err(Error::Config("too many hPAM topics".into()));
        }
        if !(self.eta > 0.0 && self.alpha_init > 0.0) {
            return Err(Error::Config("eta and initial alpha must be positive".into()));
        }
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.alpha_interval == 0 || self.alpha_interval > self.iterations {
            return Err(Error::Config("alpha interval must be in 1..=iterations".into()));
        }
        Ok(())
    }

    /// Columns of the full topic matrix: root, super-topics, sub-topics.
    pub fn flat_topics(&self) -> usize {
        1 + self.super_topics + self.sub_topics
    }
}

/// One Minka fixed-point step for a Dirichlet-multinomial:
/// `α_k ← α_k Σ_d [Ψ(n_dk + α_k) − Ψ(α_k)] / Σ_d [Ψ(N_d + Σα) − Ψ(Σα)]`.
/// `counts` is row-major, one row of `alpha.len()` entries per document.
/// Components are clipped below at [`ALPHA_FLOOR`].
pub fn optimize_alpha(counts: &[u32], alpha: &[f64]) -> Vec<f64> {
    let k = alpha.len();
    assert!(k > 0 && counts.len() % k == 0, "count rows must match alpha length");
    let sum: f64 = alpha.iter().sum();
    let dg_sum = digamma(sum);
    let dg: Vec<f64> = alpha.iter().map(|&a| digamma(a)).collect();
    let mut num = vec![0.0; k];
    let mut den = 0.0;
    for row in counts.chunks_exact(k) {
        let n: u32 = row.iter().sum();
        if n == 0 {
            continue;
        }
        den += digamma(n as f64 + sum) - dg_sum;
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                num[j] += digamma(c as f64 + alpha[j]) - dg[j];
            }
        }
    }
    if den <= 0.0 {
        return alpha.to_vec();
    }
    alpha
        .iter()
        .zip(&num)
        .map(|(&a, &nu)| (a * nu / den).max(ALPHA_FLOOR))
        .collect()
}

/// Smoothed topic-word matrix `(c_wk + η) / (Σ_v c_vk + W η)` from
/// word-major counts `c[w * K + k]`.
pub fn estimate_phi_hpam(counts: &[u32], words: usize, eta: f64) -> Result<TopicWordMatrix> {
    if words == 0 || counts.len() % words != 0 {
        return Err(Error::Dimension(format!("{} counts for {words} words", counts.len())));
    }
    let k = counts.len() / words;
    let mut totals = vec![0u64; k];
    for w in 0..words {
        for t in 0..k {
            totals[t] += counts[w * k + t] as u64;
        }
    }
    let mut data = vec![0.0; words * k];
    for t in 0..k {
        let z = totals[t] as f64 + eta * words as f64;
        for w in 0..words {
            data[t * words + w] = (counts[w * k + t] as f64 + eta) / z;
        }
    }
    TopicWordMatrix::from_columns(words, k, data)
}

#[derive(Debug, Clone)]
pub struct HpamResult {
    /// `W × (1 + T_1 + T_2)` in flat-index order.
    pub phi_full: TopicWordMatrix,
    /// Super-topic block (level 2).
    pub phi_super: TopicWordMatrix,
    /// Sub-topic block (level 3).
    pub phi_sub: TopicWordMatrix,
    /// Per-document distribution over root and super-topics.
    pub theta_root: DocTopicMatrix,
    pub alpha_root: Vec<f64>,
    /// `α_x` for each super-topic, each of length `T_2 + 1`.
    pub alpha_super: Vec<Vec<f64>>,
    /// `(sweep, log-likelihood)` pairs.
    pub loglik_trace: Vec<(usize, f64)>,
}

impl HpamResult {
    /// Header line naming every column of `phi_full` as `k:level:topic`.
    pub fn column_map(&self) -> String {
        let t1 = self.phi_super.topics();
        let t2 = self.phi_sub.topics();
        let mut parts = vec!["0:root:0".to_string()];
        parts.extend((1..=t1).map(|x| format!("{x}:super:{}", x - 1)));
        parts.extend((1..=t2).map(|y| format!("{}:sub:{}", t1 + y, y - 1)));
        parts.join(" ")
    }

    pub fn final_loglik(&self) -> f64 {
        self.loglik_trace.last().map_or(f64::NAN, |&(_, ll)| ll)
    }
}

pub fn hpam_train(corpus: &Corpus, config: &HpamConfig) -> Result<HpamResult> {
    let mut sampler = HpamSampler::new(corpus, config)?;
    sampler.run();
    sampler.result()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn phi_smoothing_examples() {
        let phi = estimate_phi_hpam(&[0, 0, 0, 0], 2, 0.5).unwrap();
        assert_eq!(phi.column(0), &[0.5, 0.5]);
        let phi = estimate_phi_hpam(&[2, 0], 2, 1.0).unwrap();
        assert_abs_diff_eq!(phi.get(0, 0), 0.75, epsilon = 1e-15);
        let phi = estimate_phi_hpam(&[3, 1], 2, 1e-12).unwrap();
        assert_abs_diff_eq!(phi.get(1, 0), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn single_topic_documents_grow_alpha() {
        let counts: Vec<u32> = (0..50).flat_map(|_| [10u32, 0]).collect();
        let mut alpha = vec![1.0, 1.0];
        let mut prev = alpha[0];
        for _ in 0..10 {
            alpha = optimize_alpha(&counts, &alpha);
            assert!(alpha[0] > prev);
            prev = alpha[0];
        }
        assert_eq!(alpha[1], ALPHA_FLOOR);
    }

    #[test]
    fn empty_documents_leave_alpha_alone() {
        assert_eq!(optimize_alpha(&[0, 0, 0, 0], &[0.3, 0.7]), vec![0.3, 0.7]);
    }

    #[test]
    fn column_map_header() {
        let phi = |k| TopicWordMatrix::from_column_vecs(&vec![vec![0.5, 0.5]; k]).unwrap();
        let r = HpamResult {
            phi_full: phi(4),
            phi_super: phi(2),
            phi_sub: phi(1),
            theta_root: DocTopicMatrix::from_columns(3, 1, vec![1.0, 0.0, 0.0]).unwrap(),
            alpha_root: vec![1.0; 3],
            alpha_super: vec![vec![1.0; 2]; 2],
            loglik_trace: vec![],
        };
        assert_eq!(r.column_map(), "0:root:0 1:super:0 2:super:1 3:sub:0");
    }
}
