//! Hierarchical LDA with a nested Chinese restaurant process prior.
//!
//! Every document follows one root-to-leaf path of `L` topics; each token
//! picks a level on that path. Collapsed Gibbs alternates path moves for
//! whole documents with level moves for single tokens.

mod sampler;
mod tree;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::matrix::TopicWordMatrix;

pub use sampler::{
    level_weights, path_candidates, HldaSampler, HldaState, LevelWordCounts, PathCandidate,
};
pub use tree::{NcrpTree, Node, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HldaConfig {
    /// Number of levels `L`, root included.
    pub depth: usize,
    pub gamma: f64,
    pub eta: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl HldaConfig {
    pub fn new(depth: usize, seed: u64) -> Self {
        Self {
            depth,
            gamma: 1.0,
            eta: 0.1,
            alpha: 1.0,
            iterations: 1000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::Config(format!("hLDA depth must be at least 2, got {}", self.depth)));
        }
        if self.depth > u8::MAX as usize {
            return Err(Error::Config("hLDA depth too large".into()));
        }
        if !(self.gamma > 0.0 && self.eta > 0.0 && self.alpha > 0.0) {
            return Err(Error::Config("gamma, eta and alpha must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        Ok(())
    }
}

/// nCRP seating probabilities for an arriving customer: one entry per
/// occupied table (`m_i / (γ + m − 1)`), then the new table (`γ / (γ + m − 1)`).
pub fn ncrp_table_probabilities(counts: &[usize], gamma: f64) -> Vec<f64> {
    let seated: usize = counts.iter().sum();
    let z = gamma + seated as f64;
    counts
        .iter()
        .map(|&m| m as f64 / z)
        .chain(std::iter::once(gamma / z))
        .collect()
}

/// Smoothed topic column `(c_w + η) / (Σ_v c_v + V η)`.
pub fn estimate_phi_hlda(counts: &[u32], eta: f64) -> Vec<f64> {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let z = total as f64 + eta * counts.len() as f64;
    counts.iter().map(|&c| (c as f64 + eta) / z).collect()
}

#[derive(Debug, Clone)]
pub struct HldaResult {
    pub tree: NcrpTree,
    pub paths: Vec<Vec<NodeId>>,
    /// One matrix per level, columns in increasing node id order.
    pub phi_levels: Vec<TopicWordMatrix>,
    pub level_nodes: Vec<Vec<NodeId>>,
    pub topic_counts: Vec<usize>,
    pub loglik_trace: Vec<f64>,
}

impl HldaResult {
    /// Node dump with the top words of every topic.
    pub fn tree_json(&self, vocab: &Vocabulary, top: usize) -> serde_json::Value {
        let mut nodes = Vec::new();
        for (level, ids) in self.level_nodes.iter().enumerate() {
            for (col, &id) in ids.iter().enumerate() {
                let node = self.tree.node(id);
                let words: Vec<&str> = self.phi_levels[level]
                    .top_words(col, top)
                    .into_iter()
                    .map(|w| vocab.term(w))
                    .collect();
                nodes.push(json!({
                    "id": id,
                    "parent": node.parent,
                    "level": level + 1,
                    "customers": node.customers,
                    "top_words": words,
                }));
            }
        }
        json!({ "topic_counts": self.topic_counts, "nodes": nodes })
    }
}

pub fn hlda_train(corpus: &Corpus, config: &HldaConfig) -> Result<HldaResult> {
    let mut sampler = HldaSampler::new(corpus, config)?;
    sampler.run();
    Ok(sampler.result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_customer_opens_a_table() {
        assert_eq!(ncrp_table_probabilities(&[], 0.7), vec![1.0]);
    }

    #[test]
    fn seating_probabilities() {
        let p = ncrp_table_probabilities(&[2, 1], 1.0);
        assert_eq!(p, vec![0.5, 0.25, 0.25]);
        let tiny = ncrp_table_probabilities(&[3, 4], 1e-12);
        assert!(tiny[2] < 1e-12);
        assert_abs_diff_eq!(tiny.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn smoothing_column() {
        assert_eq!(estimate_phi_hlda(&[0, 0, 0, 0], 0.3), vec![0.25; 4]);
        let c = estimate_phi_hlda(&[2, 0], 1.0);
        assert_abs_diff_eq!(c[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(c[1], 0.25, epsilon = 1e-15);
        let c = estimate_phi_hlda(&[3, 1], 1e-12);
        assert_abs_diff_eq!(c[0], 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(c[1], 0.25, epsilon = 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(HldaConfig::new(1, 0).validate().is_err());
        let mut c = HldaConfig::new(3, 0);
        c.gamma = 0.0;
        assert!(c.validate().is_err());
        assert!(HldaConfig::new(3, 0).validate().is_ok());
    }
}
