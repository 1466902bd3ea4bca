//! Flat topic models: collapsed Gibbs LDA and an EM (PLSA) trainer with an
//! optional sparsing regularizer. Both produce the `p(w|d) = Σ_t φ_wt θ_td`
//! factorization.

mod em;
mod lda;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use em::{em_train, EmFit, PseudoDoc, EM_TOLERANCE};
pub use lda::{lda_train, GibbsLdaState, LdaFit, LdaSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatModelConfig {
    pub topics: usize,
    pub alpha: f64,
    pub eta: f64,
    /// Gibbs sweeps, or the EM iteration cap.
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Count subtracted from every expected word-topic count (EM only).
    pub sparsing: f64,
}

impl FlatModelConfig {
    pub fn gibbs(topics: usize, seed: u64) -> Self {
        Self {
            topics,
            alpha: 0.1,
            eta: 0.01,
            iterations: 500,
            burn_in: 300,
            seed,
            sparsing: 0.0,
        }
    }

    pub fn em(topics: usize, seed: u64) -> Self {
        Self {
            iterations: 200,
            burn_in: 0,
            ..Self::gibbs(topics, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::Config("topic count must be at least 1".into()));
        }
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.alpha > 0.0 && self.eta > 0.0) {
            return Err(Error::Config("alpha and eta must be positive".into()));
        }
        if !(self.sparsing >= 0.0) {
            return Err(Error::Config("sparsing strength must be non-negative".into()));
        }
        Ok(())
    }
}
