//! Hierarchical topic models (hLDA, hPAM, level-tied EM) and the tooling to
//! tune them by sweeping topic counts and hyperparameters and scoring every
//! configuration with level-wise Renyi entropy.

pub mod corpus;
pub mod error;
pub mod flat;
pub mod hartm;
pub mod hlda;
pub mod hpam;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod special;
pub mod tuning;

pub use error::{Error, Result};
