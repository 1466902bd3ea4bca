//! Synthetic corpora with a planted two-level topic hierarchy.
//!
//! Every parent and every child topic owns a disjoint contiguous block of
//! term ids (parents first, then children in parent-major order). A document
//! picks one `(parent, child)` pair uniformly and draws each token from the
//! parent block with probability `parent_word_share`, uniformly over the
//! whole vocabulary with probability `noise`, and from the child block
//! otherwise. Inside a block, words follow a Zipf law with exponent
//! `block_zipf` (0 gives a uniform block).

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub level1_count: usize,
    pub children_per_parent: usize,
    pub parent_word_share: f64,
    #[serde(default = "default_zipf")]
    pub block_zipf: f64,
}

fn default_zipf() -> f64 {
    1.0
}

impl PlantedSpec {
    pub fn new(level1_count: usize, children_per_parent: usize, parent_word_share: f64) -> Self {
        Self {
            level1_count,
            children_per_parent,
            parent_word_share,
            block_zipf: default_zipf(),
        }
    }

    /// A flat corpus of `topics` topics: one child per parent, all non-noise
    /// mass on the parent block.
    pub fn flat(topics: usize, noise: f64) -> Self {
        Self::new(topics, 1, 1.0 - noise)
    }

    pub fn num_children(&self) -> usize {
        self.level1_count * self.children_per_parent
    }

    fn num_blocks(&self) -> usize {
        self.level1_count + self.num_children()
    }
}

/// The generating structure and the per-document labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedHierarchy {
    pub spec: PlantedSpec,
    pub vocab: usize,
    pub noise: f64,
    pub block_size: usize,
    /// Parent id of every document.
    pub level1: Vec<usize>,
    /// Global child id (`parent * children_per_parent + local`) of every document.
    pub level2: Vec<usize>,
}

impl PlantedHierarchy {
    pub fn parent_block(&self, p: usize) -> Range<u32> {
        let start = (p * self.block_size) as u32;
        start..start + self.block_size as u32
    }

    pub fn child_block(&self, s: usize) -> Range<u32> {
        let start = ((self.spec.level1_count + s) * self.block_size) as u32;
        start..start + self.block_size as u32
    }

    pub fn parent_of(&self, s: usize) -> usize {
        s / self.spec.children_per_parent
    }

    fn block_weights(&self) -> Vec<f64> {
        (1..=self.block_size)
            .map(|r| (r as f64).powf(-self.spec.block_zipf))
            .collect()
    }

    fn block_distribution(&self, range: Range<u32>, mass: f64, out: &mut [f64]) {
        let weights = self.block_weights();
        let total: f64 = weights.iter().sum();
        for (w, wt) in range.zip(weights) {
            out[w as usize] += mass * wt / total;
        }
    }

    /// Word distribution a document with this child label is drawn from.
    pub fn child_word_distribution(&self, s: usize) -> Vec<f64> {
        let mut out = vec![self.noise / self.vocab as f64; self.vocab];
        let p = self.parent_of(s);
        let share = self.spec.parent_word_share;
        self.block_distribution(self.parent_block(p), share, &mut out);
        self.block_distribution(self.child_block(s), 1.0 - share - self.noise, &mut out);
        out
    }

    /// Mixture of the children's word distributions.
    pub fn parent_word_distribution(&self, p: usize) -> Vec<f64> {
        let c = self.spec.children_per_parent;
        let mut out = vec![0.0; self.vocab];
        for s in p * c..(p + 1) * c {
            for (o, v) in out.iter_mut().zip(self.child_word_distribution(s)) {
                *o += v / c as f64;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn generate_synthetic(
    spec: &PlantedSpec,
    docs: usize,
    doc_len: usize,
    vocab: usize,
    noise: f64,
    seed: u64,
) -> Result<(Corpus, PlantedHierarchy)> {
    if spec.level1_count == 0 || spec.children_per_parent == 0 {
        return Err(Error::Config("planted hierarchy needs at least one parent and child".into()));
    }
    if spec.num_children() > vocab / 10 {
        return Err(Error::Config(format!(
            "{} child topics need a vocabulary of at least {}",
            spec.num_children(),
            spec.num_children() * 10
        )));
    }
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::Config(format!("noise {noise} outside [0, 1)")));
    }
    let share = spec.parent_word_share;
    if !(0.0..=1.0).contains(&share) || share + noise > 1.0 + 1e-12 {
        return Err(Error::Config(format!(
            "parent_word_share {share} with noise {noise} exceeds total mass"
        )));
    }
    if docs == 0 || doc_len == 0 {
        return Err(Error::Config("docs and doc_len must be positive".into()));
    }
    if !(spec.block_zipf >= 0.0) {
        return Err(Error::Config("block_zipf must be non-negative".into()));
    }
    let block_size = vocab / spec.num_blocks();

    let mut planted = PlantedHierarchy {
        spec: spec.clone(),
        vocab,
        noise,
        block_size,
        level1: Vec::with_capacity(docs),
        level2: Vec::with_capacity(docs),
    };
    let in_block = WeightedAliasIndex::new(planted.block_weights())
        .map_err(|e| Error::Config(format!("block weights: {e}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = spec.children_per_parent;
    let mut documents = Vec::with_capacity(docs);
    for _ in 0..docs {
        let p = rng.random_range(0..spec.level1_count);
        let s = p * c + rng.random_range(0..c);
        let parent = planted.parent_block(p).start;
        let child = planted.child_block(s).start;
        let tokens = (0..doc_len)
            .map(|_| {
                let u: f64 = rng.random();
                if u < share {
                    parent + in_block.sample(&mut rng) as u32
                } else if u < 1.0 - noise {
                    child + in_block.sample(&mut rng) as u32
                } else {
                    rng.random_range(0..vocab as u32)
                }
            })
            .collect();
        documents.push(Document::new(tokens));
        planted.level1.push(p);
        planted.level2.push(s);
    }

    let width = vocab.to_string().len();
    let terms = (0..vocab).map(|i| format!("w{i:0width$}")).collect();
    let corpus = Corpus::new(documents, Vocabulary::new(terms)?)?;
    Ok((corpus, planted))
}
