use rand::Rng;

use super::FlatModelConfig;
use crate::corpus::Corpus;
use crate::error::Result;
use crate::matrix::{DocTopicMatrix, TopicWordMatrix};
use crate::rng::{sample_weighted, seeded, ModelRng};

/// Assignments and counters of a collapsed Gibbs LDA chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsLdaState {
    pub topics: usize,
    pub words: usize,
    /// Topic of every token, per document.
    pub z: Vec<Vec<u16>>,
    /// `n_wt`, word-major (`w * T + t`).
    pub word_topic: Vec<u32>,
    /// `n_td`, document-major (`d * T + t`).
    pub doc_topic: Vec<u32>,
    pub topic_totals: Vec<u32>,
}

impl GibbsLdaState {
    /// Recounts everything from `z` and compares with the stored counters.
    pub fn check_invariants(&self, corpus: &Corpus) -> std::result::Result<(), String> {
        let t = self.topics;
        let mut wt = vec![0u32; self.words * t];
        let mut td = vec![0u32; corpus.num_docs() * t];
        let mut tot = vec![0u32; t];
        for (d, doc) in corpus.documents().iter().enumerate() {
            if self.z[d].len() != doc.len() {
                return Err(format!("document {d} has {} assignments", self.z[d].len()));
            }
            for (&w, &k) in doc.tokens().iter().zip(&self.z[d]) {
                wt[w as usize * t + k as usize] += 1;
                td[d * t + k as usize] += 1;
                tot[k as usize] += 1;
            }
        }
        if wt != self.word_topic {
            return Err("word-topic counts disagree with assignments".into());
        }
        if td != self.doc_topic {
            return Err("doc-topic counts disagree with assignments".into());
        }
        if tot != self.topic_totals {
            return Err("topic totals disagree with assignments".into());
        }
        for k in 0..t {
            let col: u32 = (0..self.words).map(|w| self.word_topic[w * t + k]).sum();
            if col != self.topic_totals[k] {
                return Err(format!("Σ_w n_wt != n_t for topic {k}"));
            }
        }
        for (d, doc) in corpus.documents().iter().enumerate() {
            let n: u32 = self.doc_topic[d * t..(d + 1) * t].iter().sum();
            if n as usize != doc.len() {
                return Err(format!("Σ_t n_td != N_d for document {d}"));
            }
        }
        let total: u64 = self.topic_totals.iter().map(|&x| x as u64).sum();
        if total as usize != corpus.total_tokens() {
            return Err("Σ n_t != total tokens".into());
        }
        Ok(())
    }
}

/// A running chain. Counters are averaged over every sweep after burn-in.
pub struct LdaSampler<'a> {
    corpus: &'a Corpus,
    config: FlatModelConfig,
    state: GibbsLdaState,
    rng: ModelRng,
    sweeps: usize,
    sum_word_topic: Vec<f64>,
    sum_doc_topic: Vec<f64>,
    samples: usize,
    weights: Vec<f64>,
}

impl<'a> LdaSampler<'a> {
    pub fn new(corpus: &'a Corpus, config: &FlatModelConfig) -> Result<Self> {
        config.validate()?;
        let t = config.topics;
        let w = corpus.vocab_size();
        let mut rng = seeded(config.seed);
        let mut state = GibbsLdaState {
            topics: t,
            words: w,
            z: Vec::with_capacity(corpus.num_docs()),
            word_topic: vec![0; w * t],
            doc_topic: vec![0; corpus.num_docs() * t],
            topic_totals: vec![0; t],
        };
        for (d, doc) in corpus.documents().iter().enumerate() {
            let z: Vec<u16> = doc
                .tokens()
                .iter()
                .map(|&word| {
                    let k = rng.random_range(0..t);
                    state.word_topic[word as usize * t + k] += 1;
                    state.doc_topic[d * t + k] += 1;
                    state.topic_totals[k] += 1;
                    k as u16
                })
                .collect();
            state.z.push(z);
        }
        Ok(Self {
            corpus,
            config: config.clone(),
            state,
            rng,
            sweeps: 0,
            sum_word_topic: vec![0.0; w * t],
            sum_doc_topic: vec![0.0; corpus.num_docs() * t],
            samples: 0,
            weights: vec![0.0; t],
        })
    }

    pub fn state(&self) -> &GibbsLdaState {
        &self.state
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// One full pass over every token.
    pub fn sweep(&mut self) {
        let t = self.config.topics;
        let alpha = self.config.alpha;
        let eta = self.config.eta;
        let w_eta = self.state.words as f64 * eta;
        let st = &mut self.state;
        for (d, doc) in self.corpus.documents().iter().enumerate() {
            let dt = &mut st.doc_topic[d * t..(d + 1) * t];
            for (n, &word) in doc.tokens().iter().enumerate() {
                let old = st.z[d][n] as usize;
                let wt = &mut st.word_topic[word as usize * t..(word as usize + 1) * t];
                wt[old] -= 1;
                dt[old] -= 1;
                st.topic_totals[old] -= 1;
                let mut total = 0.0;
                for k in 0..t {
                    let p = (dt[k] as f64 + alpha) * (wt[k] as f64 + eta)
                        / (st.topic_totals[k] as f64 + w_eta);
                    self.weights[k] = p;
                    total += p;
                }
                let new = sample_weighted(&self.weights, total, &mut self.rng);
                wt[new] += 1;
                dt[new] += 1;
                st.topic_totals[new] += 1;
                st.z[d][n] = new as u16;
            }
        }
        self.sweeps += 1;
        if self.sweeps > self.config.burn_in {
            for (s, &c) in self.sum_word_topic.iter_mut().zip(&st.word_topic) {
                *s += c as f64;
            }
            for (s, &c) in self.sum_doc_topic.iter_mut().zip(&st.doc_topic) {
                *s += c as f64;
            }
            self.samples += 1;
        }
    }

    pub fn run(&mut self) {
        while self.sweeps < self.config.iterations {
            self.sweep();
        }
    }

    /// Smoothed estimates from the averaged post-burn-in counters (the
    /// current counters when no sample was taken yet).
    pub fn estimate(&self) -> LdaFit {
        let t = self.config.topics;
        let w = self.state.words;
        let (wt, td): (Vec<f64>, Vec<f64>) = if self.samples == 0 {
            (
                self.state.word_topic.iter().map(|&c| c as f64).collect(),
                self.state.doc_topic.iter().map(|&c| c as f64).collect(),
            )
        } else {
            let s = self.samples as f64;
            (
                self.sum_word_topic.iter().map(|c| c / s).collect(),
                self.sum_doc_topic.iter().map(|c| c / s).collect(),
            )
        };
        let mut phi = vec![0.0; w * t];
        for word in 0..w {
            for k in 0..t {
                phi[k * w + word] = wt[word * t + k] + self.config.eta;
            }
        }
        let theta: Vec<f64> = td.iter().map(|c| c + self.config.alpha).collect();
        LdaFit {
            phi: TopicWordMatrix::from_weights(w, t, phi),
            theta: DocTopicMatrix::from_weights(t, self.corpus.num_docs(), theta),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LdaFit {
    pub phi: TopicWordMatrix,
    pub theta: DocTopicMatrix,
}

pub fn lda_train(corpus: &Corpus, config: &FlatModelConfig) -> Result<LdaFit> {
    let mut sampler = LdaSampler::new(corpus, config)?;
    sampler.run();
    Ok(sampler.estimate())
}
