use rand::Rng;

use super::FlatModelConfig;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::matrix::{DocTopicMatrix, TopicWordMatrix};
use crate::rng::seeded;

/// Relative log-likelihood change below which EM stops.
pub const EM_TOLERANCE: f64 = 1e-6;

/// A document with fixed, possibly fractional, word counts that takes part
/// in training alongside the corpus.
pub type PseudoDoc = Vec<(u32, f64)>;

#[derive(Debug, Clone)]
pub struct EmFit {
    pub phi: TopicWordMatrix,
    /// Topic mixtures of the corpus documents.
    pub theta: DocTopicMatrix,
    /// Topic mixtures of the pseudo-documents, if any were given.
    pub pseudo_theta: Option<DocTopicMatrix>,
    /// Log-likelihood of corpus and pseudo-documents at every E-step.
    pub loglik_trace: Vec<f64>,
    /// Number of times an emptied topic column was reseeded.
    pub reseeded: usize,
}

impl EmFit {
    pub fn final_loglik(&self) -> f64 {
        self.loglik_trace.last().copied().unwrap_or(f64::NAN)
    }
}

fn random_column<R: Rng>(rng: &mut R, words: usize, topics: usize, t: usize, phi: &mut [f64]) {
    let mut sum = 0.0;
    for w in 0..words {
        let v = 1.0 + rng.random::<f64>();
        phi[w * topics + t] = v;
        sum += v;
    }
    for w in 0..words {
        phi[w * topics + t] /= sum;
    }
}

/// EM on the PLSA mixture. With `config.sparsing = τ > 0` every expected
/// word-topic count is replaced by `max(n_wt - τ, 0)` before normalization.
pub fn em_train(corpus: &Corpus, config: &FlatModelConfig, pseudo_docs: &[PseudoDoc]) -> Result<EmFit> {
    if config.topics == 0 || config.iterations == 0 || !(config.sparsing >= 0.0) {
        return Err(Error::Config(format!("invalid EM configuration {config:?}")));
    }
    let words = corpus.vocab_size();
    for doc in pseudo_docs {
        if let Some(&(w, _)) = doc.iter().find(|(w, _)| *w as usize >= words) {
            return Err(Error::IdOutOfRange {
                what: "pseudo-document term",
                id: w as usize,
                limit: words,
            });
        }
    }
    let t = config.topics;
    let bags: Vec<Vec<(u32, f64)>> = (0..corpus.num_docs())
        .map(|d| {
            corpus
                .doc_term_counts(d)
                .iter()
                .map(|&(w, n)| (w, n as f64))
                .collect()
        })
        .chain(pseudo_docs.iter().cloned())
        .collect();
    let docs = bags.len();

    let mut rng = seeded(config.seed);
    // φ word-major (w * T + t) for the E-step; θ document-major.
    let mut phi = vec![0.0; words * t];
    for k in 0..t {
        random_column(&mut rng, words, t, k, &mut phi);
    }
    let mut theta = vec![1.0 / t as f64; docs * t];

    let mut word_topic = vec![0.0; words * t];
    let mut doc_topic = vec![0.0; docs * t];
    let mut resp = vec![0.0; t];
    let mut trace = Vec::new();
    let mut reseeded = 0;

    for _ in 0..config.iterations {
        word_topic.iter_mut().for_each(|v| *v = 0.0);
        doc_topic.iter_mut().for_each(|v| *v = 0.0);
        let mut ll = 0.0;
        for (d, bag) in bags.iter().enumerate() {
            let th = &theta[d * t..(d + 1) * t];
            let dt = &mut doc_topic[d * t..(d + 1) * t];
            for &(w, n) in bag {
                let ph = &phi[w as usize * t..(w as usize + 1) * t];
                let mut z = 0.0;
                for k in 0..t {
                    resp[k] = ph[k] * th[k];
                    z += resp[k];
                }
                if z <= 0.0 {
                    continue;
                }
                ll += n * z.ln();
                let scale = n / z;
                let wt = &mut word_topic[w as usize * t..(w as usize + 1) * t];
                for k in 0..t {
                    let r = resp[k] * scale;
                    wt[k] += r;
                    dt[k] += r;
                }
            }
        }

        if config.sparsing > 0.0 {
            for v in word_topic.iter_mut() {
                *v = (*v - config.sparsing).max(0.0);
            }
        }
        let mut totals = vec![0.0; t];
        for w in 0..words {
            for k in 0..t {
                totals[k] += word_topic[w * t + k];
            }
        }
        for k in 0..t {
            if totals[k] > 0.0 {
                for w in 0..words {
                    phi[w * t + k] = word_topic[w * t + k] / totals[k];
                }
            } else {
                log::warn!("EM: topic {k} lost all mass; reseeding from uniform plus noise");
                random_column(&mut rng, words, t, k, &mut phi);
                reseeded += 1;
            }
        }
        for d in 0..docs {
            let dt = &doc_topic[d * t..(d + 1) * t];
            let s: f64 = dt.iter().sum();
            let th = &mut theta[d * t..(d + 1) * t];
            if s > 0.0 {
                th.iter_mut().zip(dt).for_each(|(a, b)| *a = b / s);
            }
        }

        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| ((ll - prev) / prev.abs()).abs() < EM_TOLERANCE);
        trace.push(ll);
        if converged {
            break;
        }
    }

    let mut cols = vec![0.0; words * t];
    for w in 0..words {
        for k in 0..t {
            cols[k * words + w] = phi[w * t + k];
        }
    }
    let n_corpus = corpus.num_docs();
    let pseudo_theta = (docs > n_corpus)
        .then(|| DocTopicMatrix::from_weights(t, docs - n_corpus, theta[n_corpus * t..].to_vec()));
    theta.truncate(n_corpus * t);
    Ok(EmFit {
        phi: TopicWordMatrix::from_weights(words, t, cols),
        theta: DocTopicMatrix::from_weights(t, n_corpus, theta),
        pseudo_theta,
        loglik_trace: trace,
        reseeded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Vocabulary};
    use crate::metrics::log_likelihood;

    fn corpus() -> Corpus {
        let vocab = Vocabulary::new((0..6).map(|i| format!("w{i}")).collect()).unwrap();
        let docs = (0..30)
            .map(|d| {
                let base = (d % 3) as u32 * 2;
                Document::new((0..9).map(|i| (base + ((d + i) % 2) as u32 + u32::from(i % 4 == 0)) % 6).collect())
            })
            .collect();
        Corpus::new(docs, vocab).unwrap()
    }

    #[test]
    fn single_topic_is_unigram() {
        let c = corpus();
        let fit = em_train(&c, &FlatModelConfig::em(1, 4), &[]).unwrap();
        let freq = c.term_frequencies();
        for (w, &f) in freq.iter().enumerate() {
            assert!((fit.phi.get(w, 0) - f as f64 / c.total_tokens() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn likelihood_non_decreasing() {
        let c = corpus();
        let mut cfg = FlatModelConfig::em(3, 8);
        cfg.iterations = 60;
        let fit = em_train(&c, &cfg, &[]).unwrap();
        for pair in fit.loglik_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "{pair:?}");
        }
    }

    #[test]
    fn trace_matches_metric_at_fixed_point() {
        let c = corpus();
        let mut cfg = FlatModelConfig::em(2, 2);
        cfg.iterations = 400;
        let fit = em_train(&c, &cfg, &[]).unwrap();
        let ll = log_likelihood(&fit.phi, &fit.theta, &c).unwrap().value;
        assert!((ll - fit.final_loglik()).abs() < 1e-3 * ll.abs());
        assert!(ll >= fit.final_loglik() - 1e-9);
    }

    #[test]
    fn pseudo_documents_get_their_own_theta() {
        let c = corpus();
        let pseudo = vec![vec![(0, 2.5), (1, 0.5)], vec![(4, 1.0)]];
        let fit = em_train(&c, &FlatModelConfig::em(3, 1), &pseudo).unwrap();
        let pt = fit.pseudo_theta.unwrap();
        assert_eq!(pt.docs(), 2);
        assert_eq!(fit.theta.docs(), c.num_docs());
    }

    #[test]
    fn pseudo_document_word_out_of_range() {
        let c = corpus();
        let pseudo = vec![vec![(99, 1.0)]];
        assert!(em_train(&c, &FlatModelConfig::em(2, 1), &pseudo).is_err());
    }

    #[test]
    fn heavy_sparsing_reseeds_columns() {
        let c = corpus();
        let mut cfg = FlatModelConfig::em(4, 3);
        cfg.sparsing = 1e6;
        cfg.iterations = 3;
        let fit = em_train(&c, &cfg, &[]).unwrap();
        assert!(fit.reseeded > 0);
        for col in fit.phi.columns() {
            assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }
}
