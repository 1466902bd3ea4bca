//! Level-tied hierarchy: each level is a flat EM model, and every level
//! after the first is trained on the corpus plus one pseudo-document per
//! parent topic. A pseudo-document holds `τ · n_p · φ_wp` fractional counts,
//! so the child topics must explain the parents; the pseudo-documents'
//! topic mixtures give the interlevel matrix `Ψ[s, p] = p(child s | parent p)`.

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::flat::{em_train, FlatModelConfig, PseudoDoc};
use crate::matrix::{DocTopicMatrix, TopicWordMatrix};
use crate::metrics::{level_report, LevelEntropyReport};
use crate::rng::derive_seed;

/// Parents whose expected token mass is below this get no pseudo-document.
const MIN_PARENT_MASS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HartmConfig {
    /// Topic count per level, strictly increasing.
    pub levels: Vec<usize>,
    pub tau_link: f64,
    /// EM settings shared by all levels; `topics` and `seed` are set per level.
    pub em: FlatModelConfig,
    pub seed: u64,
}

impl HartmConfig {
    pub fn new(levels: Vec<usize>, seed: u64) -> Self {
        let first = levels.first().copied().unwrap_or(1);
        Self {
            levels,
            tau_link: 0.5,
            em: FlatModelConfig::em(first, seed),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.levels[0] == 0 {
            return Err(Error::Config("hARTM needs at least one level with topics".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "level topic counts must increase strictly: {:?}",
                self.levels
            )));
        }
        if !(self.tau_link >= 0.0) {
            return Err(Error::Config("tau_link must be non-negative".into()));
        }
        Ok(())
    }

    /// EM configuration of level `l` (0-based).
    pub fn level_config(&self, l: usize) -> FlatModelConfig {
        FlatModelConfig {
            topics: self.levels[l],
            seed: if l == 0 {
                self.seed
            } else {
                derive_seed(self.seed, &format!("hartm-level-{l}"))
            },
            ..self.em.clone()
        }
    }
}

/// `Ψ`: children × parents, parent columns stochastic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterLevelMatrix {
    children: usize,
    parents: usize,
    data: Vec<f64>,
}

impl InterLevelMatrix {
    pub fn from_columns(children: usize, parents: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != children * parents {
            return Err(Error::Dimension(format!(
                "{} entries for a {children}x{parents} matrix",
                data.len()
            )));
        }
        for (p, col) in data.chunks_exact(children).enumerate() {
            let sum: f64 = col.iter().sum();
            if col.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > crate::matrix::COLUMN_TOLERANCE {
                return Err(Error::InvalidMatrix(format!("Ψ column {p} sums to {sum}")));
            }
        }
        Ok(Self { children, parents, data })
    }

    pub fn uniform(children: usize, parents: usize) -> Self {
        Self {
            children,
            parents,
            data: vec![1.0 / children as f64; children * parents],
        }
    }

    pub fn children(&self) -> usize {
        self.children
    }

    pub fn parents(&self) -> usize {
        self.parents
    }

    pub fn get(&self, s: usize, p: usize) -> f64 {
        self.data[p * self.children + s]
    }

    pub fn column(&self, p: usize) -> &[f64] {
        &self.data[p * self.children..(p + 1) * self.children]
    }

    /// Parent with the largest `Ψ[s, p]` (first on ties), and that value.
    pub fn argmax_parent(&self, s: usize) -> (usize, f64) {
        (0..self.parents).fold((0, f64::NEG_INFINITY), |best, p| {
            let v = self.get(s, p);
            if v > best.1 {
                (p, v)
            } else {
                best
            }
        })
    }

    /// `child,parent,probability` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("child,parent,probability\n");
        for s in 0..self.children {
            for p in 0..self.parents {
                out.push_str(&format!("{s},{p},{:.9e}\n", self.get(s, p)));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct HartmLevel {
    pub phi: TopicWordMatrix,
    pub theta: DocTopicMatrix,
    /// Link to the previous level; `None` on the first level.
    pub psi: Option<InterLevelMatrix>,
    /// `‖φ_p − Σ_s φ_s Ψ[s,p]‖₁` per parent topic (empty on the first level).
    pub reconstruction_error: Vec<f64>,
    /// Parents whose `Ψ` column fell back to uniform.
    pub uniform_parents: Vec<usize>,
    pub loglik: f64,
}

#[derive(Debug, Clone)]
pub struct HartmResult {
    pub levels: Vec<HartmLevel>,
}

impl HartmResult {
    /// Per child of the last link: argmax parent and its probability.
    pub fn hierarchy_json(&self) -> serde_json::Value {
        let links: Vec<serde_json::Value> = self
            .levels
            .iter()
            .enumerate()
            .filter_map(|(l, lvl)| lvl.psi.as_ref().map(|psi| (l, psi)))
            .map(|(l, psi)| {
                let children: Vec<serde_json::Value> = (0..psi.children())
                    .map(|s| {
                        let (p, v) = psi.argmax_parent(s);
                        serde_json::json!({"child": s, "parent": p, "probability": v})
                    })
                    .collect();
                serde_json::json!({"level": l + 1, "children": children})
            })
            .collect();
        serde_json::json!({ "topic_counts": self.levels.iter().map(|l| l.phi.topics()).collect::<Vec<_>>(), "links": links })
    }

    pub fn mean_reconstruction_error(&self, level: usize) -> f64 {
        let e = &self.levels[level].reconstruction_error;
        e.iter().sum::<f64>() / e.len().max(1) as f64
    }
}

fn reconstruction_error(parent: &TopicWordMatrix, child: &TopicWordMatrix, psi: &InterLevelMatrix) -> Vec<f64> {
    (0..parent.topics())
        .map(|p| {
            let weights = psi.column(p);
            (0..parent.words())
                .map(|w| {
                    let approx: f64 = weights.iter().enumerate().map(|(s, &v)| v * child.get(w, s)).sum();
                    (parent.get(w, p) - approx).abs()
                })
                .sum()
        })
        .collect()
}

pub fn hartm_train(corpus: &Corpus, config: &HartmConfig) -> Result<HartmResult> {
    config.validate()?;
    let doc_lengths: Vec<f64> = corpus.documents().iter().map(|d| d.len() as f64).collect();
    let mut levels: Vec<HartmLevel> = Vec::with_capacity(config.levels.len());
    for l in 0..config.levels.len() {
        let cfg = config.level_config(l);
        let Some(parent) = levels.last() else {
            let fit = em_train(corpus, &cfg, &[])?;
            levels.push(HartmLevel {
                loglik: fit.final_loglik(),
                phi: fit.phi,
                theta: fit.theta,
                psi: None,
                reconstruction_error: Vec::new(),
                uniform_parents: Vec::new(),
            });
            continue;
        };
        let parents = parent.phi.topics();
        let mut pseudo: Vec<PseudoDoc> = Vec::new();
        let mut linked: Vec<Option<usize>> = vec![None; parents];
        if config.tau_link > 0.0 {
            for p in 0..parents {
                let mass: f64 = doc_lengths
                    .iter()
                    .enumerate()
                    .map(|(d, &n)| n * parent.theta.get(p, d))
                    .sum();
                if mass < MIN_PARENT_MASS {
                    log::warn!("hARTM: parent topic {p} carries no mass; its Ψ column is uniform");
                    continue;
                }
                let doc: PseudoDoc = parent
                    .phi
                    .column(p)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > 0.0)
                    .map(|(w, &v)| (w as u32, config.tau_link * mass * v))
                    .collect();
                linked[p] = Some(pseudo.len());
                pseudo.push(doc);
            }
        } else {
            log::warn!("hARTM: tau_link = 0, level {} is untied and Ψ is uniform", l + 1);
        }
        let fit = em_train(corpus, &cfg, &pseudo)?;
        let children = cfg.topics;
        let mut data = Vec::with_capacity(children * parents);
        let mut uniform_parents = Vec::new();
        for (p, slot) in linked.iter().enumerate() {
            match (slot, &fit.pseudo_theta) {
                (Some(i), Some(th)) => data.extend_from_slice(th.column(*i)),
                _ => {
                    uniform_parents.push(p);
                    data.extend(std::iter::repeat_n(1.0 / children as f64, children));
                }
            }
        }
        let psi = InterLevelMatrix::from_columns(children, parents, data)?;
        let err = reconstruction_error(&parent.phi, &fit.phi, &psi);
        levels.push(HartmLevel {
            loglik: fit.final_loglik(),
            phi: fit.phi,
            theta: fit.theta,
            psi: Some(psi),
            reconstruction_error: err,
            uniform_parents,
        });
    }
    Ok(HartmResult { levels })
}

/// Entropy report per level, tagged `1..=L`.
pub fn hartm_level_entropy(result: &HartmResult) -> Vec<LevelEntropyReport> {
    result
        .levels
        .iter()
        .enumerate()
        .map(|(l, lvl)| level_report(&lvl.phi, l + 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, PlantedSpec};

    fn planted() -> (Corpus, crate::corpus::PlantedHierarchy) {
        generate_synthetic(&PlantedSpec::new(2, 2, 0.4), 300, 40, 200, 0.02, 3).unwrap()
    }

    #[test]
    fn single_level_equals_em() {
        let (c, _) = planted();
        let cfg = HartmConfig::new(vec![3], 8);
        let r = hartm_train(&c, &cfg).unwrap();
        let fit = em_train(&c, &cfg.level_config(0), &[]).unwrap();
        assert_eq!(r.levels.len(), 1);
        assert_eq!(r.levels[0].phi, fit.phi);
        assert!(r.levels[0].psi.is_none());
    }

    #[test]
    fn psi_columns_stochastic_and_product_stochastic() {
        let (c, _) = planted();
        let r = hartm_train(&c, &HartmConfig::new(vec![2, 4], 1)).unwrap();
        let psi = r.levels[1].psi.as_ref().unwrap();
        assert_eq!((psi.children(), psi.parents()), (4, 2));
        let child = &r.levels[1].phi;
        for p in 0..2 {
            assert!((psi.column(p).iter().sum::<f64>() - 1.0).abs() < 1e-8);
            let total: f64 = (0..child.words())
                .map(|w| (0..4).map(|s| child.get(w, s) * psi.get(s, p)).sum::<f64>())
                .sum();
            assert!((total - 1.0).abs() < 1e-8);
        }
        assert_eq!(r.levels[1].reconstruction_error.len(), 2);
    }

    #[test]
    fn untied_levels_fall_back_to_uniform() {
        let (c, _) = planted();
        let mut cfg = HartmConfig::new(vec![2, 4], 1);
        cfg.tau_link = 0.0;
        let r = hartm_train(&c, &cfg).unwrap();
        assert_eq!(r.levels[1].uniform_parents, vec![0, 1]);
        assert_eq!(r.levels[1].psi.as_ref().unwrap(), &InterLevelMatrix::uniform(4, 2));
    }

    #[test]
    fn rejects_non_refining_levels() {
        let (c, _) = planted();
        assert!(hartm_train(&c, &HartmConfig::new(vec![4, 4], 1)).is_err());
        assert!(hartm_train(&c, &HartmConfig::new(vec![], 1)).is_err());
    }

    #[test]
    fn deterministic_and_reports_levels() {
        let (c, _) = planted();
        let cfg = HartmConfig::new(vec![2, 4], 6);
        let a = hartm_train(&c, &cfg).unwrap();
        let b = hartm_train(&c, &cfg).unwrap();
        assert_eq!(a.levels[1].phi, b.levels[1].phi);
        assert_eq!(a.levels[1].psi, b.levels[1].psi);
        let reports = hartm_level_entropy(&a);
        assert_eq!(reports.iter().map(|r| r.level).collect::<Vec<_>>(), vec![1, 2]);
        let csv = a.levels[1].psi.as_ref().unwrap().to_csv();
        assert_eq!(csv.lines().count(), 1 + 8);
        assert_eq!(a.hierarchy_json()["links"][0]["children"].as_array().unwrap().len(), 4);
    }
}
