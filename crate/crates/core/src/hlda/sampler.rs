use rand::Rng;

use super::tree::{NcrpTree, NodeId};
use super::{estimate_phi_hlda, HldaConfig, HldaResult};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::matrix::TopicWordMatrix;
use crate::rng::{sample_log_weighted, sample_weighted, seeded, ModelRng};
use crate::special::ln_gamma;

/// A document's tokens grouped by level: sorted `(word, count)` per level.
pub type LevelWordCounts = Vec<Vec<(u32, u32)>>;

/// One scored option for a document's path. `nodes` holds the existing
/// nodes from the root down; when it is shorter than the depth the path
/// continues with fresh nodes below its last entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCandidate {
    pub nodes: Vec<NodeId>,
    pub log_prior: f64,
    pub log_likelihood: f64,
}

impl PathCandidate {
    pub fn log_score(&self) -> f64 {
        self.log_prior + self.log_likelihood
    }
}

/// `ln [B(b + b^d + η) / B(b + η)]` for one node, from its counters
/// (`None` for a fresh node) and the document's words at that level.
fn node_log_likelihood(node: Option<(&[u32], u32)>, words: &[(u32, u32)], eta: f64, vocab: usize) -> f64 {
    if words.is_empty() {
        return 0.0;
    }
    let n: u32 = words.iter().map(|&(_, c)| c).sum();
    let v_eta = vocab as f64 * eta;
    let (s, counts) = match node {
        Some((counts, total)) => (total as f64, Some(counts)),
        None => (0.0, None),
    };
    let mut score = ln_gamma(s + v_eta) - ln_gamma(s + n as f64 + v_eta);
    for &(w, c) in words {
        let b = counts.map_or(0.0, |b| b[w as usize] as f64);
        score += ln_gamma(b + c as f64 + eta) - ln_gamma(b + eta);
    }
    score
}

/// Every path a document (already removed from `tree`) can take: each
/// existing root-to-leaf path, plus one fresh branch below every internal
/// node.
pub fn path_candidates(tree: &NcrpTree, doc: &LevelWordCounts, gamma: f64, eta: f64) -> Vec<PathCandidate> {
    let depth = tree.depth();
    let vocab = tree.words();
    // Likelihood of a chain of fresh nodes from each level down to the leaf.
    let mut fresh_tail = vec![0.0; depth + 1];
    for l in (0..depth).rev() {
        fresh_tail[l] = fresh_tail[l + 1] + node_log_likelihood(None, &doc[l], eta, vocab);
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(depth);
    walk(tree, NcrpTree::ROOT, 0.0, 0.0, doc, gamma, eta, &fresh_tail, &mut prefix, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn walk(
    tree: &NcrpTree,
    id: NodeId,
    prior: f64,
    lik: f64,
    doc: &LevelWordCounts,
    gamma: f64,
    eta: f64,
    fresh_tail: &[f64],
    prefix: &mut Vec<NodeId>,
    out: &mut Vec<PathCandidate>,
) {
    let node = tree.node(id);
    let lik = lik + node_log_likelihood(Some((&node.word_counts, node.total)), &doc[node.level], eta, tree.words());
    prefix.push(id);
    if node.level + 1 == tree.depth() {
        out.push(PathCandidate {
            nodes: prefix.clone(),
            log_prior: prior,
            log_likelihood: lik,
        });
    } else {
        let z = (gamma + node.customers as f64).ln();
        for &child in &node.children {
            let m = tree.node(child).customers as f64;
            walk(tree, child, prior + m.ln() - z, lik, doc, gamma, eta, fresh_tail, prefix, out);
        }
        out.push(PathCandidate {
            nodes: prefix.clone(),
            log_prior: prior + gamma.ln() - z,
            log_likelihood: lik + fresh_tail[node.level + 1],
        });
    }
    prefix.pop();
}

/// Unnormalized level weights for one token:
/// `(a_dl + α)(b_{c_l,v} + η)/(s_{c_l} + Vη)` from the token-excluded
/// counters `level_counts[l] = a_dl` and `nodes[l] = (b_{c_l,v}, s_{c_l})`.
pub fn level_weights(level_counts: &[u32], nodes: &[(u32, u32)], alpha: f64, eta: f64, vocab: usize) -> Vec<f64> {
    let v_eta = vocab as f64 * eta;
    level_counts
        .iter()
        .zip(nodes)
        .map(|(&a, &(b, s))| (a as f64 + alpha) * (b as f64 + eta) / (s as f64 + v_eta))
        .collect()
}

/// Tree plus per-document paths `c_d`, token levels `z_dn` and level
/// counters `a_dl` (`d * L + l`).
#[derive(Debug, Clone, PartialEq)]
pub struct HldaState {
    pub tree: NcrpTree,
    pub paths: Vec<Vec<NodeId>>,
    pub levels: Vec<Vec<u8>>,
    pub level_counts: Vec<u32>,
}

impl HldaState {
    pub fn check_invariants(&self, corpus: &Corpus) -> std::result::Result<(), String> {
        let depth = self.tree.depth();
        self.tree.check_structure()?;
        let root = self.tree.node(NcrpTree::ROOT);
        if root.customers != corpus.num_docs() {
            return Err(format!("root holds {} of {} documents", root.customers, corpus.num_docs()));
        }
        let mut counts: Vec<(NodeId, Vec<u32>)> = self
            .tree
            .node_ids()
            .map(|id| (id, vec![0; self.tree.words()]))
            .collect();
        let slot = |id: NodeId, counts: &[(NodeId, Vec<u32>)]| counts.binary_search_by_key(&id, |(i, _)| *i);
        let mut leaf_customers = vec![0usize; 0];
        for (d, doc) in corpus.documents().iter().enumerate() {
            let path = &self.paths[d];
            if path.len() != depth || path[0] != NcrpTree::ROOT {
                return Err(format!("document {d} has a malformed path"));
            }
            for l in 1..depth {
                if !self.tree.contains(path[l]) || self.tree.node(path[l]).parent != Some(path[l - 1]) {
                    return Err(format!("document {d}: path breaks at level {l}"));
                }
            }
            leaf_customers.push(path[depth - 1]);
            let mut a = vec![0u32; depth];
            for (&w, &l) in doc.tokens().iter().zip(&self.levels[d]) {
                let l = l as usize;
                a[l] += 1;
                let i = slot(path[l], &counts).map_err(|_| "path node missing".to_string())?;
                counts[i].1[w as usize] += 1;
            }
            if a[..] != self.level_counts[d * depth..(d + 1) * depth] {
                return Err(format!("document {d}: level counters disagree with assignments"));
            }
            if a.iter().sum::<u32>() as usize != doc.len() {
                return Err(format!("document {d}: Σ_l a_dl != N_d"));
            }
        }
        for (id, c) in &counts {
            if *c != self.tree.node(*id).word_counts {
                return Err(format!("node {id}: word counts disagree with assignments"));
            }
        }
        leaf_customers.sort_unstable();
        for leaf in self.tree.nodes_at_level(depth - 1) {
            let m = leaf_customers.iter().filter(|&&x| x == leaf).count();
            if m != self.tree.node(leaf).customers {
                return Err(format!("leaf {leaf}: customer count {} but {m} paths", self.tree.node(leaf).customers));
            }
        }
        Ok(())
    }
}

pub struct HldaSampler<'a> {
    corpus: &'a Corpus,
    config: HldaConfig,
    state: HldaState,
    rng: ModelRng,
    sweeps: usize,
    trace: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> HldaSampler<'a> {
    /// Random token levels, then documents seated one by one.
    pub fn new(corpus: &'a Corpus, config: &HldaConfig) -> Result<Self> {
        config.validate()?;
        let depth = config.depth;
        let mut rng = seeded(config.seed);
        let mut level_counts = vec![0u32; corpus.num_docs() * depth];
        let levels: Vec<Vec<u8>> = corpus
            .documents()
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                (0..doc.len())
                    .map(|_| {
                        let l = rng.random_range(0..depth);
                        level_counts[d * depth + l] += 1;
                        l as u8
                    })
                    .collect()
            })
            .collect();
        let state = HldaState {
            tree: NcrpTree::new(depth, corpus.vocab_size()),
            paths: vec![Vec::new(); corpus.num_docs()],
            levels,
            level_counts,
        };
        let mut sampler = Self {
            corpus,
            config: config.clone(),
            state,
            rng,
            sweeps: 0,
            trace: Vec::new(),
            weights: vec![0.0; depth],
        };
        for d in 0..corpus.num_docs() {
            sampler.seat(d);
        }
        Ok(sampler)
    }

    pub fn state(&self) -> &HldaState {
        &self.state
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    fn doc_level_words(&self, d: usize) -> LevelWordCounts {
        let mut by_level = vec![Vec::new(); self.config.depth];
        for (&w, &l) in self.corpus.document(d).tokens().iter().zip(&self.state.levels[d]) {
            by_level[l as usize].push(w);
        }
        by_level
            .into_iter()
            .map(|mut ws| {
                ws.sort_unstable();
                let mut out: Vec<(u32, u32)> = Vec::new();
                for w in ws {
                    match out.last_mut() {
                        Some((last, c)) if *last == w => *c += 1,
                        _ => out.push((w, 1)),
                    }
                }
                out
            })
            .collect()
    }

    fn remove_doc(&mut self, d: usize) {
        let path = std::mem::take(&mut self.state.paths[d]);
        for &id in &path {
            self.state.tree.node_mut(id).customers -= 1;
        }
        for (&w, &l) in self.corpus.document(d).tokens().iter().zip(&self.state.levels[d]) {
            let node = self.state.tree.node_mut(path[l as usize]);
            node.word_counts[w as usize] -= 1;
            node.total -= 1;
        }
        self.state.tree.prune_path(&path);
    }

    fn insert_doc(&mut self, d: usize, path: Vec<NodeId>) {
        for &id in &path {
            self.state.tree.node_mut(id).customers += 1;
        }
        for (&w, &l) in self.corpus.document(d).tokens().iter().zip(&self.state.levels[d]) {
            let node = self.state.tree.node_mut(path[l as usize]);
            node.word_counts[w as usize] += 1;
            node.total += 1;
        }
        self.state.paths[d] = path;
    }

    /// Draws a path for a document that is not in the tree and seats it.
    fn seat(&mut self, d: usize) {
        let doc = self.doc_level_words(d);
        let candidates = path_candidates(&self.state.tree, &doc, self.config.gamma, self.config.eta);
        let scores: Vec<f64> = candidates.iter().map(PathCandidate::log_score).collect();
        let pick = sample_log_weighted(&scores, &mut self.rng);
        let mut path = candidates[pick].nodes.clone();
        while path.len() < self.config.depth {
            let child = self.state.tree.add_child(*path.last().expect("path starts at the root"));
            path.push(child);
        }
        self.insert_doc(d, path);
    }

    pub fn resample_path(&mut self, d: usize) {
        self.remove_doc(d);
        self.seat(d);
    }

    pub fn resample_level(&mut self, d: usize, n: usize) {
        let depth = self.config.depth;
        let w = self.corpus.document(d).tokens()[n] as usize;
        let v_eta = self.state.tree.words() as f64 * self.config.eta;
        let st = &mut self.state;
        let path = &st.paths[d];
        let old = st.levels[d][n] as usize;
        let a = &mut st.level_counts[d * depth..(d + 1) * depth];
        a[old] -= 1;
        {
            let node = st.tree.node_mut(path[old]);
            node.word_counts[w] -= 1;
            node.total -= 1;
        }
        let mut total = 0.0;
        for l in 0..depth {
            let node = st.tree.node(path[l]);
            let p = (a[l] as f64 + self.config.alpha) * (node.word_counts[w] as f64 + self.config.eta)
                / (node.total as f64 + v_eta);
            self.weights[l] = p;
            total += p;
        }
        let new = sample_weighted(&self.weights, total, &mut self.rng);
        a[new] += 1;
        let node = st.tree.node_mut(path[new]);
        node.word_counts[w] += 1;
        node.total += 1;
        st.levels[d][n] = new as u8;
    }

    /// Path moves for every document, then level moves for every token.
    pub fn sweep(&mut self) {
        for d in 0..self.corpus.num_docs() {
            self.resample_path(d);
        }
        for d in 0..self.corpus.num_docs() {
            for n in 0..self.corpus.document(d).len() {
                self.resample_level(d, n);
            }
        }
        self.sweeps += 1;
        self.trace.push(self.log_likelihood());
    }

    pub fn run(&mut self) {
        while self.sweeps < self.config.iterations {
            self.sweep();
        }
    }

    /// `Σ_dn ln Σ_l θ_dl φ_{w, c_dl}` with smoothed point estimates.
    pub fn log_likelihood(&self) -> f64 {
        let depth = self.config.depth;
        let alpha = self.config.alpha;
        let eta = self.config.eta;
        let v_eta = self.state.tree.words() as f64 * eta;
        let mut ll = 0.0;
        for d in 0..self.corpus.num_docs() {
            let path = &self.state.paths[d];
            let a = &self.state.level_counts[d * depth..(d + 1) * depth];
            let norm = self.corpus.document(d).len() as f64 + depth as f64 * alpha;
            for &(w, c) in self.corpus.doc_term_counts(d) {
                let p: f64 = (0..depth)
                    .map(|l| {
                        let node = self.state.tree.node(path[l]);
                        (a[l] as f64 + alpha) / norm * (node.word_counts[w as usize] as f64 + eta)
                            / (node.total as f64 + v_eta)
                    })
                    .sum();
                ll += c as f64 * p.ln();
            }
        }
        ll
    }

    pub fn result(&self) -> HldaResult {
        let tree = self.state.tree.clone();
        let level_nodes: Vec<Vec<NodeId>> = (0..self.config.depth).map(|l| tree.nodes_at_level(l)).collect();
        let phi_levels = level_nodes
            .iter()
            .map(|ids| {
                let cols: Vec<Vec<f64>> = ids
                    .iter()
                    .map(|&id| estimate_phi_hlda(&tree.node(id).word_counts, self.config.eta))
                    .collect();
                TopicWordMatrix::from_column_vecs(&cols).expect("smoothed columns are stochastic")
            })
            .collect();
        HldaResult {
            topic_counts: level_nodes.iter().map(Vec::len).collect(),
            level_nodes,
            phi_levels,
            paths: self.state.paths.clone(),
            loglik_trace: self.trace.clone(),
            tree,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Vocabulary};
    use approx::assert_abs_diff_eq;

    fn corpus(docs: Vec<Vec<u32>>, words: usize) -> Corpus {
        let vocab = Vocabulary::new((0..words).map(|i| format!("w{i}")).collect()).unwrap();
        Corpus::new(docs.into_iter().map(Document::new).collect(), vocab).unwrap()
    }

    fn small_corpus() -> Corpus {
        let docs = (0..24u32)
            .map(|d| {
                let base = (d % 4) * 3;
                (0..10).map(|i| if i % 3 == 0 { 12 + i % 2 } else { base + (d + i) % 3 }).collect()
            })
            .collect();
        corpus(docs, 14)
    }

    #[test]
    fn level_weights_plain_and_hand_values() {
        let w = level_weights(&[0, 0], &[(0, 0), (0, 0)], 1.0, 0.5, 4);
        assert_eq!(w[0], w[1]);
        let w = level_weights(&[3, 0], &[(1, 5), (1, 5)], 0.5, 0.1, 10);
        assert_abs_diff_eq!(w[0] / w[1], 3.5 / 0.5, epsilon = 1e-12);
    }

    #[test]
    fn single_document_gets_a_fresh_chain() {
        let c = corpus(vec![vec![0, 1, 1, 2]], 3);
        let s = HldaSampler::new(&c, &HldaConfig::new(3, 5)).unwrap();
        let path = &s.state().paths[0];
        assert_eq!(path.len(), 3);
        assert_eq!(s.state().tree.len(), 3);
        let doc = vec![vec![(0, 1)], vec![(1, 2)], vec![(2, 1)]];
        let mut t = s.state().tree.clone();
        // Removing the only document leaves a bare root with one option.
        for &id in path {
            t.node_mut(id).customers -= 1;
        }
        for id in path.iter() {
            let n = t.node_mut(*id);
            n.word_counts.iter_mut().for_each(|x| *x = 0);
            n.total = 0;
        }
        t.prune_path(path);
        let cands = path_candidates(&t, &doc, 1.0, 0.1);
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].nodes, vec![NcrpTree::ROOT]);
        assert_eq!(cands[0].log_prior, 0.0);
    }

    #[test]
    fn identical_documents_share_a_path_when_gamma_vanishes() {
        let c = corpus(vec![vec![0, 1, 2, 0, 1], vec![0, 1, 2, 0, 1]], 4);
        let mut cfg = HldaConfig::new(3, 9);
        cfg.gamma = 1e-300;
        let s = HldaSampler::new(&c, &cfg).unwrap();
        assert_eq!(s.state().paths[0], s.state().paths[1]);
    }

    #[test]
    fn depth_two_is_root_plus_leaves() {
        let c = small_corpus();
        let mut cfg = HldaConfig::new(2, 3);
        cfg.iterations = 5;
        let r = hlda_result(&c, &cfg);
        assert_eq!(r.topic_counts[0], 1);
        assert!(r.paths.iter().all(|p| p.len() == 2 && p[0] == NcrpTree::ROOT));
    }

    fn hlda_result(c: &Corpus, cfg: &HldaConfig) -> HldaResult {
        let mut s = HldaSampler::new(c, cfg).unwrap();
        s.run();
        s.result()
    }

    #[test]
    fn invariants_after_every_pass() {
        let c = small_corpus();
        let mut cfg = HldaConfig::new(3, 11);
        cfg.gamma = 0.5;
        let mut s = HldaSampler::new(&c, &cfg).unwrap();
        s.state().check_invariants(&c).unwrap();
        for _ in 0..15 {
            s.sweep();
            s.state().check_invariants(&c).unwrap();
        }
    }

    #[test]
    fn remove_and_reinsert_restores_counters() {
        let c = small_corpus();
        let mut s = HldaSampler::new(&c, &HldaConfig::new(3, 2)).unwrap();
        let before = s.state().clone();
        let path = before.paths[4].clone();
        s.remove_doc(4);
        // Pruned slots may be recycled, so re-seat on the identical path
        // only when it survived.
        if path.iter().all(|&id| s.state.tree.contains(id)) {
            s.insert_doc(4, path);
            assert_eq!(s.state().tree.node_ids().collect::<Vec<_>>(), before.tree.node_ids().collect::<Vec<_>>());
            for id in before.tree.node_ids() {
                assert_eq!(s.state().tree.node(id).word_counts, before.tree.node(id).word_counts);
                assert_eq!(s.state().tree.node(id).customers, before.tree.node(id).customers);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = small_corpus();
        let mut cfg = HldaConfig::new(3, 21);
        cfg.iterations = 8;
        let a = hlda_result(&c, &cfg);
        let b = hlda_result(&c, &cfg);
        assert_eq!(a.paths, b.paths);
        assert_eq!(a.tree, b.tree);
        assert_eq!(a.loglik_trace, b.loglik_trace);
    }

    #[test]
    fn phi_levels_are_stochastic_and_sized() {
        let c = small_corpus();
        let mut cfg = HldaConfig::new(3, 4);
        cfg.iterations = 6;
        let r = hlda_result(&c, &cfg);
        for (l, phi) in r.phi_levels.iter().enumerate() {
            assert_eq!(phi.topics(), r.topic_counts[l]);
            assert_eq!(phi.words(), 14);
        }
        let json = r.tree_json(c.vocabulary(), 15);
        assert_eq!(json["nodes"].as_array().unwrap().len(), r.tree.len());
    }
}
