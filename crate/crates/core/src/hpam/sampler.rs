use rand::Rng;

use super::{estimate_phi_hpam, optimize_alpha, HpamConfig, HpamResult};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::matrix::DocTopicMatrix;
use crate::rng::{sample_weighted, seeded, ModelRng};

/// Counter triple and Dirichlet parameters of an hPAM chain.
#[derive(Debug, Clone, PartialEq)]
pub struct HpamState {
    pub super_topics: usize,
    pub sub_topics: usize,
    pub words: usize,
    /// `(x, y)` of every token; root tokens carry `(0, 0)`.
    pub cells: Vec<Vec<(u16, u16)>>,
    /// `a_dx`, `d * (T_1 + 1) + x`.
    pub a: Vec<u32>,
    /// `b_dxy`, `(d * (T_1 + 1) + x) * (T_2 + 1) + y`; rows with `x = 0` stay 0.
    pub b: Vec<u32>,
    /// `c_wk`, `w * K + k`.
    pub c: Vec<u32>,
    pub c_totals: Vec<u32>,
    pub alpha_root: Vec<f64>,
    /// `alpha_super[x - 1]` is `α_x`.
    pub alpha_super: Vec<Vec<f64>>,
}

impl HpamState {
    fn k_count(&self) -> usize {
        1 + self.super_topics + self.sub_topics
    }

    /// Flat topic index of a cell.
    pub fn flat_index(&self, x: usize, y: usize) -> usize {
        match (x, y) {
            (0, _) => 0,
            (x, 0) => x,
            (_, y) => self.super_topics + y,
        }
    }

    /// Valid cells in sampling order: the root, then `(x, 0..=T_2)` for
    /// each super-topic.
    pub fn grid(&self) -> Vec<(usize, usize)> {
        let mut g = vec![(0, 0)];
        for x in 1..=self.super_topics {
            g.extend((0..=self.sub_topics).map(|y| (x, y)));
        }
        g
    }

    fn b_index(&self, d: usize, x: usize, y: usize) -> usize {
        (d * (self.super_topics + 1) + x) * (self.sub_topics + 1) + y
    }

    fn apply(&mut self, d: usize, w: usize, x: usize, y: usize, add: bool) {
        let k = self.flat_index(x, y);
        let kc = self.k_count();
        let ai = d * (self.super_topics + 1) + x;
        let bi = self.b_index(d, x, y);
        let ci = w * kc + k;
        if add {
            self.a[ai] += 1;
            if x > 0 {
                self.b[bi] += 1;
            }
            self.c[ci] += 1;
            self.c_totals[k] += 1;
        } else {
            self.a[ai] -= 1;
            if x > 0 {
                self.b[bi] -= 1;
            }
            self.c[ci] -= 1;
            self.c_totals[k] -= 1;
        }
    }

    /// Unnormalized weights over [`grid`](Self::grid) for word `w` in
    /// document `d`, from counters that exclude the token being sampled.
    pub fn cell_weights(&self, d: usize, w: usize, eta: f64, out: &mut Vec<f64>) {
        let kc = self.k_count();
        let (t1, t2) = (self.super_topics, self.sub_topics);
        let cells = 1 + t1 * (t2 + 1);
        let w_eta = self.words as f64 * eta;
        out.clear();
        out.resize(cells, 0.0);
        // Word factors of every flat topic, parked after the cell weights.
        let row = &self.c[w * kc..(w + 1) * kc];
        out.extend(
            row.iter()
                .zip(&self.c_totals)
                .map(|(&c, &t)| (c as f64 + eta) / (t as f64 + w_eta)),
        );
        let (weights, word) = out.split_at_mut(cells);
        let a_row = &self.a[d * (t1 + 1)..(d + 1) * (t1 + 1)];
        weights[0] = (a_row[0] as f64 + self.alpha_root[0]) * word[0];
        for x in 1..=t1 {
            let alpha_x = &self.alpha_super[x - 1];
            let alpha_sum: f64 = alpha_x.iter().sum();
            let top = (a_row[x] as f64 + self.alpha_root[x]) / (a_row[x] as f64 + alpha_sum);
            let b_row = &self.b[self.b_index(d, x, 0)..=self.b_index(d, x, t2)];
            let base = 1 + (x - 1) * (t2 + 1);
            weights[base] = top * (b_row[0] as f64 + alpha_x[0]) * word[x];
            for y in 1..=t2 {
                weights[base + y] = top * (b_row[y] as f64 + alpha_x[y]) * word[t1 + y];
            }
        }
        out.truncate(cells);
    }

    pub fn check_invariants(&self, corpus: &Corpus) -> std::result::Result<(), String> {
        let t1 = self.super_topics;
        let t2 = self.sub_topics;
        let kc = self.k_count();
        let mut a = vec![0u32; self.a.len()];
        let mut b = vec![0u32; self.b.len()];
        let mut c = vec![0u32; self.c.len()];
        let mut tot = vec![0u32; kc];
        for (d, doc) in corpus.documents().iter().enumerate() {
            if self.cells[d].len() != doc.len() {
                return Err(format!("document {d} has {} assignments", self.cells[d].len()));
            }
            for (&w, &(x, y)) in doc.tokens().iter().zip(&self.cells[d]) {
                let (x, y) = (x as usize, y as usize);
                if x > t1 || y > t2 || (x == 0 && y != 0) {
                    return Err(format!("document {d}: invalid cell ({x}, {y})"));
                }
                let k = self.flat_index(x, y);
                a[d * (t1 + 1) + x] += 1;
                if x > 0 {
                    b[self.b_index(d, x, y)] += 1;
                }
                c[w as usize * kc + k] += 1;
                tot[k] += 1;
            }
            let n: u32 = self.a[d * (t1 + 1)..(d + 1) * (t1 + 1)].iter().sum();
            if n as usize != doc.len() {
                return Err(format!("document {d}: Σ_x a_dx != N_d"));
            }
            for x in 1..=t1 {
                let s: u32 = (0..=t2).map(|y| self.b[self.b_index(d, x, y)]).sum();
                if s != self.a[d * (t1 + 1) + x] {
                    return Err(format!("document {d}: Σ_y b_dxy != a_dx for x = {x}"));
                }
            }
        }
        if a != self.a || b != self.b {
            return Err("document counters disagree with assignments".into());
        }
        if c != self.c || tot != self.c_totals {
            return Err("word-topic counters disagree with assignments".into());
        }
        for k in 0..kc {
            let s: u32 = (0..self.words).map(|w| self.c[w * kc + k]).sum();
            if s != self.c_totals[k] {
                return Err(format!("Σ_w c_wk != tokens of topic {k}"));
            }
        }
        Ok(())
    }
}

pub struct HpamSampler<'a> {
    corpus: &'a Corpus,
    config: HpamConfig,
    state: HpamState,
    grid: Vec<(usize, usize)>,
    rng: ModelRng,
    sweeps: usize,
    trace: Vec<(usize, f64)>,
    weights: Vec<f64>,
}

/// Sweeps between log-likelihood evaluations.
const TRACE_INTERVAL: usize = 10;

impl<'a> HpamSampler<'a> {
    pub fn new(corpus: &'a Corpus, config: &HpamConfig) -> Result<Self> {
        config.validate()?;
        let t1 = config.super_topics;
        let t2 = config.sub_topics;
        let kc = config.flat_topics();
        let docs = corpus.num_docs();
        let words = corpus.vocab_size();
        let mut state = HpamState {
            super_topics: t1,
            sub_topics: t2,
            words,
            cells: Vec::with_capacity(docs),
            a: vec![0; docs * (t1 + 1)],
            b: vec![0; docs * (t1 + 1) * (t2 + 1)],
            c: vec![0; words * kc],
            c_totals: vec![0; kc],
            alpha_root: vec![config.alpha_init; t1 + 1],
            alpha_super: vec![vec![config.alpha_init; t2 + 1]; t1],
        };
        let grid = state.grid();
        let mut rng = seeded(config.seed);
        for (d, doc) in corpus.documents().iter().enumerate() {
            let mut cells = Vec::with_capacity(doc.len());
            for &w in doc.tokens() {
                let (x, y) = grid[rng.random_range(0..grid.len())];
                state.apply(d, w as usize, x, y, true);
                cells.push((x as u16, y as u16));
            }
            state.cells.push(cells);
        }
        Ok(Self {
            corpus,
            config: config.clone(),
            state,
            grid,
            rng,
            sweeps: 0,
            trace: Vec::new(),
            weights: Vec::new(),
        })
    }

    pub fn state(&self) -> &HpamState {
        &self.state
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Takes token `(d, n)` out of every counter and returns its cell.
    pub fn remove_token(&mut self, d: usize, n: usize) -> (usize, usize) {
        let w = self.corpus.document(d).tokens()[n] as usize;
        let (x, y) = self.state.cells[d][n];
        self.state.apply(d, w, x as usize, y as usize, false);
        (x as usize, y as usize)
    }

    pub fn insert_token(&mut self, d: usize, n: usize, x: usize, y: usize) {
        let w = self.corpus.document(d).tokens()[n] as usize;
        self.state.apply(d, w, x, y, true);
        self.state.cells[d][n] = (x as u16, y as u16);
    }

    pub fn sample_token(&mut self, d: usize, n: usize) -> (usize, usize) {
        self.remove_token(d, n);
        let w = self.corpus.document(d).tokens()[n] as usize;
        self.state.cell_weights(d, w, self.config.eta, &mut self.weights);
        let total = self.weights.iter().sum();
        let (x, y) = self.grid[sample_weighted(&self.weights, total, &mut self.rng)];
        self.insert_token(d, n, x, y);
        (x, y)
    }

    pub fn sweep(&mut self) {
        for d in 0..self.corpus.num_docs() {
            for n in 0..self.corpus.document(d).len() {
                self.sample_token(d, n);
            }
        }
        self.sweeps += 1;
        let past_burn_in = self.sweeps > self.config.burn_in;
        if past_burn_in && (self.sweeps - self.config.burn_in) % self.config.alpha_interval == 0 {
            self.update_alpha();
        }
        if self.sweeps % TRACE_INTERVAL == 0 || self.sweeps == self.config.iterations {
            self.trace.push((self.sweeps, self.log_likelihood()));
        }
    }

    pub fn run(&mut self) {
        while self.sweeps < self.config.iterations {
            self.sweep();
        }
    }

    fn update_alpha(&mut self) {
        let st = &mut self.state;
        let t1 = st.super_topics;
        let t2 = st.sub_topics;
        for _ in 0..self.config.alpha_steps {
            st.alpha_root = optimize_alpha(&st.a, &st.alpha_root);
        }
        let docs = self.corpus.num_docs();
        let mut rows = vec![0u32; docs * (t2 + 1)];
        for x in 1..=t1 {
            for d in 0..docs {
                let start = st.b_index(d, x, 0);
                rows[d * (t2 + 1)..(d + 1) * (t2 + 1)].copy_from_slice(&st.b[start..start + t2 + 1]);
            }
            for _ in 0..self.config.alpha_steps {
                st.alpha_super[x - 1] = optimize_alpha(&rows, &st.alpha_super[x - 1]);
            }
        }
    }

    /// Per-document mixture over flat topics from the smoothed counters.
    fn doc_mixture(&self, d: usize, out: &mut [f64]) {
        let st = &self.state;
        let t1 = st.super_topics;
        let t2 = st.sub_topics;
        out.iter_mut().for_each(|v| *v = 0.0);
        let a_row = &st.a[d * (t1 + 1)..(d + 1) * (t1 + 1)];
        let a_norm = self.corpus.document(d).len() as f64 + st.alpha_root.iter().sum::<f64>();
        out[0] = (a_row[0] as f64 + st.alpha_root[0]) / a_norm;
        for x in 1..=t1 {
            let theta_x = (a_row[x] as f64 + st.alpha_root[x]) / a_norm;
            let alpha_x = &st.alpha_super[x - 1];
            let b_norm = a_row[x] as f64 + alpha_x.iter().sum::<f64>();
            for y in 0..=t2 {
                let p = (st.b[st.b_index(d, x, y)] as f64 + alpha_x[y]) / b_norm;
                out[st.flat_index(x, y)] += theta_x * p;
            }
        }
    }

    pub fn log_likelihood(&self) -> f64 {
        let st = &self.state;
        let kc = st.k_count();
        let w_eta = st.words as f64 * self.config.eta;
        let denom: Vec<f64> = st.c_totals.iter().map(|&t| t as f64 + w_eta).collect();
        let mut mix = vec![0.0; kc];
        let mut ll = 0.0;
        for d in 0..self.corpus.num_docs() {
            self.doc_mixture(d, &mut mix);
            for &(w, n) in self.corpus.doc_term_counts(d) {
                let row = &st.c[w as usize * kc..(w as usize + 1) * kc];
                let p: f64 = (0..kc)
                    .map(|k| mix[k] * (row[k] as f64 + self.config.eta) / denom[k])
                    .sum();
                ll += n as f64 * p.ln();
            }
        }
        ll
    }

    /// Estimates from the current (final) sample.
    pub fn result(&self) -> Result<HpamResult> {
        let st = &self.state;
        let t1 = st.super_topics;
        let phi_full = estimate_phi_hpam(&st.c, st.words, self.config.eta)?;
        let phi_super = phi_full.select_columns(1..=t1)?;
        let phi_sub = phi_full.select_columns(t1 + 1..t1 + 1 + st.sub_topics)?;
        let docs = self.corpus.num_docs();
        let mut theta = Vec::with_capacity(docs * (t1 + 1));
        for d in 0..docs {
            theta.extend(
                st.a[d * (t1 + 1)..(d + 1) * (t1 + 1)]
                    .iter()
                    .zip(&st.alpha_root)
                    .map(|(&a, &al)| a as f64 + al),
            );
        }
        Ok(HpamResult {
            phi_full,
            phi_super,
            phi_sub,
            theta_root: DocTopicMatrix::from_weights(t1 + 1, docs, theta),
            alpha_root: st.alpha_root.clone(),
            alpha_super: st.alpha_super.clone(),
            loglik_trace: self.trace.clone(),
        })
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
        let docs = (0..30u32)
            .map(|d| (0..12).map(|i| ((d % 3) * 4 + (d * 7 + i * 5) % 4) % 12).collect())
            .collect();
        corpus(docs, 12)
    }

    fn config(t1: usize, t2: usize, seed: u64) -> HpamConfig {
        let mut c = HpamConfig::new(t1, t2, seed);
        c.iterations = 20;
        c.burn_in = 10;
        c.alpha_interval = 5;
        c
    }

    #[test]
    fn grid_has_expected_cells() {
        let c = small_corpus();
        let s = HpamSampler::new(&c, &config(3, 2, 1)).unwrap();
        let g = s.state().grid();
        assert_eq!(g.len(), 1 + 3 * 3);
        let mut ks: Vec<usize> = g.iter().map(|&(x, y)| s.state().flat_index(x, y)).collect();
        ks.sort_unstable();
        ks.dedup();
        assert_eq!(ks, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn zero_counters_give_uniform_cells() {
        let c = corpus(vec![vec![0]], 2);
        let mut s = HpamSampler::new(&c, &config(2, 2, 1)).unwrap();
        s.remove_token(0, 0);
        let mut w = Vec::new();
        s.state().cell_weights(0, 0, 0.1, &mut w);
        // Root: α·(η/Wη); every other cell: α·α/(3α)·(η/Wη).
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-12);
        for &v in &w[1..] {
            assert_abs_diff_eq!(v, 0.5 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn remove_insert_restores_counters() {
        let c = small_corpus();
        let mut s = HpamSampler::new(&c, &config(2, 3, 4)).unwrap();
        let before = s.state().clone();
        let (x, y) = s.remove_token(5, 3);
        s.insert_token(5, 3, x, y);
        assert_eq!(&before, s.state());
    }

    #[test]
    fn normalized_grid_sums_to_one() {
        let c = small_corpus();
        let mut s = HpamSampler::new(&c, &config(3, 2, 2)).unwrap();
        s.sweep();
        s.remove_token(0, 0);
        let mut w = Vec::new();
        s.state().cell_weights(0, 3, 0.01, &mut w);
        let z: f64 = w.iter().sum();
        assert_abs_diff_eq!(w.iter().map(|v| v / z).sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn invariants_after_every_pass() {
        let c = small_corpus();
        let mut s = HpamSampler::new(&c, &config(3, 2, 3)).unwrap();
        s.state().check_invariants(&c).unwrap();
        for _ in 0..20 {
            s.sweep();
            s.state().check_invariants(&c).unwrap();
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = small_corpus();
        let a = super::super::hpam_train(&c, &config(2, 2, 9)).unwrap();
        let b = super::super::hpam_train(&c, &config(2, 2, 9)).unwrap();
        assert_eq!(a.phi_full, b.phi_full);
        assert_eq!(a.alpha_root, b.alpha_root);
        assert_eq!(a.phi_full.topics(), 5);
        assert_eq!(a.phi_super.topics(), 2);
        assert_eq!(a.phi_sub.topics(), 2);
    }
}
