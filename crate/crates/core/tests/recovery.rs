use hitopic_core::corpus::{generate_synthetic, Corpus, PlantedHierarchy, PlantedSpec};
use hitopic_core::flat::{em_train, lda_train, FlatModelConfig};
use hitopic_core::matrix::{DocTopicMatrix, TopicWordMatrix};

fn planted(k: usize) -> (Corpus, PlantedHierarchy) {
    generate_synthetic(&PlantedSpec::flat(k, 0.05), 400, 60, 400, 0.05, 21).unwrap()
}

/// Planted topic whose block holds most of a learned topic's mass, and that mass.
fn best_block(phi: &TopicWordMatrix, t: usize, h: &PlantedHierarchy) -> (usize, f64) {
    (0..h.spec.level1_count)
        .map(|p| (p, h.parent_block(p).map(|w| phi.get(w as usize, t)).sum::<f64>()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

fn assert_one_to_one(phi: &TopicWordMatrix, h: &PlantedHierarchy, min_mass: f64) {
    let mut seen = vec![false; h.spec.level1_count];
    for t in 0..phi.topics() {
        let (p, mass) = best_block(phi, t, h);
        assert!(mass > min_mass, "topic {t} spreads: {mass:.3} on block {p}");
        assert!(!seen[p], "block {p} claimed twice");
        seen[p] = true;
    }
}

fn purity(theta: &DocTopicMatrix, phi: &TopicWordMatrix, h: &PlantedHierarchy) -> f64 {
    let hits = (0..theta.docs())
        .filter(|&d| {
            let col = theta.column(d);
            let t = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
            best_block(phi, t, h).0 == h.level1[d]
        })
        .count();
    hits as f64 / theta.docs() as f64
}

#[test]
fn em_recovers_planted_topics() {
    let (corpus, h) = planted(4);
    let fit = em_train(&corpus, &FlatModelConfig::em(4, 2), &[]).unwrap();
    assert_one_to_one(&fit.phi, &h, 0.8);
    assert!(purity(&fit.theta, &fit.phi, &h) > 0.95);
    let trace = &fit.loglik_trace;
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-6 * w[0].abs()));
}

#[test]
fn em_sparsing_keeps_recovery() {
    let (corpus, h) = planted(4);
    let cfg = FlatModelConfig { sparsing: 0.5, ..FlatModelConfig::em(4, 2) };
    let fit = em_train(&corpus, &cfg, &[]).unwrap();
    assert_one_to_one(&fit.phi, &h, 0.8);
}

#[test]
fn lda_recovers_planted_topics() {
    let (corpus, h) = planted(5);
    let cfg = FlatModelConfig { iterations: 200, burn_in: 100, ..FlatModelConfig::gibbs(5, 4) };
    let fit = lda_train(&corpus, &cfg).unwrap();
    assert_one_to_one(&fit.phi, &h, 0.8);
    assert!(purity(&fit.theta, &fit.phi, &h) > 0.95);
}
