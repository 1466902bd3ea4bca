use approx::assert_abs_diff_eq;
use hitopic_core::hlda::{ncrp_table_probabilities, path_candidates, NcrpTree};
use hitopic_core::hpam::optimize_alpha;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

/// ln of Π_w (b_w+η)^(n_w rising) / (s+Vη)^(n rising), multiplied out directly.
fn direct_level(counts: &[u32], words: &[(u32, u32)], eta: f64) -> f64 {
    let total: u32 = counts.iter().sum();
    let n: u32 = words.iter().map(|p| p.1).sum();
    let mut x = 1.0;
    for i in 0..n {
        x /= total as f64 + counts.len() as f64 * eta + i as f64;
    }
    for &(w, c) in words {
        for i in 0..c {
            x *= counts[w as usize] as f64 + eta + i as f64;
        }
    }
    x.ln()
}

#[test]
fn chain_tree_scores_match_direct_products() {
    let mut tree = NcrpTree::new(3, 3);
    let a = tree.add_child(NcrpTree::ROOT);
    let b = tree.add_child(a);
    tree.add_document(&[NcrpTree::ROOT, a, b], &[vec![(0, 2)], vec![(1, 3)], vec![(2, 1), (0, 1)]]);
    tree.add_document(&[NcrpTree::ROOT, a, b], &[vec![(0, 1), (2, 1)], vec![(1, 1)], vec![(2, 4)]]);
    let doc = vec![vec![(0, 1)], vec![(1, 2), (2, 1)], vec![(2, 2)]];
    let (gamma, eta) = (1.5, 0.2);
    let cands = path_candidates(&tree, &doc, gamma, eta);
    // existing leaf, new leaf under a, new branch under the root
    assert_eq!(cands.len(), 3);
    let counts = |id: usize| tree.node(id).word_counts.clone();
    let fresh = vec![0u32; 3];

    let root = direct_level(&counts(NcrpTree::ROOT), &doc[0], eta);
    let existing = (2.0 / (gamma + 2.0)) * (2.0 / (gamma + 2.0));
    let expected = existing.ln() + root + direct_level(&counts(a), &doc[1], eta) + direct_level(&counts(b), &doc[2], eta);
    let c = cands.iter().find(|c| c.nodes == vec![NcrpTree::ROOT, a, b]).unwrap();
    assert_abs_diff_eq!(c.log_score(), expected, epsilon = 1e-9);

    let under_a = (2.0 / (gamma + 2.0)) * (gamma / (gamma + 2.0));
    let expected = under_a.ln() + root + direct_level(&counts(a), &doc[1], eta) + direct_level(&fresh, &doc[2], eta);
    let c = cands.iter().find(|c| c.nodes == vec![NcrpTree::ROOT, a]).unwrap();
    assert_abs_diff_eq!(c.log_score(), expected, epsilon = 1e-9);

    let new_branch = gamma / (gamma + 2.0);
    let expected =
        new_branch.ln() + root + direct_level(&fresh, &doc[1], eta) + direct_level(&fresh, &doc[2], eta);
    let c = cands.iter().find(|c| c.nodes == vec![NcrpTree::ROOT]).unwrap();
    assert_abs_diff_eq!(c.log_score(), expected, epsilon = 1e-9);
}

#[test]
fn table_probabilities_follow_counts() {
    let p = ncrp_table_probabilities(&[3, 1], 1.0);
    assert_eq!(p, vec![0.6, 0.2, 0.2]);
    assert_eq!(ncrp_table_probabilities(&[], 2.0), vec![1.0]);
}

#[test]
fn alpha_fixed_point_recovers_generator() {
    let truth = [2.0, 1.0, 0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let dir = Dirichlet::new(truth).unwrap();
    let mut counts = Vec::new();
    for _ in 0..3000 {
        let theta: [f64; 3] = dir.sample(&mut rng);
        let mut row = [0u32; 3];
        for _ in 0..40 {
            let u: f64 = rng.random();
            row[if u < theta[0] { 0 } else if u < theta[0] + theta[1] { 1 } else { 2 }] += 1;
        }
        counts.extend_from_slice(&row);
    }
    let mut alpha = vec![1.0; 3];
    for _ in 0..200 {
        alpha = optimize_alpha(&counts, &alpha);
    }
    for (a, t) in alpha.iter().zip(truth) {
        assert!((a - t).abs() / t < 0.08, "{alpha:?}");
    }
}
