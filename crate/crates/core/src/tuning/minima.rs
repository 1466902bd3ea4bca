use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaParams {
    /// Moving-average window (odd).
    pub window: usize,
    /// Neighbours on each side a local minimum must beat.
    pub neighbors: usize,
    /// Qualifying depth as a fraction of the smoothed curve's range.
    pub delta: f64,
}

impl Default for MinimaParams {
    fn default() -> Self {
        Self {
            window: 3,
            neighbors: 2,
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub t: usize,
    /// Smoothed curve value at `t`.
    pub value: f64,
    /// Prominence: the lower of the highest smoothed values to the left and
    /// to the right, minus `value`. Zero at the curve edges.
    pub depth: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Minima {
    pub global: Option<Minimum>,
    /// Interior local minima in increasing `T`.
    pub local: Vec<Minimum>,
    /// Range (max − min) of the smoothed curve.
    pub range: f64,
}

impl Minima {
    /// Global and local minima, deduplicated, in increasing `T`.
    pub fn all(&self) -> Vec<Minimum> {
        let mut v = self.local.clone();
        if let Some(g) = self.global {
            if !v.iter().any(|m| m.t == g.t) {
                v.push(g);
            }
        }
        v.sort_by_key(|m| m.t);
        v
    }
}

/// Centered moving average, truncated at the edges.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn prominence(s: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 == s.len() {
        return 0.0;
    }
    let left = s[..i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let right = s[i + 1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (left.min(right) - s[i]).max(0.0)
}

/// Minima of a `(T, value)` curve sorted by `T`. Non-finite points are
/// dropped before smoothing.
pub fn find_minima(curve: &[(usize, f64)], params: &MinimaParams) -> Minima {
    let pts: Vec<(usize, f64)> = curve.iter().copied().filter(|(_, v)| v.is_finite()).collect();
    if pts.is_empty() {
        return Minima::default();
    }
    let raw: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let s = smooth(&raw, params.window.max(1));
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let at = |i: usize| Minimum {
        t: pts[i].0,
        value: s[i],
        depth: prominence(&s, i),
    };
    // First index wins ties, i.e. the smaller T.
    let g = (0..s.len()).fold(0, |best, i| if s[i] < s[best] { i } else { best });
    let k = params.neighbors.max(1);
    let mut local = Vec::new();
    if s.len() >= 2 * k + 1 {
        for i in 1..s.len() - 1 {
            let lo = i.saturating_sub(k);
            let hi = (i + k + 1).min(s.len());
            if (lo..hi).filter(|&j| j != i).all(|j| s[i] < s[j]) {
                local.push(at(i));
            }
        }
    }
    Minima {
        global: Some(at(g)),
        local,
        range: max - min,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    NonHierarchical,
    TwoLevel,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictLevel {
    #[serde(rename = "T")]
    pub t: usize,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureVerdict {
    pub kind: VerdictKind,
    /// One entry per qualifying minimum, increasing `T`.
    pub levels: Vec<VerdictLevel>,
    /// Every candidate minimum that was considered.
    pub evidence: Vec<Minimum>,
    pub config_refs: Vec<String>,
}

/// One qualifying minimum means a flat structure, two mean two levels.
/// A minimum qualifies when its depth is at least `delta` times the curve
/// range.
pub fn structure_verdict(minima: &Minima, delta: f64) -> StructureVerdict {
    let evidence = minima.all();
    let bar = delta * minima.range;
    let levels: Vec<VerdictLevel> = evidence
        .iter()
        .filter(|m| m.depth > 0.0 && m.depth >= bar)
        .map(|m| VerdictLevel { t: m.t, depth: m.depth })
        .collect();
    let kind = match levels.len() {
        1 => VerdictKind::NonHierarchical,
        2 => VerdictKind::TwoLevel,
        _ => VerdictKind::Inconclusive,
    };
    StructureVerdict {
        kind,
        levels,
        evidence,
        config_refs: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(window: usize, neighbors: usize) -> MinimaParams {
        MinimaParams {
            window,
            neighbors,
            delta: 0.05,
        }
    }

    #[test]
    fn v_shape() {
        let m = find_minima(&[(2, 5.0), (4, 3.0), (6, 4.0)], &p(1, 1));
        assert_eq!(m.global.unwrap().t, 4);
        assert_eq!(m.local.iter().map(|m| m.t).collect::<Vec<_>>(), vec![4]);
    }

    #[test]
    fn monotone_increasing() {
        let curve: Vec<_> = (2..20).map(|t| (t, t as f64 * 0.3)).collect();
        let m = find_minima(&curve, &MinimaParams::default());
        assert_eq!(m.global.unwrap().t, 2);
        assert!(m.local.is_empty());
        assert_eq!(structure_verdict(&m, 0.05).kind, VerdictKind::Inconclusive);
    }

    #[test]
    fn short_curve_reports_only_global() {
        let m = find_minima(&[(2, 3.0), (3, 1.0), (4, 2.0)], &p(1, 2));
        assert_eq!(m.global.unwrap().t, 3);
        assert!(m.local.is_empty());
    }

    #[test]
    fn ties_go_to_smaller_t() {
        let m = find_minima(&[(2, 3.0), (3, 1.0), (4, 1.0), (5, 3.0)], &p(1, 1));
        assert_eq!(m.global.unwrap().t, 3);
    }

    #[test]
    fn infinite_points_are_skipped() {
        let m = find_minima(&[(2, f64::INFINITY), (3, 2.0), (4, 1.0), (5, 3.0)], &p(1, 1));
        assert_eq!(m.global.unwrap().t, 4);
        assert!(find_minima(&[(2, f64::INFINITY)], &p(1, 1)).global.is_none());
    }

    #[test]
    fn single_and_double_dip_verdicts() {
        let one: Vec<_> = (2..=20).map(|t| (t, ((t as f64) - 7.0).powi(2))).collect();
        let v = structure_verdict(&find_minima(&one, &MinimaParams::default()), 0.05);
        assert_eq!(v.kind, VerdictKind::NonHierarchical);
        assert_eq!(v.levels[0].t, 7);

        let two: Vec<_> = (2..=30)
            .map(|t| {
                let x = t as f64;
                (t, -3.0 * (-(x - 5.0).powi(2) / 4.0).exp() - 2.0 * (-(x - 15.0).powi(2) / 8.0).exp())
            })
            .collect();
        let v = structure_verdict(&find_minima(&two, &MinimaParams::default()), 0.05);
        assert_eq!(v.kind, VerdictKind::TwoLevel);
        assert_eq!(v.levels.iter().map(|l| l.t).collect::<Vec<_>>(), vec![5, 15]);
    }

    #[test]
    fn white_noise_is_inconclusive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let curve: Vec<_> = (2..=40).map(|t| (t, 3.0 + 0.01 * rng.random::<f64>())).collect();
        let v = structure_verdict(&find_minima(&curve, &p(1, 1)), 0.05);
        assert_eq!(v.kind, VerdictKind::Inconclusive);
    }

    #[test]
    fn shift_invariance() {
        let curve: Vec<_> = (2..=20).map(|t| (t, ((t * 37 % 11) as f64).sin())).collect();
        let shifted: Vec<_> = curve.iter().map(|&(t, v)| (t, v + 123.0)).collect();
        let a = find_minima(&curve, &MinimaParams::default());
        let b = find_minima(&shifted, &MinimaParams::default());
        assert_eq!(a.global.map(|m| m.t), b.global.map(|m| m.t));
        assert_eq!(
            a.local.iter().map(|m| m.t).collect::<Vec<_>>(),
            b.local.iter().map(|m| m.t).collect::<Vec<_>>()
        );
    }
}
