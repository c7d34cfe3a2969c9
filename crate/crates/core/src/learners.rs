//! Decision-list base learners: per-feature count statistics, the four
//! parameter-update rules, and the three prediction constructions
//! (max score, mixture, product of experts).

use crate::bootstrap::LabelingState;
use crate::distributions::LabelDistribution;
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

/// Which base learner trains the per-feature parameters and scores instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    /// Smoothed precision parameters, max-score prediction.
    Dl0,
    /// Unlabeled-mass smoothing, mixture prediction.
    Dl1,
    /// Raw precision parameters, mixture prediction. No objective guarantee.
    Dl1R,
    /// Delta-smoothed parameters, product prediction.
    Dl2S,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Dl0 => "dl0",
            LearnerKind::Dl1 => "dl1",
            LearnerKind::Dl1R => "dl1r",
            LearnerKind::Dl2S => "dl2s",
        }
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dl0" => Ok(LearnerKind::Dl0),
            "dl1" => Ok(LearnerKind::Dl1),
            "dl1r" => Ok(LearnerKind::Dl1R),
            "dl2s" => Ok(LearnerKind::Dl2S),
            other => Err(Error::Unsupported(format!("unknown learner '{other}'"))),
        }
    }
}

/// Smoothing knobs; epsilon feeds DL-0, delta feeds DL-2-S.
#[derive(Debug, Clone, Copy)]
pub struct SmoothingConfig {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 1.0,
        }
    }
}

/// Neighborhood label counts for one feature.
///
/// `per_label[j]` counts labeled neighbors carrying label j, `labeled` their
/// total, `unlabeled` the rest, and `total` the feature's degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountStats {
    pub per_label: Vec<usize>,
    pub labeled: usize,
    pub unlabeled: usize,
    pub total: usize,
}

/// Per-feature parameter rows; each row is a distribution over labels.
#[derive(Debug, Clone)]
pub struct Theta {
    rows: Vec<LabelDistribution>,
}

impl Theta {
    pub fn new(rows: Vec<LabelDistribution>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[LabelDistribution] {
        &self.rows
    }

    pub fn row(&self, f: usize) -> &LabelDistribution {
        &self.rows[f]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Tallies the current hard labels among the neighbors of feature `f`.
pub fn count_stats(graph: &BipartiteGraph, state: &LabelingState, f: usize) -> CountStats {
    let mut per_label = vec![0usize; graph.num_labels()];
    let mut unlabeled = 0usize;
    for &x in graph.instances_of(f) {
        match state.label(x) {
            Some(j) => per_label[j] += 1,
            None => unlabeled += 1,
        }
    }
    let labeled: usize = per_label.iter().sum();
    CountStats {
        per_label,
        labeled,
        unlabeled,
        total: labeled + unlabeled,
    }
}

/// Precision of a feature for each label: count / labeled-total.
/// A feature with no labeled neighbors falls back to uniform.
pub fn raw_precision(stats: &CountStats) -> LabelDistribution {
    let l = stats.per_label.len();
    if stats.labeled == 0 {
        return LabelDistribution::uniform(l);
    }
    let denom = stats.labeled as f64;
    LabelDistribution::new(stats.per_label.iter().map(|&c| c as f64 / denom).collect())
        .expect("counts over their own total form a distribution")
}

/// Precision with epsilon added to every count: (c_j + eps) / (labeled + L*eps).
pub fn smoothed_precision(
    stats: &CountStats,
    epsilon: f64,
    num_labels: usize,
) -> LabelDistribution {
    assert!(epsilon >= 0.0);
    if epsilon == 0.0 {
        return raw_precision(stats);
    }
    let denom = stats.labeled as f64 + num_labels as f64 * epsilon;
    LabelDistribution::new(
        stats
            .per_label
            .iter()
            .map(|&c| (c as f64 + epsilon) / denom)
            .collect(),
    )
    .expect("smoothed counts form a distribution")
}

/// Spreads each unlabeled neighbor uniformly over the labels:
/// (c_j + unlabeled/L) / (labeled + unlabeled).
///
/// This is the row that minimizes the quadratic edge objective for the
/// feature, holding the instance distributions fixed.
pub fn dl1_update(stats: &CountStats, num_labels: usize) -> LabelDistribution {
    assert!(stats.total >= 1, "feature must have at least one neighbor");
    let l = num_labels as f64;
    let denom = (stats.labeled + stats.unlabeled) as f64;
    LabelDistribution::new(
        stats
            .per_label
            .iter()
            .map(|&c| (c as f64 + stats.unlabeled as f64 / l) / denom)
            .collect(),
    )
    .expect("dl1 update forms a distribution")
}

/// DL-1 update with delta * degree extra uniform mass:
/// (c_j + (unlabeled + delta*degree)/L) / (labeled + unlabeled + delta*degree).
///
/// delta = 0 reduces to `dl1_update`; delta > 0 keeps every entry positive.
pub fn dl2s_update(stats: &CountStats, delta: f64, num_labels: usize) -> LabelDistribution {
    assert!(stats.total >= 1, "feature must have at least one neighbor");
    assert!(delta >= 0.0);
    let l = num_labels as f64;
    let extra = stats.unlabeled as f64 + delta * stats.total as f64;
    let denom = stats.labeled as f64 + extra;
    LabelDistribution::new(
        stats
            .per_label
            .iter()
            .map(|&c| (c as f64 + extra / l) / denom)
            .collect(),
    )
    .expect("dl2s update forms a distribution")
}

/// Trains one parameter row per feature from the state's current labels.
pub fn train(
    graph: &BipartiteGraph,
    state: &LabelingState,
    kind: LearnerKind,
    smoothing: &SmoothingConfig,
) -> Theta {
    let l = graph.num_labels();
    let rows = (0..graph.num_features())
        .map(|f| {
            let stats = count_stats(graph, state, f);
            match kind {
                LearnerKind::Dl0 => smoothed_precision(&stats, smoothing.epsilon, l),
                LearnerKind::Dl1 => dl1_update(&stats, l),
                LearnerKind::Dl1R => raw_precision(&stats),
                LearnerKind::Dl2S => dl2s_update(&stats, smoothing.delta, l),
            }
        })
        .collect();
    Theta::new(rows)
}

/// Max-score prediction: per label, the best row entry among the instance's
/// features, normalized across labels. All-zero maxima fall back to uniform.
pub fn predict_dl0(theta: &Theta, graph: &BipartiteGraph, x: usize) -> LabelDistribution {
    let l = graph.num_labels();
    let mut maxes = vec![0.0f64; l];
    for &f in graph.features_of(x) {
        for (j, m) in maxes.iter_mut().enumerate() {
            *m = m.max(theta.row(f).get(j));
        }
    }
    LabelDistribution::from_weights(maxes).unwrap_or_else(|_| LabelDistribution::uniform(l))
}

/// Mixture prediction: the arithmetic mean of the feature rows.
pub fn predict_dl1(theta: &Theta, graph: &BipartiteGraph, x: usize) -> LabelDistribution {
    let l = graph.num_labels();
    let fx = graph.features_of(x);
    let mut sums = vec![0.0f64; l];
    for &f in fx {
        for (j, s) in sums.iter_mut().enumerate() {
            *s += theta.row(f).get(j);
        }
    }
    LabelDistribution::from_weights(sums).unwrap_or_else(|_| LabelDistribution::uniform(l))
}

/// Product-of-experts prediction with its normalization constant.
///
/// The product runs in log space to dodge underflow; the constant is
/// returned in linear space and never exceeds 1 for valid rows. A vanishing
/// product yields the uniform fallback with Z reported as 0.
pub fn predict_dl2(theta: &Theta, graph: &BipartiteGraph, x: usize) -> (LabelDistribution, f64) {
    let l = graph.num_labels();
    let fx = graph.features_of(x);
    let mut log_u = vec![0.0f64; l];
    for &f in fx {
        for (j, lu) in log_u.iter_mut().enumerate() {
            let v = theta.row(f).get(j);
            *lu += if v > 0.0 { v.ln() } else { f64::NEG_INFINITY };
        }
    }
    let top = log_u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return (LabelDistribution::uniform(l), 0.0);
    }
    let scaled: Vec<f64> = log_u.iter().map(|lu| (lu - top).exp()).collect();
    let scaled_sum: f64 = scaled.iter().sum();
    let z = top.exp() * scaled_sum;
    let dist =
        LabelDistribution::from_weights(scaled).unwrap_or_else(|_| LabelDistribution::uniform(l));
    (dist, z)
}

/// Prediction distributions for every instance, plus the product-learner
/// normalization constants when applicable.
#[derive(Debug, Clone)]
pub struct Predictions {
    pub dists: Vec<LabelDistribution>,
    pub z: Option<Vec<f64>>,
}

/// Scores every instance under the given learner.
pub fn predict_all(theta: &Theta, graph: &BipartiteGraph, kind: LearnerKind) -> Predictions {
    match kind {
        LearnerKind::Dl0 => Predictions {
            dists: (0..graph.num_instances())
                .map(|x| predict_dl0(theta, graph, x))
                .collect(),
            z: None,
        },
        LearnerKind::Dl1 | LearnerKind::Dl1R => Predictions {
            dists: (0..graph.num_instances())
                .map(|x| predict_dl1(theta, graph, x))
                .collect(),
            z: None,
        },
        LearnerKind::Dl2S => {
            let mut dists = Vec::with_capacity(graph.num_instances());
            let mut zs = Vec::with_capacity(graph.num_instances());
            for x in 0..graph.num_instances() {
                let (d, z) = predict_dl2(theta, graph, x);
                dists.push(d);
                zs.push(z);
            }
            Predictions { dists, z: Some(zs) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Record};
    use proptest::prelude::*;

    fn stats(per_label: &[usize], unlabeled: usize) -> CountStats {
        let labeled = per_label.iter().sum();
        CountStats {
            per_label: per_label.to_vec(),
            labeled,
            unlabeled,
            total: labeled + unlabeled,
        }
    }

    fn theta2(rows: &[[f64; 2]]) -> Theta {
        Theta::new(
            rows.iter()
                .map(|r| LabelDistribution::new(r.to_vec()).unwrap())
                .collect(),
        )
    }

    fn two_feature_instance() -> BipartiteGraph {
        let records = vec![Record {
            id: "x".into(),
            label: None,
            features: vec!["f1".into(), "f2".into()],
        }];
        build_graph(&records, 2).unwrap().0
    }

    #[test]
    fn count_stats_tallies_labels() {
        let records = vec![
            Record {
                id: "x0".into(),
                label: Some(0),
                features: vec!["f".into()],
            },
            Record {
                id: "x1".into(),
                label: Some(0),
                features: vec!["f".into()],
            },
            Record {
                id: "x2".into(),
                label: Some(1),
                features: vec!["f".into()],
            },
            Record {
                id: "x3".into(),
                label: None,
                features: vec!["g".into()],
            },
        ];
        let (g, seeds) = build_graph(&records, 2).unwrap();
        let state = LabelingState::from_seeds(&g, &seeds);
        let s = count_stats(&g, &state, 0);
        assert_eq!(s, stats(&[2, 1], 0));
        let s = count_stats(&g, &state, 1);
        assert_eq!(s, stats(&[0, 0], 1));
    }

    #[test]
    fn raw_precision_values() {
        assert_eq!(
            raw_precision(&stats(&[2, 1], 0)).probs(),
            &[2.0 / 3.0, 1.0 / 3.0]
        );
        assert_eq!(raw_precision(&stats(&[0, 0], 1)).probs(), &[0.5, 0.5]);
        assert_eq!(raw_precision(&stats(&[3, 0], 0)).probs(), &[1.0, 0.0]);
    }

    #[test]
    fn smoothed_precision_values() {
        let q = smoothed_precision(&stats(&[2, 1], 0), 0.5, 2);
        assert_eq!(q.probs(), &[0.625, 0.375]);
        let q = smoothed_precision(&stats(&[0, 0], 0), 1.0, 2);
        assert_eq!(q.probs(), &[0.5, 0.5]);
        let q0 = smoothed_precision(&stats(&[2, 1], 0), 0.0, 2);
        assert_eq!(q0.probs(), raw_precision(&stats(&[2, 1], 0)).probs());
    }

    #[test]
    fn dl1_update_values() {
        assert_eq!(dl1_update(&stats(&[2, 0], 2), 2).probs(), &[0.75, 0.25]);
        assert_eq!(
            dl1_update(&stats(&[2, 1], 0), 2).probs(),
            raw_precision(&stats(&[2, 1], 0)).probs()
        );
        assert_eq!(dl1_update(&stats(&[0, 0], 3), 2).probs(), &[0.5, 0.5]);
    }

    #[test]
    fn dl2s_update_values() {
        assert_eq!(
            dl2s_update(&stats(&[2, 0], 2), 1.0, 2).probs(),
            &[0.625, 0.375]
        );
        assert_eq!(
            dl2s_update(&stats(&[2, 0], 2), 0.0, 2).probs(),
            &[0.75, 0.25]
        );
        let q = dl2s_update(&stats(&[1, 0], 0), 0.5, 2);
        assert!((q.get(0) - 5.0 / 6.0).abs() < 1e-15);
        assert!((q.get(1) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn predict_dl0_normalizes_per_label_maxima() {
        let theta = theta2(&[[0.8, 0.2], [0.4, 0.6]]);
        let g = two_feature_instance();
        let p = predict_dl0(&theta, &g, 0);
        assert!((p.get(0) - 4.0 / 7.0).abs() < 1e-12);
        assert!((p.get(1) - 3.0 / 7.0).abs() < 1e-12);
        let same = theta2(&[[0.7, 0.3], [0.7, 0.3]]);
        assert_eq!(predict_dl0(&same, &g, 0).probs(), &[0.7, 0.3]);
    }

    #[test]
    fn predict_dl1_is_mean_of_rows() {
        let theta = theta2(&[[0.8, 0.2], [0.4, 0.6]]);
        let g = two_feature_instance();
        let p = predict_dl1(&theta, &g, 0);
        assert!((p.get(0) - 0.6).abs() < 1e-12);
        assert!((p.get(1) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn predict_dl2_product_and_constant() {
        let theta = theta2(&[[0.8, 0.2], [0.4, 0.6]]);
        let g = two_feature_instance();
        let (p, z) = predict_dl2(&theta, &g, 0);
        assert!((z - 0.44).abs() < 1e-12);
        assert!((p.get(0) - 8.0 / 11.0).abs() < 1e-12);
        assert!((p.get(1) - 3.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn predict_dl2_disjoint_experts_fall_back_to_uniform() {
        let theta = theta2(&[[1.0, 0.0], [0.0, 1.0]]);
        let g = two_feature_instance();
        let (p, z) = predict_dl2(&theta, &g, 0);
        assert_eq!(z, 0.0);
        assert!(p.is_uniform());
    }

    fn arb_stats() -> impl Strategy<Value = CountStats> {
        (prop::collection::vec(0usize..6, 2..5), 0usize..6).prop_filter_map(
            "at least one neighbor",
            |(per_label, unlabeled)| {
                let labeled: usize = per_label.iter().sum();
                (labeled + unlabeled > 0).then(|| CountStats {
                    per_label,
                    labeled,
                    unlabeled,
                    total: labeled + unlabeled,
                })
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn dl2s_with_zero_delta_matches_dl1(s in arb_stats()) {
            let l = s.per_label.len();
            let a = dl2s_update(&s, 0.0, l);
            let b = dl1_update(&s, l);
            prop_assert!(a.max_abs_diff(&b) <= 1e-12);
        }

        #[test]
        fn update_rows_are_valid_distributions(s in arb_stats(), eps in 0.01f64..3.0, delta in 0.0f64..3.0) {
            let l = s.per_label.len();
            for row in [
                raw_precision(&s),
                smoothed_precision(&s, eps, l),
                dl1_update(&s, l),
                dl2s_update(&s, delta, l),
            ] {
                let sum: f64 = row.probs().iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
                prop_assert!(row.probs().iter().all(|p| *p >= 0.0));
            }
        }
    }
}
