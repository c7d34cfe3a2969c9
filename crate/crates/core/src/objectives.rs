//! Objective functions over labelings and parameters, plus the oracles
//! that check the optimizer claims behind the self-training and
//! propagation updates: per-row perturbation tests, per-instance label
//! enumeration, gap identities, and fixed-point residuals.

use rand::Rng;

use crate::distributions::{
    bregman_distance, cross_entropy, psi_cross_entropy, LabelDistribution, PsiKind,
};
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::learners::{
    count_stats, dl1_update, dl2s_update, predict_dl1, LearnerKind, SmoothingConfig, Theta,
};

/// Sum over instances of the cross-entropy between labeling distribution
/// and prediction, in nats. +inf when a labeled instance has zero
/// predicted mass on its label.
pub fn objective_h(phi: &[LabelDistribution], predictions: &[LabelDistribution]) -> f64 {
    phi.iter()
        .zip(predictions)
        .map(|(p, q)| cross_entropy(p, q))
        .sum()
}

/// Quadratic analogue of the cross-entropy objective:
/// sum over instances of sum_j pi(j)^2 - 2 pi(j) phi(j).
pub fn objective_l_t2(phi: &[LabelDistribution], predictions: &[LabelDistribution]) -> f64 {
    phi.iter()
        .zip(predictions)
        .map(|(p, q)| {
            q.probs()
                .iter()
                .zip(p.probs())
                .map(|(&qj, &pj)| qj * qj - 2.0 * qj * pj)
                .sum::<f64>()
        })
        .sum()
}

/// Quadratic edge objective: sum over (instance, feature) edges of the
/// quadratic cross-entropy between the instance and feature distributions.
pub fn objective_k_t2(
    graph: &BipartiteGraph,
    phi: &[LabelDistribution],
    theta_rows: &[LabelDistribution],
) -> f64 {
    let mut total = 0.0;
    for (x, px) in phi.iter().enumerate() {
        for &f in graph.features_of(x) {
            total += psi_cross_entropy(PsiKind::Quadratic, px, &theta_rows[f]);
        }
    }
    total
}

/// Smoothed edge objective: sum over edges of
/// H(phi_x || theta_f) + delta * H(uniform || theta_f).
pub fn objective_k_delta(
    graph: &BipartiteGraph,
    phi: &[LabelDistribution],
    theta_rows: &[LabelDistribution],
    delta: f64,
) -> f64 {
    assert!(delta >= 0.0);
    let l = graph.num_labels();
    let u = LabelDistribution::uniform(l);
    let mut total = 0.0;
    for (x, px) in phi.iter().enumerate() {
        for &f in graph.features_of(x) {
            total += cross_entropy(px, &theta_rows[f]);
            if delta > 0.0 {
                total += delta * cross_entropy(&u, &theta_rows[f]);
            }
        }
    }
    total
}

/// Bregman edge objective: sum over edges of B_psi(theta_f, phi_x).
///
/// The argument order is feature first; Bregman distances are asymmetric
/// and the downstream checks depend on this orientation.
pub fn objective_graph_bregman(
    graph: &BipartiteGraph,
    feature_dists: &[LabelDistribution],
    instance_dists: &[LabelDistribution],
    psi: PsiKind,
) -> f64 {
    let mut total = 0.0;
    for (x, px) in instance_dists.iter().enumerate() {
        for &f in graph.features_of(x) {
            total += bregman_distance(psi, &feature_dists[f], px);
        }
    }
    total
}

/// The variable part of the quadratic edge objective once the squared
/// norms are dropped: minus twice the sum of edge inner products.
pub fn objective_edge_agreement(
    graph: &BipartiteGraph,
    feature_dists: &[LabelDistribution],
    instance_dists: &[LabelDistribution],
) -> f64 {
    let mut total = 0.0;
    for (x, px) in instance_dists.iter().enumerate() {
        for &f in graph.features_of(x) {
            let dot: f64 = px
                .probs()
                .iter()
                .zip(feature_dists[f].probs())
                .map(|(a, b)| a * b)
                .sum();
            total += dot;
        }
    }
    -2.0 * total
}

/// Gap between the degree-scaled edge objective and the prediction
/// objective: (1/m) K_t2 - l_t2 with the mixture prediction. Requires a
/// uniform instance degree m (pad first) and is nonnegative up to float
/// noise; it collapses to zero when each instance sees identical rows.
pub fn mean_bound_gap(
    graph: &BipartiteGraph,
    phi: &[LabelDistribution],
    theta_rows: &[LabelDistribution],
) -> Result<f64> {
    let m = graph.uniform_instance_degree()?;
    let theta = Theta::new(theta_rows.to_vec());
    let predictions: Vec<LabelDistribution> = (0..graph.num_instances())
        .map(|x| predict_dl1(&theta, graph, x))
        .collect();
    let k = objective_k_t2(graph, phi, theta_rows);
    let l = objective_l_t2(phi, &predictions);
    Ok(k / m as f64 - l)
}

/// The two label choices a sum-based and a product-based reading of the
/// same rows produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MismatchReport {
    /// argmax_j of sum_f theta_fj.
    pub sum_argmax: usize,
    /// argmin_j of sum_f log(1/theta_fj), i.e. the product winner.
    pub log_argmin: usize,
    pub differ: bool,
}

/// Compares the additive score argmax with the multiplicative score
/// argmax over the same rows. Rows must be strictly positive.
pub fn argmax_mismatch(rows: &[LabelDistribution]) -> MismatchReport {
    assert!(!rows.is_empty());
    let l = rows[0].len();
    let mut sums = vec![0.0f64; l];
    let mut log_sums = vec![0.0f64; l];
    for row in rows {
        for j in 0..l {
            let v = row.get(j);
            assert!(v > 0.0, "rows must be strictly positive");
            sums[j] += v;
            log_sums[j] += v.ln();
        }
    }
    let sum_argmax = argmax_slice(&sums);
    let log_argmin = argmax_slice(&log_sums);
    MismatchReport {
        sum_argmax,
        log_argmin,
        differ: sum_argmax != log_argmin,
    }
}

fn argmax_slice(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = j;
        }
    }
    best
}

/// Max-norm residuals of the joint stationarity conditions.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    /// Max over features of the distance to the psi-optimal row for the
    /// current instance distributions.
    pub feature: f64,
    /// Max over included instances of the spread of the per-label
    /// stationarity expression, which must be constant across labels.
    pub instance: f64,
}

const GRAD_CLAMP: f64 = 1e-12;

/// Measures how far an assignment sits from the stationarity conditions of
/// the edge Bregman objective. The feature side compares each row against
/// the dual-mean of its neighbors (arithmetic mean for Quadratic,
/// normalized geometric mean for NegEntropy). The instance side measures,
/// for each instance with `include_instance` set, how far
/// sum_f (theta_fj - phi_xj) psi''(phi_xj) is from constant in j.
pub fn optimality_residual(
    graph: &BipartiteGraph,
    feature_dists: &[LabelDistribution],
    instance_dists: &[LabelDistribution],
    include_instance: &[bool],
    psi: PsiKind,
) -> ResidualReport {
    let l = graph.num_labels();
    let mut feature_residual = 0.0f64;
    for (f, dist) in feature_dists.iter().enumerate() {
        let xs = graph.instances_of(f);
        let target = match psi {
            PsiKind::Quadratic => {
                let mut mean = vec![0.0f64; l];
                for &x in xs {
                    for (m, p) in mean.iter_mut().zip(instance_dists[x].probs()) {
                        *m += p;
                    }
                }
                for m in &mut mean {
                    *m /= xs.len() as f64;
                }
                LabelDistribution::from_weights(mean)
            }
            PsiKind::NegEntropy => {
                let mut log_mean = vec![0.0f64; l];
                for &x in xs {
                    for (m, p) in log_mean.iter_mut().zip(instance_dists[x].probs()) {
                        *m += p.max(GRAD_CLAMP).ln();
                    }
                }
                let weights: Vec<f64> = log_mean
                    .iter()
                    .map(|s| (s / xs.len() as f64).exp())
                    .collect();
                LabelDistribution::from_weights(weights)
            }
        };
        if let Ok(target) = target {
            feature_residual = feature_residual.max(dist.max_abs_diff(&target));
        }
    }

    let mut instance_residual = 0.0f64;
    for x in 0..graph.num_instances() {
        if !include_instance[x] {
            continue;
        }
        let px = &instance_dists[x];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..l {
            let curvature = psi.psi_double_prime(px.get(j).max(GRAD_CLAMP));
            let s: f64 = graph
                .features_of(x)
                .iter()
                .map(|&f| (feature_dists[f].get(j) - px.get(j)) * curvature)
                .sum();
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if l > 0 {
            instance_residual = instance_residual.max(hi - lo);
        }
    }

    ResidualReport {
        feature: feature_residual,
        instance: instance_residual,
    }
}

/// A perturbation that lowered the objective below the trained row.
#[derive(Debug, Clone)]
pub struct OptimalityViolation {
    pub feature: usize,
    pub row: Vec<f64>,
    pub perturbed: Vec<f64>,
    pub drop: f64,
}

/// Outcome of the row-perturbation oracle.
#[derive(Debug, Clone)]
pub struct OptimalityReport {
    pub rows: usize,
    pub trials: usize,
    /// Minimum of (perturbed objective - trained objective); optimality
    /// means this never goes below zero (up to float noise).
    pub worst_increase: f64,
    pub violation: Option<OptimalityViolation>,
}

pub(crate) fn row_objective(
    graph: &BipartiteGraph,
    phi: &[LabelDistribution],
    f: usize,
    row: &LabelDistribution,
    kind: LearnerKind,
    delta: f64,
) -> f64 {
    let l = graph.num_labels();
    let u = LabelDistribution::uniform(l);
    graph
        .instances_of(f)
        .iter()
        .map(|&x| match kind {
            LearnerKind::Dl1 => psi_cross_entropy(PsiKind::Quadratic, &phi[x], row),
            LearnerKind::Dl2S => {
                cross_entropy(&phi[x], row)
                    + if delta > 0.0 {
                        delta * cross_entropy(&u, row)
                    } else {
                        0.0
                    }
            }
            _ => unreachable!("only the guaranteed learners reach row_objective"),
        })
        .sum()
}

fn perturb_row<R: Rng>(rng: &mut R, row: &LabelDistribution, scale: f64) -> LabelDistribution {
    let l = row.len();
    let weights: Vec<f64> = row
        .probs()
        .iter()
        .map(|p| (p + rng.gen_range(-scale..scale)).max(0.0))
        .collect();
    LabelDistribution::from_weights(weights)
        .unwrap_or_else(|_| crate::distributions::sample_simplex(rng, l))
}

const PERTURB_SCALES: [f64; 5] = [0.002, 0.01, 0.05, 0.2, 0.5];

/// Trains the learner's parameter rows on the given state, then checks by
/// random perturbation that no row can be moved inside the simplex to
/// lower its objective contribution. Every fourth trial uses a fresh
/// random row instead of a local perturbation. Only the learners with an
/// optimality guarantee are accepted.
pub fn verify_parameter_optimality<R: Rng>(
    graph: &BipartiteGraph,
    state: &crate::bootstrap::LabelingState,
    kind: LearnerKind,
    smoothing: &SmoothingConfig,
    trials_per_row: usize,
    rng: &mut R,
) -> Result<OptimalityReport> {
    if !matches!(kind, LearnerKind::Dl1 | LearnerKind::Dl2S) {
        return Err(Error::Unsupported(format!(
            "no optimality guarantee for learner {}",
            kind.name()
        )));
    }
    if trials_per_row == 0 {
        return Err(Error::Unsupported("need at least one trial".into()));
    }
    let l = graph.num_labels();
    let phi = state.phi_slice();
    let mut worst = f64::INFINITY;
    let mut violation = None;
    let mut trials = 0;
    for f in 0..graph.num_features() {
        let stats = count_stats(graph, state, f);
        let trained = match kind {
            LearnerKind::Dl1 => dl1_update(&stats, l),
            LearnerKind::Dl2S => dl2s_update(&stats, smoothing.delta, l),
            _ => unreachable!(),
        };
        let base = row_objective(graph, phi, f, &trained, kind, smoothing.delta);
        for trial in 0..trials_per_row {
            let candidate = if trial % 4 == 3 {
                crate::distributions::sample_simplex(rng, l)
            } else {
                let scale = PERTURB_SCALES[trial % PERTURB_SCALES.len()];
                perturb_row(rng, &trained, scale)
            };
            let value = row_objective(graph, phi, f, &candidate, kind, smoothing.delta);
            trials += 1;
            // +inf - finite base is a legal (huge) increase
            let increase = value - base;
            if increase < worst {
                worst = increase;
                if increase < -1e-9 {
                    violation = Some(OptimalityViolation {
                        feature: f,
                        row: trained.probs().to_vec(),
                        perturbed: candidate.probs().to_vec(),
                        drop: -increase,
                    });
                }
            }
        }
    }
    Ok(OptimalityReport {
        rows: graph.num_features(),
        trials,
        worst_increase: worst,
        violation,
    })
}

/// Outcome of enumerating every point-mass labeling per instance.
#[derive(Debug, Clone, Copy)]
pub struct LabelChoiceReport {
    /// Labeled non-seed instances examined.
    pub checked: usize,
    /// Instances that moved from unlabeled to labeled in this step.
    pub newly_labeled: usize,
    /// Min over instances of (best alternative contribution - chosen
    /// contribution); the chosen label is optimal when this is >= -1e-12.
    pub worst_choice_margin: f64,
    /// Min over newly labeled instances of (uniform contribution - chosen
    /// contribution); the threshold rule makes this strictly positive.
    pub min_strict_drop: f64,
}

fn instance_contribution(
    graph: &BipartiteGraph,
    theta: &Theta,
    x: usize,
    phi_x: &LabelDistribution,
    kind: LearnerKind,
) -> f64 {
    graph
        .features_of(x)
        .iter()
        .map(|&f| match kind {
            LearnerKind::Dl1 => psi_cross_entropy(PsiKind::Quadratic, phi_x, theta.row(f)),
            LearnerKind::Dl2S => cross_entropy(phi_x, theta.row(f)),
            _ => unreachable!("only the guaranteed learners reach instance_contribution"),
        })
        .sum()
}

/// Checks that each relabeling decision minimized the instance's own
/// objective contribution under the trained rows: the chosen label beats
/// every alternative point mass, and an instance labeled for the first
/// time strictly improved on staying uniform.
pub fn verify_label_choice(
    graph: &BipartiteGraph,
    prev: &crate::bootstrap::LabelingState,
    next: &crate::bootstrap::LabelingState,
    theta: &Theta,
    kind: LearnerKind,
) -> Result<LabelChoiceReport> {
    if !matches!(kind, LearnerKind::Dl1 | LearnerKind::Dl2S) {
        return Err(Error::Unsupported(format!(
            "no optimality guarantee for learner {}",
            kind.name()
        )));
    }
    let l = graph.num_labels();
    let mut checked = 0;
    let mut newly_labeled = 0;
    let mut worst_choice_margin = f64::INFINITY;
    let mut min_strict_drop = f64::INFINITY;
    for x in 0..graph.num_instances() {
        if next.is_seed(x) {
            continue;
        }
        let Some(chosen) = next.label(x) else {
            continue;
        };
        checked += 1;
        let chosen_value = instance_contribution(
            graph,
            theta,
            x,
            &LabelDistribution::point_mass(chosen, l),
            kind,
        );
        let best_alternative = (0..l)
            .map(|j| {
                instance_contribution(graph, theta, x, &LabelDistribution::point_mass(j, l), kind)
            })
            .fold(f64::INFINITY, f64::min);
        worst_choice_margin = worst_choice_margin.min(best_alternative - chosen_value);
        if prev.label(x).is_none() {
            newly_labeled += 1;
            let uniform_value =
                instance_contribution(graph, theta, x, &LabelDistribution::uniform(l), kind);
            min_strict_drop = min_strict_drop.min(uniform_value - chosen_value);
        }
    }
    Ok(LabelChoiceReport {
        checked,
        newly_labeled,
        worst_choice_margin,
        min_strict_drop,
    })
}
