//! Self-training driver: alternate between fitting the base learner on the
//! current labeling and relabeling instances from its predictions, until the
//! labeling reaches a fixpoint or the iteration budget runs out.
//!
//! Relabeling semantics: seeds are frozen; an already-labeled instance
//! always moves to the current argmax (it may change label but never
//! becomes unlabeled again); an unlabeled instance is labeled only when its
//! top prediction strictly exceeds 1/L.

use std::io::Write;

use serde::Serialize;

use crate::distributions::LabelDistribution;
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, SeedLabels};
use crate::learners::{predict_all, train, LearnerKind, SmoothingConfig, Theta};
use crate::objectives;

/// Per-instance hard labels plus the matching distributions.
///
/// The two views stay locked together: label j means a point mass on j,
/// no label means uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelingState {
    y: Vec<Option<usize>>,
    phi: Vec<LabelDistribution>,
    seed_mask: Vec<bool>,
    num_labels: usize,
}

impl LabelingState {
    /// Initial state: seeded instances carry their seed label, the rest are
    /// unlabeled.
    pub fn from_seeds(graph: &BipartiteGraph, seeds: &SeedLabels) -> Self {
        let n = graph.num_instances();
        let l = graph.num_labels();
        let mut y = vec![None; n];
        let mut seed_mask = vec![false; n];
        for (x, label) in seeds.iter() {
            assert!(x < n, "seed instance {x} outside graph");
            assert!(label < l, "seed label {label} outside label set");
            y[x] = Some(label);
            seed_mask[x] = true;
        }
        let phi = y
            .iter()
            .map(|label| match label {
                Some(j) => LabelDistribution::point_mass(*j, l),
                None => LabelDistribution::uniform(l),
            })
            .collect();
        Self {
            y,
            phi,
            seed_mask,
            num_labels: l,
        }
    }

    pub fn label(&self, x: usize) -> Option<usize> {
        self.y[x]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.y
    }

    pub fn phi(&self, x: usize) -> &LabelDistribution {
        &self.phi[x]
    }

    /// Distributions for all instances, aligned with instance ids.
    pub fn phi_slice(&self) -> &[LabelDistribution] {
        &self.phi
    }

    pub fn is_seed(&self, x: usize) -> bool {
        self.seed_mask[x]
    }

    pub fn labeled_count(&self) -> usize {
        self.y.iter().filter(|y| y.is_some()).count()
    }

    pub fn num_instances(&self) -> usize {
        self.y.len()
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }
}

/// One relabeling pass. Returns the new state and how many labels changed.
pub fn relabel_step(
    state: &LabelingState,
    predictions: &[LabelDistribution],
) -> (LabelingState, usize) {
    assert_eq!(predictions.len(), state.y.len());
    let l = state.num_labels;
    let threshold = 1.0 / l as f64;
    let mut next = state.clone();
    let mut changed = 0;
    for (x, pi) in predictions.iter().enumerate() {
        if state.seed_mask[x] {
            continue;
        }
        let top = pi.argmax();
        let new_label = match state.y[x] {
            Some(_) => Some(top),
            None if pi.get(top) > threshold => Some(top),
            None => None,
        };
        if new_label != state.y[x] {
            changed += 1;
            next.y[x] = new_label;
            next.phi[x] = match new_label {
                Some(j) => LabelDistribution::point_mass(j, l),
                None => LabelDistribution::uniform(l),
            };
        }
    }
    (next, changed)
}

/// Which objective columns a run evaluates.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveSet {
    pub h: bool,
    pub l_t2: bool,
    pub k_t2: bool,
    pub k_delta: bool,
}

impl Default for ObjectiveSet {
    fn default() -> Self {
        Self {
            h: true,
            l_t2: true,
            k_t2: true,
            k_delta: true,
        }
    }
}

impl ObjectiveSet {
    /// Parses a comma-separated subset of `H,l_t2,K_t2,K_delta`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut set = Self {
            h: false,
            l_t2: false,
            k_t2: false,
            k_delta: false,
        };
        for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "H" => set.h = true,
                "l_t2" => set.l_t2 = true,
                "K_t2" => set.k_t2 = true,
                "K_delta" => set.k_delta = true,
                other => return Err(Error::Unsupported(format!("unknown objective '{other}'"))),
            }
        }
        Ok(set)
    }
}

/// Objective values at one half-step. NaN marks a column the run did not
/// evaluate; +inf marks a zero-probability term.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveSnapshot {
    pub h: f64,
    pub l_t2: f64,
    pub k_t2: f64,
    pub k_delta: f64,
}

impl ObjectiveSnapshot {
    fn evaluate(
        graph: &BipartiteGraph,
        phi: &[LabelDistribution],
        theta: &Theta,
        predictions: &[LabelDistribution],
        delta: f64,
        set: &ObjectiveSet,
    ) -> Self {
        Self {
            h: if set.h {
                objectives::objective_h(phi, predictions)
            } else {
                f64::NAN
            },
            l_t2: if set.l_t2 {
                objectives::objective_l_t2(phi, predictions)
            } else {
                f64::NAN
            },
            k_t2: if set.k_t2 {
                objectives::objective_k_t2(graph, phi, theta.rows())
            } else {
                f64::NAN
            },
            k_delta: if set.k_delta {
                objectives::objective_k_delta(graph, phi, theta.rows(), delta)
            } else {
                f64::NAN
            },
        }
    }
}

/// Why the driver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The labeling repeated itself.
    Fixpoint,
    /// max_iter was reached first.
    Budget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Fixpoint => "fixpoint",
            StopReason::Budget => "budget",
        }
    }
}

/// One driver iteration: the labeled count and change count after
/// relabeling, with objective values at both half-steps.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub t: usize,
    pub labeled: usize,
    pub changed: usize,
    /// Values right after the parameter update, before relabeling.
    pub post_update: ObjectiveSnapshot,
    /// Values after relabeling; these are what the trace emits.
    pub post_relabel: ObjectiveSnapshot,
    pub stop: Option<StopReason>,
}

/// Whole-run iteration log.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

#[derive(Serialize)]
struct TraceLine {
    t: usize,
    labeled: usize,
    changed: usize,
    #[serde(rename = "H")]
    h: Option<f64>,
    l_t2: Option<f64>,
    #[serde(rename = "K_t2")]
    k_t2: Option<f64>,
    #[serde(rename = "K_delta")]
    k_delta: Option<f64>,
    stop: Option<&'static str>,
}

fn json_number(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl IterationTrace {
    /// Writes one JSON object per iteration. Objective values that are
    /// unevaluated or infinite serialize as null.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in &self.records {
            let line = TraceLine {
                t: rec.t,
                labeled: rec.labeled,
                changed: rec.changed,
                h: json_number(rec.post_relabel.h),
                l_t2: json_number(rec.post_relabel.l_t2),
                k_t2: json_number(rec.post_relabel.k_t2),
                k_delta: json_number(rec.post_relabel.k_delta),
                stop: rec.stop.map(StopReason::as_str),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.records.last().and_then(|r| r.stop)
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

/// Result of a full driver run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: LabelingState,
    pub theta: Theta,
    pub trace: IterationTrace,
}

/// Runs the driver to a labeling fixpoint or for `max_iter` iterations,
/// whichever comes first. `max_iter` defaults to one more than the number
/// of instances, which suffices whenever labeling happens to be monotone.
pub fn run(
    graph: &BipartiteGraph,
    seeds: &SeedLabels,
    kind: LearnerKind,
    smoothing: &SmoothingConfig,
    objectives: &ObjectiveSet,
    max_iter: Option<usize>,
) -> Result<RunOutcome> {
    if seeds.is_empty() {
        return Err(Error::NoSeeds);
    }
    let max_iter = max_iter.unwrap_or(graph.num_instances() + 1);
    if max_iter == 0 {
        return Err(Error::Unsupported("max_iter must be at least 1".into()));
    }
    let mut state = LabelingState::from_seeds(graph, seeds);
    let mut trace = IterationTrace::default();
    let mut theta = train(graph, &state, kind, smoothing);
    for t in 0..max_iter {
        if t > 0 {
            theta = train(graph, &state, kind, smoothing);
        }
        let predictions = predict_all(&theta, graph, kind);
        let post_update = ObjectiveSnapshot::evaluate(
            graph,
            state.phi_slice(),
            &theta,
            &predictions.dists,
            smoothing.delta,
            objectives,
        );
        let (next, changed) = relabel_step(&state, &predictions.dists);
        let post_relabel = ObjectiveSnapshot::evaluate(
            graph,
            next.phi_slice(),
            &theta,
            &predictions.dists,
            smoothing.delta,
            objectives,
        );
        state = next;
        let stop = if changed == 0 {
            Some(StopReason::Fixpoint)
        } else if t + 1 == max_iter {
            Some(StopReason::Budget)
        } else {
            None
        };
        trace.records.push(IterationRecord {
            t,
            labeled: state.labeled_count(),
            changed,
            post_update,
            post_relabel,
            stop,
        });
        if stop == Some(StopReason::Fixpoint) {
            break;
        }
    }
    Ok(RunOutcome {
        state,
        theta,
        trace,
    })
}
