//! Label propagation over the bipartite graph by repeated local operator
//! sweeps: each sweep recomputes all feature distributions from the
//! instance side (in parallel, Jacobi style), then all non-seed instance
//! distributions from the fresh feature side.
//!
//! Operators are majority vote or entrywise average per column. A node is
//! only assigned when the operator output is non-uniform, so a labeled node
//! never falls back to unlabeled.

use std::io::Write;

use serde::Serialize;

use crate::distributions::LabelDistribution;
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, SeedLabels};

/// Per-column update operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Majority,
    Average,
}

/// Distributions for both node columns plus the ever-labeled flags that
/// back the hard label view.
#[derive(Debug, Clone)]
pub struct NodeAssignment {
    feature_dists: Vec<LabelDistribution>,
    instance_dists: Vec<LabelDistribution>,
    feature_labeled: Vec<bool>,
    instance_labeled: Vec<bool>,
    seed_mask: Vec<bool>,
}

impl NodeAssignment {
    /// Seeds get point masses; everything else starts uniform.
    pub fn init(graph: &BipartiteGraph, seeds: &SeedLabels) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::NoSeeds);
        }
        let l = graph.num_labels();
        let n = graph.num_instances();
        let mut instance_dists = vec![LabelDistribution::uniform(l); n];
        let mut instance_labeled = vec![false; n];
        let mut seed_mask = vec![false; n];
        for (x, label) in seeds.iter() {
            assert!(x < n, "seed instance {x} outside graph");
            instance_dists[x] = LabelDistribution::point_mass(label, l);
            instance_labeled[x] = true;
            seed_mask[x] = true;
        }
        Ok(Self {
            feature_dists: vec![LabelDistribution::uniform(l); graph.num_features()],
            instance_dists,
            feature_labeled: vec![false; graph.num_features()],
            instance_labeled,
            seed_mask,
        })
    }

    pub fn feature_dists(&self) -> &[LabelDistribution] {
        &self.feature_dists
    }

    pub fn instance_dists(&self) -> &[LabelDistribution] {
        &self.instance_dists
    }

    /// Hard label of a feature, or None while it was never assigned.
    pub fn hard_feature(&self, f: usize) -> Option<usize> {
        self.feature_labeled[f].then(|| self.feature_dists[f].argmax())
    }

    pub fn hard_instance(&self, x: usize) -> Option<usize> {
        self.instance_labeled[x].then(|| self.instance_dists[x].argmax())
    }

    pub fn is_seed(&self, x: usize) -> bool {
        self.seed_mask[x]
    }

    pub fn labeled_features(&self) -> usize {
        self.feature_labeled.iter().filter(|b| **b).count()
    }

    pub fn labeled_instances(&self) -> usize {
        self.instance_labeled.iter().filter(|b| **b).count()
    }
}

/// Majority vote. Uniform voters abstain; every other voter backs its
/// argmax label. All counts equal (including the no-voter case) gives
/// uniform; a tie among a strict subset goes to the lowest tied index.
pub fn majority<'a, I>(dists: I, num_labels: usize) -> LabelDistribution
where
    I: IntoIterator<Item = &'a LabelDistribution>,
{
    let mut counts = vec![0usize; num_labels];
    for d in dists {
        if !d.is_uniform() {
            counts[d.argmax()] += 1;
        }
    }
    let top = *counts.iter().max().expect("at least one label");
    if counts.iter().all(|c| *c == top) {
        return LabelDistribution::uniform(num_labels);
    }
    let winner = counts.iter().position(|c| *c == top).unwrap();
    LabelDistribution::point_mass(winner, num_labels)
}

/// Entrywise mean, renormalized. An empty list averages to uniform.
pub fn average<'a, I>(dists: I, num_labels: usize) -> LabelDistribution
where
    I: IntoIterator<Item = &'a LabelDistribution>,
{
    let mut sums = vec![0.0f64; num_labels];
    let mut count = 0usize;
    for d in dists {
        for (s, p) in sums.iter_mut().zip(d.probs()) {
            *s += p;
        }
        count += 1;
    }
    if count == 0 {
        return LabelDistribution::uniform(num_labels);
    }
    LabelDistribution::from_weights(sums).unwrap_or_else(|_| LabelDistribution::uniform(num_labels))
}

fn apply_operator<'a, I>(op: OperatorKind, dists: I, num_labels: usize) -> LabelDistribution
where
    I: IntoIterator<Item = &'a LabelDistribution>,
{
    match op {
        OperatorKind::Majority => majority(dists, num_labels),
        OperatorKind::Average => average(dists, num_labels),
    }
}

/// Labeled-edge accounting after one sweep.
#[derive(Debug, Clone, Copy)]
pub struct CutReport {
    pub iteration: usize,
    pub cut_size: usize,
    /// Labeled feature count (left column).
    pub labeled_left: usize,
    /// Labeled instance count (right column).
    pub labeled_right: usize,
}

/// Per-sweep log line plus the bookkeeping the cut-decrease argument needs.
#[derive(Debug, Clone, Copy)]
pub struct SweepRecord {
    pub sweep: usize,
    pub labeled: usize,
    pub cut: Option<usize>,
    pub max_delta: f64,
    /// Nodes labeled for the first time during the sweep.
    pub new_labels: usize,
    /// Already-labeled nodes whose hard label changed during the sweep.
    pub flips: usize,
}

#[derive(Serialize)]
struct SweepLine {
    sweep: usize,
    labeled: usize,
    cut: Option<usize>,
    max_delta: f64,
}

/// Full propagation result.
#[derive(Debug, Clone)]
pub struct PropagationOutcome {
    pub assignment: NodeAssignment,
    pub cut_reports: Vec<CutReport>,
    pub sweeps: Vec<SweepRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl PropagationOutcome {
    /// Writes one JSON object per sweep.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in &self.sweeps {
            let line = SweepLine {
                sweep: rec.sweep,
                labeled: rec.labeled,
                cut: rec.cut,
                max_delta: rec.max_delta,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Closed-form sweep bound for the majority/majority mode:
/// sum_{i<=|F|} i * sum_{j<=|X|} j.
pub fn iteration_bound(num_features: usize, num_instances: usize) -> u64 {
    let f = num_features as u128;
    let x = num_instances as u128;
    let b = (f * (f + 1) / 2) * (x * (x + 1) / 2);
    u64::try_from(b).unwrap_or(u64::MAX)
}

/// Default sweep budget: the termination bound for majority/majority,
/// 10*(|F|+|X|)^2 when any column averages.
pub fn default_max_iter(
    feature_op: OperatorKind,
    instance_op: OperatorKind,
    graph: &BipartiteGraph,
) -> usize {
    if feature_op == OperatorKind::Majority && instance_op == OperatorKind::Majority {
        usize::try_from(iteration_bound(graph.num_features(), graph.num_instances()))
            .unwrap_or(usize::MAX)
    } else {
        let n = graph.num_features() + graph.num_instances();
        10usize.saturating_mul(n.saturating_mul(n))
    }
}

/// Runs operator sweeps until the stop rule for the mode fires or
/// `max_iter` sweeps have executed. Majority/majority stops when nothing
/// changed; any averaging mode stops when the largest entrywise change
/// falls below `tol`. Cut reports are kept only in majority/majority mode,
/// where the cut argument applies.
pub fn propagate(
    graph: &BipartiteGraph,
    seeds: &SeedLabels,
    feature_op: OperatorKind,
    instance_op: OperatorKind,
    max_iter: Option<usize>,
    tol: f64,
) -> Result<PropagationOutcome> {
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(feature_op, instance_op, graph));
    if max_iter == 0 {
        return Err(Error::Unsupported("max_iter must be at least 1".into()));
    }
    let pure_majority =
        feature_op == OperatorKind::Majority && instance_op == OperatorKind::Majority;
    let l = graph.num_labels();
    let mut a = NodeAssignment::init(graph, seeds)?;
    let mut cut_reports = Vec::new();
    let mut sweeps = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for sweep in 0..max_iter {
        iterations = sweep + 1;
        let mut max_delta = 0.0f64;
        let mut any_change = false;
        let mut new_labels = 0usize;
        let mut flips = 0usize;

        // feature column, computed wholesale from the previous instance dists
        let new_feature: Vec<LabelDistribution> = (0..graph.num_features())
            .map(|f| {
                let p = apply_operator(
                    feature_op,
                    graph.instances_of(f).iter().map(|&x| &a.instance_dists[x]),
                    l,
                );
                if p.is_uniform() {
                    a.feature_dists[f].clone()
                } else {
                    p
                }
            })
            .collect();
        for (f, p) in new_feature.iter().enumerate() {
            let delta = p.max_abs_diff(&a.feature_dists[f]);
            max_delta = max_delta.max(delta);
            if *p != a.feature_dists[f] {
                any_change = true;
            }
            if !p.is_uniform() {
                if !a.feature_labeled[f] {
                    new_labels += 1;
                } else if p.argmax() != a.feature_dists[f].argmax() {
                    flips += 1;
                }
            }
        }
        for (f, p) in new_feature.into_iter().enumerate() {
            if !p.is_uniform() {
                a.feature_labeled[f] = true;
            }
            a.feature_dists[f] = p;
        }

        // instance column, seeds excluded, from the fresh feature dists
        for x in 0..graph.num_instances() {
            if a.seed_mask[x] {
                continue;
            }
            let q = apply_operator(
                instance_op,
                graph.features_of(x).iter().map(|&f| &a.feature_dists[f]),
                l,
            );
            if q.is_uniform() {
                continue;
            }
            let delta = q.max_abs_diff(&a.instance_dists[x]);
            max_delta = max_delta.max(delta);
            if q != a.instance_dists[x] {
                any_change = true;
            }
            if !a.instance_labeled[x] {
                new_labels += 1;
            } else if q.argmax() != a.instance_dists[x].argmax() {
                flips += 1;
            }
            a.instance_labeled[x] = true;
            a.instance_dists[x] = q;
        }

        let cut = pure_majority.then(|| cut_size(graph, &a));
        if let Some(cut_size) = cut {
            cut_reports.push(CutReport {
                iteration: sweep,
                cut_size,
                labeled_left: a.labeled_features(),
                labeled_right: a.labeled_instances(),
            });
        }
        sweeps.push(SweepRecord {
            sweep,
            labeled: a.labeled_features() + a.labeled_instances(),
            cut,
            max_delta,
            new_labels,
            flips,
        });

        let stable = if pure_majority {
            !any_change
        } else {
            max_delta < tol
        };
        if stable {
            converged = true;
            break;
        }
    }

    Ok(PropagationOutcome {
        assignment: a,
        cut_reports,
        sweeps,
        iterations,
        converged,
    })
}

/// Edges whose endpoints are both hard-labeled with different labels.
/// Edges touching an unlabeled node do not count.
pub fn cut_size(graph: &BipartiteGraph, assignment: &NodeAssignment) -> usize {
    let mut cut = 0;
    for x in 0..graph.num_instances() {
        let Some(yx) = assignment.hard_instance(x) else {
            continue;
        };
        for &f in graph.features_of(x) {
            match assignment.hard_feature(f) {
                Some(yf) if yf != yx => cut += 1,
                _ => {}
            }
        }
    }
    cut
}
