//! Self-training and label propagation on feature-instance bipartite
//! graphs.
//!
//! The crate builds a bipartite graph between instances and their
//! features, then offers two families of solvers over it:
//!
//! * a self-training loop ([`bootstrap::run`]) that alternates between
//!   fitting per-feature label distributions (decision-list style
//!   learners in [`learners`]) and relabeling instances from the
//!   resulting predictions, while logging objective values per
//!   iteration;
//! * operator sweeps ([`propagation::propagate`]) that move hard or soft
//!   labels across the graph by per-node majority votes or averaging,
//!   with cut-size accounting in the hard-label mode.
//!
//! The [`objectives`] module holds the objective functions the loop
//! monitors together with oracles (perturbation tests, per-instance
//! enumeration, residual measurements) that check the optimizer claims
//! behind each update rule. [`verify`] packages those oracles into
//! randomized suites; the `yarrow` binary exposes everything as
//! subcommands (`run`, `propagate`, `gen`, `verify`).

pub mod bootstrap;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod graph;
pub mod learners;
pub mod objectives;
pub mod propagation;
pub mod synth;
pub mod verify;

pub use bootstrap::{run, IterationTrace, LabelingState, ObjectiveSet, RunOutcome, StopReason};
pub use distributions::{LabelDistribution, PsiKind};
pub use error::{Error, Result};
pub use graph::{build_graph, parse_tsv, BipartiteGraph, Record, SeedLabels, TsvData};
pub use learners::{LearnerKind, SmoothingConfig, Theta};
pub use propagation::{propagate, NodeAssignment, OperatorKind, PropagationOutcome};
pub use verify::{run_suite, CheckReport, Suite};
