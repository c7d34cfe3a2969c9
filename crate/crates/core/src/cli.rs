//! Command-line front end: dataset ingestion, synthetic generation,
//! experiment runs, propagation runs, and the verification suites.
//!
//! Every command is deterministic given its flags; `--output -` writes to
//! standard output. Commands buffer their whole output before touching the
//! destination, so a failing run leaves no partial files behind.

use std::io::{Read, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::bootstrap::{self, ObjectiveSet};
use crate::error::{Error, Result};
use crate::graph::{build_graph, parse_tsv, TsvData};
use crate::learners::{LearnerKind, SmoothingConfig};
use crate::propagation::{propagate, OperatorKind};
use crate::synth::{generate, write_tsv, GenConfig};
use crate::verify::{run_suite, Suite};

#[derive(Parser)]
#[command(
    name = "yarrow",
    version,
    about = "Self-training and label propagation on feature-instance bipartite graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the self-training loop on a TSV dataset.
    Run(RunArgs),
    /// Run operator sweeps (majority or averaging) over the graph.
    Propagate(PropagateArgs),
    /// Generate a synthetic dataset with planted feature clusters.
    Gen(GenArgs),
    /// Run a verification suite and report each check as JSON.
    Verify(VerifyArgs),
}

fn parse_learner(s: &str) -> std::result::Result<LearnerKind, String> {
    s.parse()
        .map_err(|_| format!("unknown learner '{s}' (expected dl0, dl1, dl1r or dl2s)"))
}

fn parse_operator(s: &str) -> std::result::Result<OperatorKind, String> {
    match s {
        "majority" => Ok(OperatorKind::Majority),
        "average" => Ok(OperatorKind::Average),
        other => Err(format!(
            "unknown operator '{other}' (expected majority or average)"
        )),
    }
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Inclusive edge-count range, written as `k` or `a..b`.
#[derive(Debug, Clone, Copy)]
struct EdgeRange {
    min: usize,
    max: usize,
}

fn parse_edge_range(s: &str) -> std::result::Result<EdgeRange, String> {
    let parse_count = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad edge count '{t}'"))
    };
    if let Some((lo, hi)) = s.split_once("..") {
        Ok(EdgeRange {
            min: parse_count(lo)?,
            max: parse_count(hi)?,
        })
    } else {
        let k = parse_count(s)?;
        Ok(EdgeRange { min: k, max: k })
    }
}

#[derive(Args)]
struct RunArgs {
    /// Input dataset (`-` for standard input).
    #[arg(long)]
    input: String,
    /// Trace destination (`-` for standard output).
    #[arg(long, default_value = "-")]
    output: String,
    /// Final labeling destination; defaults to the trace path with a
    /// `.labels.tsv` extension, or is skipped when tracing to stdout.
    #[arg(long)]
    labels_out: Option<String>,
    #[arg(long, value_parser = parse_learner, default_value = "dl1")]
    learner: LearnerKind,
    /// Additive smoothing for the dl0 learner.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Uniform-prior weight for the dl2s learner (also sets the K_delta
    /// trace column).
    #[arg(long)]
    delta: Option<f64>,
    /// Iteration budget; defaults to one more than the instance count.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Comma-separated objective columns to evaluate
    /// (subset of H,l_t2,K_t2,K_delta).
    #[arg(long, default_value = "H,l_t2,K_t2,K_delta")]
    objectives: String,
    /// Total number of labels; defaults to what the dataset declares.
    #[arg(long)]
    num_labels: Option<usize>,
    /// Accepted for interface parity; the run itself is deterministic.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Args)]
struct PropagateArgs {
    /// Input dataset (`-` for standard input).
    #[arg(long)]
    input: String,
    /// Sweep trace destination (`-` for standard output).
    #[arg(long, default_value = "-")]
    output: String,
    /// Final assignment destination; defaults to the trace path with an
    /// `.assignment.tsv` extension, or is skipped when tracing to stdout.
    #[arg(long)]
    assignment_out: Option<String>,
    #[arg(long, value_parser = parse_operator, default_value = "majority")]
    feature_op: OperatorKind,
    #[arg(long, value_parser = parse_operator, default_value = "majority")]
    instance_op: OperatorKind,
    /// Sweep budget; defaults to the mode's termination bound.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Convergence threshold for averaging modes.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    num_labels: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    /// Dataset destination (`-` for standard output).
    #[arg(long, default_value = "-")]
    output: String,
    #[arg(long)]
    num_instances: usize,
    #[arg(long)]
    num_features: usize,
    #[arg(long, default_value_t = 2)]
    num_labels: usize,
    /// Features per instance, `k` or `a..b` inclusive.
    #[arg(long, value_parser = parse_edge_range, default_value = "1..3")]
    edges: EdgeRange,
    #[arg(long, default_value_t = 0.1)]
    seed_fraction: f64,
    /// Defaults to num_labels.
    #[arg(long)]
    planted_classes: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of lemma1, lemma4, theorem2, theorem6, lemma5, lemma7,
    /// theorem3, harmonic, mismatch, all.
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Report destination (`-` for standard output).
    #[arg(long, default_value = "-")]
    output: String,
}

/// Parses arguments and runs the selected command, reporting errors on
/// standard error.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Propagate(args) => cmd_propagate(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn read_to_string(path: &str) -> Result<String> {
    let wrap = |source| Error::Io {
        path: path.to_string(),
        source,
    };
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf).map_err(wrap)?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(wrap)
    }
}

fn write_bytes(path: &str, bytes: &[u8]) -> Result<()> {
    let wrap = |source| Error::Io {
        path: path.to_string(),
        source,
    };
    if path == "-" {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        lock.write_all(bytes).map_err(wrap)?;
        lock.flush().map_err(wrap)
    } else {
        std::fs::write(path, bytes).map_err(wrap)
    }
}

/// Sibling path for a secondary artifact, or None when the primary output
/// goes to stdout and no explicit destination was given.
fn secondary_path(explicit: Option<String>, output: &str, extension: &str) -> Option<String> {
    explicit.or_else(|| {
        (output != "-").then(|| {
            Path::new(output)
                .with_extension(extension)
                .to_string_lossy()
                .into_owned()
        })
    })
}

fn load_dataset(path: &str, num_labels: Option<usize>) -> Result<(TsvData, usize)> {
    let text = read_to_string(path)?;
    let data = parse_tsv(text.as_bytes())?;
    let l = data.resolve_num_labels(num_labels)?;
    Ok((data, l))
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let kind = args.learner;
    if args.epsilon.is_some() && kind != LearnerKind::Dl0 {
        eprintln!(
            "warning: --epsilon only affects the dl0 learner, ignored for {}",
            kind.name()
        );
    }
    let objectives = ObjectiveSet::parse(&args.objectives)?;
    if args.delta.is_some() && kind != LearnerKind::Dl2S && !objectives.k_delta {
        eprintln!(
            "warning: --delta affects neither the {} learner nor the requested objectives",
            kind.name()
        );
    }
    let smoothing = SmoothingConfig {
        epsilon: args.epsilon.unwrap_or(0.1),
        delta: args.delta.unwrap_or(1.0),
    };
    let (data, l) = load_dataset(&args.input, args.num_labels)?;
    let (graph, seeds) = build_graph(&data.records, l)?;
    let outcome = bootstrap::run(&graph, &seeds, kind, &smoothing, &objectives, args.max_iter)?;

    let mut trace = Vec::new();
    outcome
        .trace
        .write_jsonl(&mut trace)
        .map_err(|source| Error::Io {
            path: args.output.clone(),
            source,
        })?;

    let mut labels = String::new();
    for x in 0..graph.num_instances() {
        let label = match outcome.state.label(x) {
            Some(j) => data.label_name(j),
            None => "?".to_string(),
        };
        labels.push_str(graph.instance_name(x));
        labels.push('\t');
        labels.push_str(&label);
        labels.push('\n');
    }

    write_bytes(&args.output, &trace)?;
    match secondary_path(args.labels_out, &args.output, "labels.tsv") {
        Some(path) => write_bytes(&path, labels.as_bytes())?,
        None => eprintln!("note: pass --labels-out to persist the final labeling"),
    }
    Ok(0)
}

fn cmd_propagate(args: PropagateArgs) -> Result<u8> {
    let (data, l) = load_dataset(&args.input, args.num_labels)?;
    let (graph, seeds) = build_graph(&data.records, l)?;
    let outcome = propagate(
        &graph,
        &seeds,
        args.feature_op,
        args.instance_op,
        args.max_iter,
        args.tol,
    )?;

    let mut trace = Vec::new();
    outcome
        .write_jsonl(&mut trace)
        .map_err(|source| Error::Io {
            path: args.output.clone(),
            source,
        })?;

    let mut assignment = String::new();
    let name_of = |j: Option<usize>| match j {
        Some(j) => data.label_name(j),
        None => "?".to_string(),
    };
    for f in 0..graph.num_features() {
        assignment.push_str("feature\t");
        assignment.push_str(graph.feature_name(f));
        assignment.push('\t');
        assignment.push_str(&name_of(outcome.assignment.hard_feature(f)));
        assignment.push('\n');
    }
    for x in 0..graph.num_instances() {
        assignment.push_str("instance\t");
        assignment.push_str(graph.instance_name(x));
        assignment.push('\t');
        assignment.push_str(&name_of(outcome.assignment.hard_instance(x)));
        assignment.push('\n');
    }

    write_bytes(&args.output, &trace)?;
    match secondary_path(args.assignment_out, &args.output, "assignment.tsv") {
        Some(path) => write_bytes(&path, assignment.as_bytes())?,
        None => eprintln!("note: pass --assignment-out to persist the final assignment"),
    }
    Ok(0)
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let config = GenConfig {
        num_instances: args.num_instances,
        num_features: args.num_features,
        num_labels: args.num_labels,
        edges_min: args.edges.min,
        edges_max: args.edges.max,
        seed_fraction: args.seed_fraction,
        planted_classes: args.planted_classes.unwrap_or(args.num_labels),
        noise: args.noise,
        rng_seed: args.rng_seed,
    };
    let records = generate(&config)?;
    let mut buf = Vec::new();
    write_tsv(&records, &config.label_names(), &mut buf).map_err(|source| Error::Io {
        path: args.output.clone(),
        source,
    })?;
    write_bytes(&args.output, &buf)?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let reports = run_suite(args.suite, args.rng_seed);
    let mut buf = Vec::new();
    for report in &reports {
        let line = serde_json::to_string(report).map_err(|e| Error::Unsupported(e.to_string()))?;
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    write_bytes(&args.output, &buf)?;
    let mut all_pass = true;
    for report in &reports {
        all_pass &= report.pass;
        eprintln!(
            "check {}: {}",
            report.check,
            if report.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(if all_pass { 0 } else { 1 })
}
