//! C interface over the yarrow library: opaque handles, integer status
//! codes, and a thread-local last-error message. All strings are UTF-8,
//! NUL-terminated; strings returned by this library must be released with
//! `yarrow_string_free`, handles with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use yarrow::bootstrap::{self, ObjectiveSet};
use yarrow::graph::{build_graph, parse_tsv};
use yarrow::learners::SmoothingConfig;
use yarrow::propagation::{propagate, OperatorKind, PropagationOutcome};
use yarrow::{BipartiteGraph, Error, LearnerKind, RunOutcome, SeedLabels};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YarrowStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// The input text failed to parse.
    Parse = 3,
    /// The input parsed but violates a structural rule.
    InvalidInput = 4,
    /// Unknown learner, operator, or option value.
    Unsupported = 5,
    /// The dataset contains no seed labels.
    NoSeeds = 6,
    Io = 7,
    Internal = 8,
}

fn status_of(err: &Error) -> YarrowStatus {
    match err {
        Error::Parse { .. } => YarrowStatus::Parse,
        Error::EmptyFeatures { .. }
        | Error::DuplicateInstance { .. }
        | Error::LabelOutOfRange { .. }
        | Error::InvalidDistribution(_)
        | Error::NonUniformDegree { .. }
        | Error::InfeasibleConfig(_) => YarrowStatus::InvalidInput,
        Error::Unsupported(_) => YarrowStatus::Unsupported,
        Error::NoSeeds => YarrowStatus::NoSeeds,
        Error::Io { .. } => YarrowStatus::Io,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(err: &Error) -> YarrowStatus {
    set_error(err.to_string());
    status_of(err)
}

/// Message for the most recent failure on this thread, or null if the
/// last call succeeded. The pointer stays valid until the next yarrow
/// call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn yarrow_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be a pointer previously returned by a yarrow function that
/// documents `yarrow_string_free` as its deallocator, and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn yarrow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, YarrowStatus> {
    if ptr.is_null() {
        set_error("null string argument".into());
        return Err(YarrowStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8".into());
        YarrowStatus::Utf8
    })
}

fn guarded<T>(f: impl FnOnce() -> Result<T, YarrowStatus>) -> Result<T, YarrowStatus> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(_) => {
            set_error("internal panic".into());
            Err(YarrowStatus::Internal)
        }
    }
}

/// A parsed dataset: the bipartite graph plus its seed labels.
pub struct YarrowGraph {
    graph: BipartiteGraph,
    seeds: SeedLabels,
}

/// Parses TSV text (`id<TAB>label_or_?<TAB>feature tokens`, optional
/// `#labels:` header) into a graph handle. `num_labels` of 0 means infer
/// from the data. On success writes the handle to `out` and returns Ok.
///
/// # Safety
/// `text` must point to a NUL-terminated string and `out` to writable
/// storage for one pointer; both must stay valid for the duration of the
/// call.
#[no_mangle]
pub unsafe extern "C" fn yarrow_graph_from_tsv(
    text: *const c_char,
    num_labels: usize,
    out: *mut *mut YarrowGraph,
) -> YarrowStatus {
    if out.is_null() {
        set_error("null output argument".into());
        return YarrowStatus::NullArgument;
    }
    let text = match utf8_arg(text) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let built = guarded(|| {
        let data = parse_tsv(text.as_bytes()).map_err(|e| fail(&e))?;
        let l = data
            .resolve_num_labels((num_labels > 0).then_some(num_labels))
            .map_err(|e| fail(&e))?;
        build_graph(&data.records, l).map_err(|e| fail(&e))
    });
    match built {
        Ok((graph, seeds)) => {
            clear_error();
            *out = Box::into_raw(Box::new(YarrowGraph { graph, seeds }));
            YarrowStatus::Ok
        }
        Err(status) => status,
    }
}

/// Releases a graph handle. Null is ignored.
///
/// # Safety
/// `g` must come from `yarrow_graph_from_tsv` and must not be used after
/// this call.
#[no_mangle]
pub unsafe extern "C" fn yarrow_graph_free(g: *mut YarrowGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Instance count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_graph_num_instances(g: *const YarrowGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.num_instances())
}

/// Feature count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_graph_num_features(g: *const YarrowGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.num_features())
}

/// Label count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_graph_num_labels(g: *const YarrowGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.num_labels())
}

/// Edge count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_graph_num_edges(g: *const YarrowGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.num_edges())
}

/// A finished self-training run.
pub struct YarrowRun {
    outcome: RunOutcome,
}

/// Runs the self-training loop on the graph. `learner` is one of "dl0",
/// "dl1", "dl1r", "dl2s"; `max_iter` of 0 means the default budget (one
/// more than the instance count). On success writes a run handle to
/// `out`.
///
/// # Safety
/// `g` must be a live graph handle, `learner` a NUL-terminated string,
/// and `out` writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn yarrow_run_bootstrap(
    g: *const YarrowGraph,
    learner: *const c_char,
    epsilon: f64,
    delta: f64,
    max_iter: usize,
    out: *mut *mut YarrowRun,
) -> YarrowStatus {
    if g.is_null() || out.is_null() {
        set_error("null argument".into());
        return YarrowStatus::NullArgument;
    }
    let learner = match utf8_arg(learner) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let kind: LearnerKind = match learner.parse() {
        Ok(k) => k,
        Err(e) => return fail(&e),
    };
    let handle = &*g;
    let smoothing = SmoothingConfig { epsilon, delta };
    let ran = guarded(|| {
        bootstrap::run(
            &handle.graph,
            &handle.seeds,
            kind,
            &smoothing,
            &ObjectiveSet::default(),
            (max_iter > 0).then_some(max_iter),
        )
        .map_err(|e| fail(&e))
    });
    match ran {
        Ok(outcome) => {
            clear_error();
            *out = Box::into_raw(Box::new(YarrowRun { outcome }));
            YarrowStatus::Ok
        }
        Err(status) => status,
    }
}

/// Releases a run handle. Null is ignored.
///
/// # Safety
/// `r` must come from `yarrow_run_bootstrap` and must not be used after
/// this call.
#[no_mangle]
pub unsafe extern "C" fn yarrow_run_free(r: *mut YarrowRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of iterations the run recorded, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_run_iterations(r: *const YarrowRun) -> usize {
    r.as_ref().map_or(0, |r| r.outcome.trace.iterations())
}

/// Final labeled-instance count, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_run_labeled_count(r: *const YarrowRun) -> usize {
    r.as_ref().map_or(0, |r| r.outcome.state.labeled_count())
}

/// Final label of an instance: the label index, -1 when the instance is
/// unlabeled, -2 when the handle is null or the index is out of range.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_run_label(r: *const YarrowRun, instance: usize) -> i64 {
    let Some(r) = r.as_ref() else { return -2 };
    if instance >= r.outcome.state.num_instances() {
        return -2;
    }
    match r.outcome.state.label(instance) {
        Some(j) => j as i64,
        None => -1,
    }
}

/// The run's iteration trace as JSON lines. Free with
/// `yarrow_string_free`; returns null for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_run_trace_json(r: *const YarrowRun) -> *mut c_char {
    let Some(r) = r.as_ref() else {
        return std::ptr::null_mut();
    };
    let mut buf = Vec::new();
    if r.outcome.trace.write_jsonl(&mut buf).is_err() {
        return std::ptr::null_mut();
    }
    match CString::new(buf) {
        Ok(c) => c.into_raw(),
        Err(_) => std::ptr::null_mut(),
    }
}

/// A finished propagation run.
pub struct YarrowPropagation {
    outcome: PropagationOutcome,
    num_features: usize,
    num_instances: usize,
}

fn operator_of(name: &str) -> Result<OperatorKind, Error> {
    match name {
        "majority" => Ok(OperatorKind::Majority),
        "average" => Ok(OperatorKind::Average),
        other => Err(Error::Unsupported(format!("unknown operator '{other}'"))),
    }
}

/// Runs operator sweeps on the graph. Operators are "majority" or
/// "average"; `max_iter` of 0 means the mode's default budget. On success
/// writes a propagation handle to `out`.
///
/// # Safety
/// `g` must be a live graph handle, the operator names NUL-terminated
/// strings, and `out` writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn yarrow_propagate(
    g: *const YarrowGraph,
    feature_op: *const c_char,
    instance_op: *const c_char,
    max_iter: usize,
    tol: f64,
    out: *mut *mut YarrowPropagation,
) -> YarrowStatus {
    if g.is_null() || out.is_null() {
        set_error("null argument".into());
        return YarrowStatus::NullArgument;
    }
    let feature_op = match utf8_arg(feature_op) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let instance_op = match utf8_arg(instance_op) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let handle = &*g;
    let ran = guarded(|| {
        let fop = operator_of(feature_op).map_err(|e| fail(&e))?;
        let iop = operator_of(instance_op).map_err(|e| fail(&e))?;
        propagate(
            &handle.graph,
            &handle.seeds,
            fop,
            iop,
            (max_iter > 0).then_some(max_iter),
            tol,
        )
        .map_err(|e| fail(&e))
    });
    match ran {
        Ok(outcome) => {
            clear_error();
            *out = Box::into_raw(Box::new(YarrowPropagation {
                outcome,
                num_features: handle.graph.num_features(),
                num_instances: handle.graph.num_instances(),
            }));
            YarrowStatus::Ok
        }
        Err(status) => status,
    }
}

/// Releases a propagation handle. Null is ignored.
///
/// # Safety
/// `p` must come from `yarrow_propagate` and must not be used after this
/// call.
#[no_mangle]
pub unsafe extern "C" fn yarrow_propagation_free(p: *mut YarrowPropagation) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of sweeps executed, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live propagation handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_propagation_sweeps(p: *const YarrowPropagation) -> usize {
    p.as_ref().map_or(0, |p| p.outcome.iterations)
}

/// Whether the run stopped by its convergence rule rather than the sweep
/// budget. False for a null handle.
///
/// # Safety
/// `p` must be null or a live propagation handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_propagation_converged(p: *const YarrowPropagation) -> bool {
    p.as_ref().is_some_and(|p| p.outcome.converged)
}

/// Final cut size between hard-labeled nodes, or -1 when the mode does
/// not track cuts (any averaging operator) or the handle is null.
///
/// # Safety
/// `p` must be null or a live propagation handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_propagation_cut_size(p: *const YarrowPropagation) -> i64 {
    p.as_ref().map_or(-1, |p| {
        p.outcome
            .cut_reports
            .last()
            .map_or(-1, |c| c.cut_size as i64)
    })
}

/// Hard label of a feature node: label index, -1 when still unlabeled,
/// -2 when the handle is null or the index is out of range.
///
/// # Safety
/// `p` must be null or a live propagation handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_propagation_feature_label(
    p: *const YarrowPropagation,
    feature: usize,
) -> i64 {
    let Some(p) = p.as_ref() else { return -2 };
    if feature >= p.num_features {
        return -2;
    }
    match p.outcome.assignment.hard_feature(feature) {
        Some(j) => j as i64,
        None => -1,
    }
}

/// Hard label of an instance node: label index, -1 when still unlabeled,
/// -2 when the handle is null or the index is out of range.
///
/// # Safety
/// `p` must be null or a live propagation handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_propagation_instance_label(
    p: *const YarrowPropagation,
    instance: usize,
) -> i64 {
    let Some(p) = p.as_ref() else { return -2 };
    if instance >= p.num_instances {
        return -2;
    }
    match p.outcome.assignment.hard_instance(instance) {
        Some(j) => j as i64,
        None => -1,
    }
}

/// The per-sweep trace as JSON lines. Free with `yarrow_string_free`;
/// returns null for a null handle.
///
/// # Safety
/// `p` must be null or a live propagation handle.
#[no_mangle]
pub unsafe extern "C" fn yarrow_propagation_trace_json(p: *const YarrowPropagation) -> *mut c_char {
    let Some(p) = p.as_ref() else {
        return std::ptr::null_mut();
    };
    let mut buf = Vec::new();
    if p.outcome.write_jsonl(&mut buf).is_err() {
        return std::ptr::null_mut();
    }
    match CString::new(buf) {
        Ok(c) => c.into_raw(),
        Err(_) => std::ptr::null_mut(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DATA: &str = "#labels: yes,no\n\
        a\tyes\tf1 f2\n\
        b\t?\tf1 f3\n\
        c\tno\tf3 f4\n\
        d\t?\tf4\n";

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn graph_handle() -> *mut YarrowGraph {
        let mut out: *mut YarrowGraph = std::ptr::null_mut();
        let status = yarrow_graph_from_tsv(cstr(DATA).as_ptr(), 0, &mut out);
        assert_eq!(status, YarrowStatus::Ok);
        assert!(!out.is_null());
        out
    }

    #[test]
    fn graph_round_trip_and_counts() {
        unsafe {
            let g = graph_handle();
            assert_eq!(yarrow_graph_num_instances(g), 4);
            assert_eq!(yarrow_graph_num_features(g), 4);
            assert_eq!(yarrow_graph_num_labels(g), 2);
            assert_eq!(yarrow_graph_num_edges(g), 7);
            yarrow_graph_free(g);
        }
    }

    #[test]
    fn null_and_bad_arguments_set_status() {
        unsafe {
            let mut out: *mut YarrowGraph = std::ptr::null_mut();
            assert_eq!(
                yarrow_graph_from_tsv(std::ptr::null(), 0, &mut out),
                YarrowStatus::NullArgument
            );
            assert_eq!(
                yarrow_graph_from_tsv(cstr(DATA).as_ptr(), 0, std::ptr::null_mut()),
                YarrowStatus::NullArgument
            );
            let bad = cstr("oneline_without_tabs");
            assert_eq!(
                yarrow_graph_from_tsv(bad.as_ptr(), 0, &mut out),
                YarrowStatus::Parse
            );
            assert!(!yarrow_last_error_message().is_null());
            assert_eq!(yarrow_graph_num_instances(std::ptr::null()), 0);
        }
    }

    #[test]
    fn bootstrap_over_the_c_surface() {
        unsafe {
            let g = graph_handle();
            let mut run: *mut YarrowRun = std::ptr::null_mut();
            let status = yarrow_run_bootstrap(g, cstr("dl1").as_ptr(), 0.1, 1.0, 0, &mut run);
            assert_eq!(status, YarrowStatus::Ok);
            assert!(yarrow_run_iterations(run) >= 1);
            assert!(yarrow_run_labeled_count(run) >= 2);
            assert_eq!(yarrow_run_label(run, 0), 0, "seed keeps its label");
            assert_eq!(yarrow_run_label(run, 99), -2);
            let trace = yarrow_run_trace_json(run);
            assert!(!trace.is_null());
            let text = CStr::from_ptr(trace).to_str().unwrap().to_owned();
            assert!(text.starts_with('{'));
            assert!(text.contains("\"t\":0"));
            yarrow_string_free(trace);
            yarrow_run_free(run);

            let mut bad: *mut YarrowRun = std::ptr::null_mut();
            assert_eq!(
                yarrow_run_bootstrap(g, cstr("dl9").as_ptr(), 0.1, 1.0, 0, &mut bad),
                YarrowStatus::Unsupported
            );
            yarrow_graph_free(g);
        }
    }

    #[test]
    fn propagation_over_the_c_surface() {
        unsafe {
            let g = graph_handle();
            let mut p: *mut YarrowPropagation = std::ptr::null_mut();
            let status = yarrow_propagate(
                g,
                cstr("majority").as_ptr(),
                cstr("majority").as_ptr(),
                0,
                1e-8,
                &mut p,
            );
            assert_eq!(status, YarrowStatus::Ok);
            assert!(yarrow_propagation_sweeps(p) >= 1);
            assert!(yarrow_propagation_converged(p));
            assert!(yarrow_propagation_cut_size(p) >= 0);
            assert!(yarrow_propagation_feature_label(p, 0) >= -1);
            assert_eq!(yarrow_propagation_instance_label(p, 99), -2);
            let trace = yarrow_propagation_trace_json(p);
            assert!(!trace.is_null());
            yarrow_string_free(trace);
            yarrow_propagation_free(p);

            let mut bad: *mut YarrowPropagation = std::ptr::null_mut();
            assert_eq!(
                yarrow_propagate(
                    g,
                    cstr("median").as_ptr(),
                    cstr("majority").as_ptr(),
                    0,
                    1e-8,
                    &mut bad
                ),
                YarrowStatus::Unsupported
            );
            yarrow_graph_free(g);
        }
    }
}
