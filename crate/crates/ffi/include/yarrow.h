#ifndef YARROW_H
#define YARROW_H

/* Generated by cbindgen from the yarrow-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum YarrowStatus {
  YarrowStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  YarrowStatus_NullArgument = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  YarrowStatus_Utf8 = 2,
  /**
   * The input text failed to parse.
   */
  YarrowStatus_Parse = 3,
  /**
   * The input parsed but violates a structural rule.
   */
  YarrowStatus_InvalidInput = 4,
  /**
   * Unknown learner, operator, or option value.
   */
  YarrowStatus_Unsupported = 5,
  /**
   * The dataset contains no seed labels.
   */
  YarrowStatus_NoSeeds = 6,
  YarrowStatus_Io = 7,
  YarrowStatus_Internal = 8,
} YarrowStatus;

/**
 * A parsed dataset: the bipartite graph plus its seed labels.
 */
typedef struct YarrowGraph YarrowGraph;

/**
 * A finished propagation run.
 */
typedef struct YarrowPropagation YarrowPropagation;

/**
 * A finished self-training run.
 */
typedef struct YarrowRun YarrowRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if the
 * last call succeeded. The pointer stays valid until the next yarrow
 * call on the same thread; do not free it.
 */
const char *yarrow_last_error_message(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be a pointer previously returned by a yarrow function that
 * documents `yarrow_string_free` as its deallocator, and must not be
 * used afterwards.
 */
void yarrow_string_free(char *s);

/**
 * Parses TSV text (`id<TAB>label_or_?<TAB>feature tokens`, optional
 * `#labels:` header) into a graph handle. `num_labels` of 0 means infer
 * from the data. On success writes the handle to `out` and returns Ok.
 *
 * # Safety
 * `text` must point to a NUL-terminated string and `out` to writable
 * storage for one pointer; both must stay valid for the duration of the
 * call.
 */
enum YarrowStatus yarrow_graph_from_tsv(const char *text,
                                        size_t num_labels,
                                        struct YarrowGraph **out);

/**
 * Releases a graph handle. Null is ignored.
 *
 * # Safety
 * `g` must come from `yarrow_graph_from_tsv` and must not be used after
 * this call.
 */
void yarrow_graph_free(struct YarrowGraph *g);

/**
 * Instance count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t yarrow_graph_num_instances(const struct YarrowGraph *g);

/**
 * Feature count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t yarrow_graph_num_features(const struct YarrowGraph *g);

/**
 * Label count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t yarrow_graph_num_labels(const struct YarrowGraph *g);

/**
 * Edge count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t yarrow_graph_num_edges(const struct YarrowGraph *g);

/**
 * Runs the self-training loop on the graph. `learner` is one of "dl0",
 * "dl1", "dl1r", "dl2s"; `max_iter` of 0 means the default budget (one
 * more than the instance count). On success writes a run handle to
 * `out`.
 *
 * # Safety
 * `g` must be a live graph handle, `learner` a NUL-terminated string,
 * and `out` writable storage for one pointer.
 */
enum YarrowStatus yarrow_run_bootstrap(const struct YarrowGraph *g,
                                       const char *learner,
                                       double epsilon,
                                       double delta,
                                       size_t max_iter,
                                       struct YarrowRun **out);

/**
 * Releases a run handle. Null is ignored.
 *
 * # Safety
 * `r` must come from `yarrow_run_bootstrap` and must not be used after
 * this call.
 */
void yarrow_run_free(struct YarrowRun *r);

/**
 * Number of iterations the run recorded, or 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
size_t yarrow_run_iterations(const struct YarrowRun *r);

/**
 * Final labeled-instance count, or 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
size_t yarrow_run_labeled_count(const struct YarrowRun *r);

/**
 * Final label of an instance: the label index, -1 when the instance is
 * unlabeled, -2 when the handle is null or the index is out of range.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
int64_t yarrow_run_label(const struct YarrowRun *r, size_t instance);

/**
 * The run's iteration trace as JSON lines. Free with
 * `yarrow_string_free`; returns null for a null handle.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
char *yarrow_run_trace_json(const struct YarrowRun *r);

/**
 * Runs operator sweeps on the graph. Operators are "majority" or
 * "average"; `max_iter` of 0 means the mode's default budget. On success
 * writes a propagation handle to `out`.
 *
 * # Safety
 * `g` must be a live graph handle, the operator names NUL-terminated
 * strings, and `out` writable storage for one pointer.
 */
enum YarrowStatus yarrow_propagate(const struct YarrowGraph *g,
                                   const char *feature_op,
                                   const char *instance_op,
                                   size_t max_iter,
                                   double tol,
                                   struct YarrowPropagation **out);

/**
 * Releases a propagation handle. Null is ignored.
 *
 * # Safety
 * `p` must come from `yarrow_propagate` and must not be used after this
 * call.
 */
void yarrow_propagation_free(struct YarrowPropagation *p);

/**
 * Number of sweeps executed, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live propagation handle.
 */
size_t yarrow_propagation_sweeps(const struct YarrowPropagation *p);

/**
 * Whether the run stopped by its convergence rule rather than the sweep
 * budget. False for a null handle.
 *
 * # Safety
 * `p` must be null or a live propagation handle.
 */
bool yarrow_propagation_converged(const struct YarrowPropagation *p);

/**
 * Final cut size between hard-labeled nodes, or -1 when the mode does
 * not track cuts (any averaging operator) or the handle is null.
 *
 * # Safety
 * `p` must be null or a live propagation handle.
 */
int64_t yarrow_propagation_cut_size(const struct YarrowPropagation *p);

/**
 * Hard label of a feature node: label index, -1 when still unlabeled,
 * -2 when the handle is null or the index is out of range.
 *
 * # Safety
 * `p` must be null or a live propagation handle.
 */
int64_t yarrow_propagation_feature_label(const struct YarrowPropagation *p, size_t feature);

/**
 * Hard label of an instance node: label index, -1 when still unlabeled,
 * -2 when the handle is null or the index is out of range.
 *
 * # Safety
 * `p` must be null or a live propagation handle.
 */
int64_t yarrow_propagation_instance_label(const struct YarrowPropagation *p, size_t instance);

/**
 * The per-sweep trace as JSON lines. Free with `yarrow_string_free`;
 * returns null for a null handle.
 *
 * # Safety
 * `p` must be null or a live propagation handle.
 */
char *yarrow_propagation_trace_json(const struct YarrowPropagation *p);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* YARROW_H */
