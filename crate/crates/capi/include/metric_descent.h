/* C interface for the metric-descent library. */

#ifndef METRIC_DESCENT_H
#define METRIC_DESCENT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum MdStatus {
  MD_STATUS_OK = 0,
  // A required pointer argument was null.
  MD_STATUS_NULL_ARG = 1,
  // The input matrix is not a metric (or sizes are inconsistent).
  MD_STATUS_INVALID_METRIC = 2,
  // The operation requires a negative-type metric.
  MD_STATUS_NOT_NEGATIVE_TYPE = 3,
  // The SDP solver failed or reported infeasibility.
  MD_STATUS_SOLVER = 4,
  // An index or buffer length was out of range.
  MD_STATUS_BOUNDS = 5,
  // An internal invariant failed.
  MD_STATUS_INTERNAL = 6,
} MdStatus;

// Opaque sparsest-cut instance handle.
typedef struct MdCutInstance MdCutInstance;

// Opaque embedding handle.
typedef struct MdEmbedding MdEmbedding;

// Opaque metric space handle.
typedef struct MdMetric MdMetric;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a metric space from a row-major `n * n` distance matrix.
//
// # Safety
// `d` must point to `n * n` doubles; `out` must be a valid pointer.
enum MdStatus md_metric_create(uintptr_t n, const double *d, struct MdMetric **out);

// Builds the Hamming cube `{0,1}^dim` metric.
//
// # Safety
// `out` must be a valid pointer.
enum MdStatus md_metric_hypercube(uint32_t dim, struct MdMetric **out);

// Releases a metric handle; null is a no-op.
//
// # Safety
// `m` must come from this library and not be freed twice.
void md_metric_free(struct MdMetric *m);

// Number of points.
//
// # Safety
// `m` must be a live handle.
uintptr_t md_metric_n(const struct MdMetric *m);

// Distance between two points.
//
// # Safety
// `m` must be a live handle; `out` must be valid.
enum MdStatus md_metric_dist(const struct MdMetric *m, uintptr_t i, uintptr_t j, double *out);

// Writes 1 to `out` when the metric is of negative type, 0 otherwise.
//
// # Safety
// `m` must be a live handle; `out` must be valid.
enum MdStatus md_metric_is_negative_type(const struct MdMetric *m, int32_t *out);

// Runs the full embedding pipeline; `use_reweighted != 0` selects the reweighted
// hyperplane ensemble (requires a negative-type metric), 0 the padded
// partition ensemble.
//
// # Safety
// `m` must be a live handle; `out` must be valid.
enum MdStatus md_embed_full(const struct MdMetric *m,
                            uint64_t seed,
                            uintptr_t samples,
                            int32_t use_reweighted,
                            struct MdEmbedding **out);

// Least-distortion Euclidean re-embedding; writes the contraction floor
// `eps` (distortion is `1/sqrt(eps)`).
//
// # Safety
// All pointers must be valid.
enum MdStatus md_min_distortion(const struct MdMetric *m,
                                double tol,
                                double *eps_out,
                                struct MdEmbedding **out);

// Releases an embedding handle; null is a no-op.
//
// # Safety
// `e` must come from this library and not be freed twice.
void md_embedding_free(struct MdEmbedding *e);

// Ambient dimension of the embedding.
//
// # Safety
// `e` must be a live handle.
uintptr_t md_embedding_dim(const struct MdEmbedding *e);

// Copies the image of point `i` into `buf` (`len >= dim` required).
//
// # Safety
// `e` must be a live handle; `buf` must hold `len` doubles.
enum MdStatus md_embedding_point(const struct MdEmbedding *e,
                                 uintptr_t i,
                                 double *buf,
                                 uintptr_t len);

// Bi-Lipschitz distortion of the embedding against the metric.
//
// # Safety
// All pointers must be valid handles.
enum MdStatus md_embedding_distortion(const struct MdMetric *m,
                                      const struct MdEmbedding *e,
                                      double *out);

// Builds a sparsest-cut instance from row-major `n * n` capacity and
// demand matrices.
//
// # Safety
// `w_n` and `w_d` must point to `n * n` doubles; `out` must be valid.
enum MdStatus md_cut_instance_create(uintptr_t n,
                                     const double *w_n,
                                     const double *w_d,
                                     struct MdCutInstance **out);

// Releases a cut instance handle; null is a no-op.
//
// # Safety
// `inst` must come from this library and not be freed twice.
void md_cut_instance_free(struct MdCutInstance *inst);

// SDP relaxation plus sweep rounding; writes the cut sides (0/1 per
// vertex) and its sparsity.
//
// # Safety
// `side_out` must hold `n` bytes; other pointers must be valid.
enum MdStatus md_round_sdp(const struct MdCutInstance *inst,
                           uint64_t seed,
                           double tol,
                           uint8_t *side_out,
                           uintptr_t side_len,
                           double *phi_out);

// Exact sparsest cut by enumeration (`n <= 24`).
//
// # Safety
// `side_out` must hold `n` bytes; other pointers must be valid.
enum MdStatus md_brute_force_cut(const struct MdCutInstance *inst,
                                 uint8_t *side_out,
                                 uintptr_t side_len,
                                 double *phi_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METRIC_DESCENT_H */
