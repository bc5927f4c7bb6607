/* C interface to the pcmap contractivity library.
 *
 * Conventions:
 *   - Complex matrices are flat row-major buffers of interleaved doubles:
 *     entry (r, c) of an m x n matrix occupies buf[2*(r*n + c)] (real part)
 *     and buf[2*(r*n + c) + 1] (imaginary part).
 *   - Every fallible call returns a PcmapStatus; on failure a message for
 *     the calling thread is available via pcmap_last_error.
 *   - Handles returned through out-parameters are owned by the caller and
 *     must be released with pcmap_map_free.
 */

#ifndef PCMAP_H
#define PCMAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum PcmapStatus {
  PCMAP_STATUS_OK = 0,
  PCMAP_STATUS_NULL_POINTER = 1,
  PCMAP_STATUS_INVALID_INPUT = 2,
  PCMAP_STATUS_DIMENSION_MISMATCH = 3,
  PCMAP_STATUS_CONSTRAINT = 4,
  PCMAP_STATUS_INTERNAL = 5,
  PCMAP_STATUS_PANIC = 6,
} PcmapStatus;

/* Per-level verdict codes written by pcmap_hierarchy_verdicts. */
#define PCMAP_VERDICT_VIOLATION (-1)
#define PCMAP_VERDICT_UNDECIDED 0
#define PCMAP_VERDICT_MEMBER 1

/* Opaque handle around a superoperator. */
typedef struct PcmapMap PcmapMap;

/* Copies the most recent error message on this thread into buf
 * (NUL-terminated, truncated to cap). Returns the full length of the
 * message including the terminator, or 0 when the last call succeeded. */
size_t pcmap_last_error(char *buf, size_t cap);

/* Builds a map from a family spec such as "lambda:a=0.6", "omega:eps=0.5",
 * "phi_p:d=3,p=1.5", or "transpose:d=2". */
PcmapStatus pcmap_map_from_spec(const char *spec, PcmapMap **out);

/* Builds a map on a dim-level system from its dim^2 x dim^2 superoperator,
 * passed as 2 * dim^4 doubles. */
PcmapStatus pcmap_map_from_superop(size_t dim, const double *superop,
                                   const char *label, PcmapMap **out);

/* Composition first . then: the returned map applies then, then first. */
PcmapStatus pcmap_map_compose(const PcmapMap *first, const PcmapMap *then,
                              PcmapMap **out);

/* Releases a map handle. Null is a no-op. */
void pcmap_map_free(PcmapMap *map);

/* System dimension of the map, or 0 for a null handle. */
size_t pcmap_map_dim(const PcmapMap *map);

/* Smallest eigenvalue of the Choi matrix. */
PcmapStatus pcmap_choi_lambda_min(const PcmapMap *map, double *out);

/* Writes 1 when the Choi matrix is positive semidefinite within tol, else 0.
 * Requires a Hermiticity-preserving map. */
PcmapStatus pcmap_is_completely_positive(const PcmapMap *map, double tol,
                                         int32_t *out);

/* Runs the full contraction scan over levels 1..dim^2 and writes one verdict
 * code per level into out (PCMAP_VERDICT_*). out_len receives the number of
 * levels; cap must be at least that. */
PcmapStatus pcmap_hierarchy_verdicts(const PcmapMap *map, size_t restarts,
                                     size_t iters, uint64_t seed, int32_t *out,
                                     size_t cap, size_t *out_len);

/* Worst extension margin of a qubit map over a grid of canonical three-state
 * spans, plus a flag for whether every grid point admitted a
 * trace-norm-compatible extension. */
PcmapStatus pcmap_extension_margin(const PcmapMap *map, size_t grid,
                                   double *out_margin,
                                   int32_t *out_all_feasible);

/* Smallest eigenvalue of (id (x) map) applied to the isotropic state with
 * fidelity f on the map's dimension. */
PcmapStatus pcmap_isotropic_witness(const PcmapMap *map, double fidelity,
                                    double *out);

/* Fidelity at which the witness spectrum of the isotropic family crosses
 * zero, bisected inside [lo, hi]. */
PcmapStatus pcmap_isotropic_threshold(const PcmapMap *map, double lo,
                                      double hi, double *out);

/* Canonical parameter of a linearly independent triple of qubit density
 * matrices, each passed as 8 doubles (2x2, row-major, interleaved). */
PcmapStatus pcmap_canonical_parameter(const double *rho1, const double *rho2,
                                      const double *rho3, double *out_p);

#ifdef __cplusplus
}
#endif

#endif /* PCMAP_H */
