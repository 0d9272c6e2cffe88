#ifndef CRNMIX_H
#define CRNMIX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CRN_OK 0

/**
 * Null pointer, bad length or out-of-range argument.
 */
#define CRN_ERR_USAGE 1

/**
 * Malformed network text, dimension mismatch or numerical failure.
 */
#define CRN_ERR_INPUT 2

/**
 * Box too large or explosion budget exceeded.
 */
#define CRN_ERR_RESOURCE 3

/**
 * `crn_certify_json` succeeded but no class matched.
 */
#define CRN_NOT_CERTIFIED 4

#define CRN_ERR_PANIC 5

/**
 * Opaque parsed network.
 */
typedef struct CrnNetwork CrnNetwork;

/**
 * Test function for `crn_generator`: receives a state of length `len`.
 */
typedef double (*CrnStateFn)(const uint32_t *x, size_t len, void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse network text. On success `*out` owns a handle for `crn_network_free`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
int32_t crn_network_parse(const char *text, struct CrnNetwork **out);

/**
 * # Safety
 * `net` must come from `crn_network_parse` and not be freed twice.
 */
void crn_network_free(struct CrnNetwork *net);

/**
 * Number of species, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t crn_network_species_count(const struct CrnNetwork *net);

/**
 * # Safety
 * `net` must be null or a live handle.
 */
size_t crn_network_reaction_count(const struct CrnNetwork *net);

/**
 * Ergodicity certificate as JSON. Returns `CRN_NOT_CERTIFIED` (with the
 * JSON still written) when no class matches.
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
int32_t crn_certify_json(const struct CrnNetwork *net, char **out);

/**
 * Mass-action intensity of reaction `reaction` at state `x`.
 *
 * # Safety
 * `x` must point to `len` values and `out` must be valid.
 */
int32_t crn_intensity(const struct CrnNetwork *net,
                      size_t reaction,
                      const uint32_t *x,
                      size_t len,
                      double *out);

/**
 * Generator applied to the caller's function `f` at state `x`.
 *
 * # Safety
 * `f` must be safe to call with states of length `len` and `user`.
 */
int32_t crn_generator(const struct CrnNetwork *net,
                      CrnStateFn f,
                      void *user,
                      const uint32_t *x,
                      size_t len,
                      double *out);

/**
 * `V(x)` for a state of length `len`.
 *
 * # Safety
 * `x` must point to `len` values and `out` must be valid.
 */
int32_t crn_lyapunov_v(const uint32_t *x, size_t len, double *out);

/**
 * Drift scan over `[0, box_radius]^d`. `delta` is 0 or 0.5. With
 * `linear_w` nonzero the scan uses the core conservation vector.
 *
 * # Safety
 * `net` must be a live handle and `out` a valid pointer.
 */
int32_t crn_drift_scan_json(const struct CrnNetwork *net,
                            double a,
                            double delta,
                            uint32_t box_radius,
                            int32_t linear_w,
                            char **out);

/**
 * Equilibrium from `guess` (all ones when null), complex-balance report
 * and stationary law kind, as JSON.
 *
 * # Safety
 * `guess` must be null or point to `len` values.
 */
int32_t crn_stationary_json(const struct CrnNetwork *net,
                            const double *guess,
                            size_t len,
                            char **out);

/**
 * Empirical law at time `t` from `x0` as CSV (species columns, count,
 * frequency).
 *
 * # Safety
 * `x0` must point to `len` values and `out` must be valid.
 */
int32_t crn_transient_csv(const struct CrnNetwork *net,
                          const uint32_t *x0,
                          size_t len,
                          double t,
                          uint64_t seed,
                          uint64_t replicates,
                          uint32_t box_radius,
                          char **out);

/**
 * TV curve from `x0` along `t_grid` against the reference stationary law,
 * as the long-format curve CSV. `*tau` receives the first grid time with
 * conservative TV at most `epsilon`, or -1 when not reached.
 *
 * # Safety
 * Arrays must hold `len` and `grid_len` values; `out` and `tau` must be
 * valid.
 */
int32_t crn_mixing_csv(const struct CrnNetwork *net,
                       const uint32_t *x0,
                       size_t len,
                       const double *t_grid,
                       size_t grid_len,
                       double epsilon,
                       uint64_t seed,
                       uint64_t replicates,
                       uint32_t box_radius,
                       char **out,
                       double *tau);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void crn_string_free(char *s);

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *crn_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRNMIX_H */
