#ifndef FRACLAP_H
#define FRACLAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FraclapMobility {
  FRACLAP_MOBILITY_POWER_EPS = 0,
  FRACLAP_MOBILITY_BERTOZZI_PUGH = 1,
  FRACLAP_MOBILITY_CONSTANT = 2,
} FraclapMobility;

typedef enum FraclapStatus {
  FRACLAP_STATUS_OK = 0,
  // Invalid parameters or arguments.
  FRACLAP_STATUS_USAGE = 1,
  // A solve failed or the data left the admissible domain.
  FRACLAP_STATUS_NUMERIC = 2,
  FRACLAP_STATUS_IO = 3,
  FRACLAP_STATUS_NULL_POINTER = 4,
  // A Rust panic was caught at the boundary.
  FRACLAP_STATUS_PANIC = 5,
} FraclapStatus;

// Opaque run result.
typedef struct FraclapTrajectory FraclapTrajectory;

typedef struct FraclapParams {
  double n;
  double eps;
  double delta;
  double tau;
  size_t modes;
  size_t nodes;
  double horizon;
  double newton_tol;
  size_t newton_max_iter;
  enum FraclapMobility mobility;
  size_t stride;
  bool track_entropy;
} FraclapParams;

typedef struct FraclapStepReport {
  double t;
  double mass;
  double energy_half;
  double dissipation_cum;
  double entropy;
  double h32_cum;
  double min_u;
  double max_u;
  size_t newton_iters;
  double flux_l1;
  uint32_t halvings;
  bool clamped;
} FraclapStepReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread, or null if it succeeded.
// The pointer stays valid until the next fraclap call on the same thread.
const char *fraclap_last_error_message(void);

// Fills `out` with the default parameters.
//
// # Safety
// `out` must be null or point to writable memory for one `FraclapParams`.
enum FraclapStatus fraclap_params_default(struct FraclapParams *out);

// Evolves `u0` (length `len`, resized to `params.modes`). With the
// Bertozzi–Pugh mobility the data is lifted by δ first.
//
// On success `*out` receives a new handle. If the run stops early the
// handle holds the partial trajectory and the status describes the cause;
// either way the caller frees it.
//
// # Safety
// `params` must point to a valid `FraclapParams`, `u0` to `len` doubles and
// `out` to writable storage for one pointer.
enum FraclapStatus fraclap_run(const struct FraclapParams *params,
                               const double *u0,
                               size_t len,
                               struct FraclapTrajectory **out);

// Releases a trajectory. Null is ignored.
//
// # Safety
// `traj` must be null or a handle from `fraclap_run` not yet freed.
void fraclap_trajectory_free(struct FraclapTrajectory *traj);

// Number of accepted steps.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum FraclapStatus fraclap_trajectory_steps(const struct FraclapTrajectory *traj, size_t *out);

// Number of cosine modes in the final state.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum FraclapStatus fraclap_trajectory_modes(const struct FraclapTrajectory *traj, size_t *out);

// Diagnostics of the initial state.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum FraclapStatus fraclap_trajectory_initial(const struct FraclapTrajectory *traj,
                                              struct FraclapStepReport *out);

// Diagnostics after step `index` (0-based).
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum FraclapStatus fraclap_trajectory_report(const struct FraclapTrajectory *traj,
                                             size_t index,
                                             struct FraclapStepReport *out);

// Copies the final state's coefficients into `out` (capacity `len`).
//
// # Safety
// `traj` must be a live handle and `out` must hold `len` doubles.
enum FraclapStatus fraclap_trajectory_final_state(const struct FraclapTrajectory *traj,
                                                  double *out,
                                                  size_t len);

// I(u) coefficient-wise: out_k = −kπ c_k. `out` needs `len` slots.
//
// # Safety
// `coeffs` and `out` must each hold `len` doubles.
enum FraclapStatus fraclap_apply_i(const double *coeffs, size_t len, double *out);

// Zero-mean solution of −I(u) = g; fails with `NUMERIC` when g has nonzero mean.
//
// # Safety
// `coeffs` and `out` must each hold `len` doubles.
enum FraclapStatus fraclap_inverse_i(const double *coeffs, size_t len, double *out);

// Squared semi-norm Σ_{k≥1} c_k² (kπ)^{2s} for s ∈ {0.5, 1, 1.5, 2}.
//
// # Safety
// `coeffs` must hold `len` doubles and `out` must be writable.
enum FraclapStatus fraclap_seminorm(const double *coeffs, size_t len, double order, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACLAP_H */
