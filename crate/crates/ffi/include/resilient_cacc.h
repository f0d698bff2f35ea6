#ifndef RESILIENT_CACC_H
#define RESILIENT_CACC_H

/* Generated by cbindgen from the resilient-cacc-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CaccStatus {
  CACC_STATUS_OK = 0,
  CACC_STATUS_NULL_POINTER = 1,
  CACC_STATUS_INVALID_ARGUMENT = 2,
  CACC_STATUS_UNKNOWN_SCENARIO = 3,
  CACC_STATUS_MALFORMED_CONFIG = 4,
  CACC_STATUS_MISSING_FILE = 5,
  CACC_STATUS_SIMULATION = 6,
  CACC_STATUS_SYNTHESIS = 7,
  CACC_STATUS_IO = 8,
  // The simulation already emitted its final row.
  CACC_STATUS_FINISHED = 9,
  CACC_STATUS_PANIC = 10,
} CaccStatus;

// Opaque observer gain set.
typedef struct CaccGains CaccGains;

// Opaque simulation handle.
typedef struct CaccSimulation CaccSimulation;

// Per-run overrides; start from [`cacc_run_options_default`].
typedef struct CaccRunOptions {
  // 0 keeps the scenario's seed.
  uint64_t seed;
  // Non-positive keeps the scenario's step.
  double dt;
  // Non-positive keeps the scenario's horizon.
  double t_end;
  uint8_t baseline;
} CaccRunOptions;

// One trace row; field meanings follow the trace CSV columns.
typedef struct CaccRow {
  double t;
  double leader_x;
  double leader_v;
  double follower_x;
  double follower_v;
  double y;
  double x_lo;
  double x_hi;
  double x_hat;
  double v_lo;
  double v_hi;
  double gap;
  double e;
  double r;
  double u_leader;
  double u_bar;
  double u_follower;
  double f;
  double f_hat;
  double f_tilde;
  double eps_pos;
  uint8_t contained;
} CaccRow;

typedef struct CaccMetrics {
  double position_rmse;
  double distance_rmse;
  double min_gap;
  double containment_rate;
  // NaN when there is no attack or the estimate never settles.
  double settling_time;
  uint8_t collision;
} CaccMetrics;

typedef struct CaccWeightNorms {
  double w;
  double v;
  double max_w;
  double max_v;
  uint64_t clamp_events;
} CaccWeightNorms;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Defaults that keep every scenario setting.
struct CaccRunOptions cacc_run_options_default(void);

// Static description of a status code. Never null.
const char *cacc_status_str(enum CaccStatus status);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length, 0 if there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t cacc_last_error(char *buf, size_t len);

// Creates a simulation of a built-in scenario. `options` may be null.
//
// # Safety
// `scenario` must be a NUL-terminated string; `options` null or valid; `out` writable.
enum CaccStatus cacc_simulation_new(const char *scenario,
                                    const struct CaccRunOptions *options,
                                    struct CaccSimulation **out);

// Creates a simulation from a scenario config file. `options` may be null.
//
// # Safety
// As [`cacc_simulation_new`], with `path` a NUL-terminated file path.
enum CaccStatus cacc_simulation_from_config(const char *path,
                                            const struct CaccRunOptions *options,
                                            struct CaccSimulation **out);

// Creates a built-in scenario simulation that uses `gains` for its observer.
//
// # Safety
// As [`cacc_simulation_new`]; `gains` must be a live handle.
enum CaccStatus cacc_simulation_with_gains(const char *scenario,
                                           const struct CaccRunOptions *options,
                                           const struct CaccGains *gains,
                                           struct CaccSimulation **out);

// Emits the row at the current time into `row` (may be null) and advances.
// The row at the horizon is emitted last; later calls return `Finished`.
//
// # Safety
// `sim` must be a live handle; `row` null or writable.
enum CaccStatus cacc_simulation_step(struct CaccSimulation *sim, struct CaccRow *row);

// Steps until the horizon (or the first error).
//
// # Safety
// `sim` must be a live handle.
enum CaccStatus cacc_simulation_run(struct CaccSimulation *sim);

// Simulation time of the next row to be emitted.
//
// # Safety
// `sim` must be null or a live handle. Returns NaN for null.
double cacc_simulation_time(const struct CaccSimulation *sim);

// Number of rows emitted so far.
//
// # Safety
// `sim` must be null or a live handle.
size_t cacc_simulation_row_count(const struct CaccSimulation *sim);

// Copies emitted row `index`.
//
// # Safety
// `sim` must be a live handle; `row` writable.
enum CaccStatus cacc_simulation_row(const struct CaccSimulation *sim,
                                    size_t index,
                                    struct CaccRow *row);

// Metrics over the rows emitted so far.
//
// # Safety
// `sim` must be a live handle; `out` writable.
enum CaccStatus cacc_simulation_metrics(const struct CaccSimulation *sim, struct CaccMetrics *out);

// Current estimator weight norms and their running maxima.
//
// # Safety
// `sim` must be a live handle; `out` writable.
enum CaccStatus cacc_simulation_weight_norms(const struct CaccSimulation *sim,
                                             struct CaccWeightNorms *out);

// Writes the rows emitted so far as a trace CSV.
//
// # Safety
// `sim` must be a live handle; `path` a NUL-terminated path.
enum CaccStatus cacc_simulation_write_trace(const struct CaccSimulation *sim, const char *path);

// # Safety
// `sim` must be null or a handle not yet freed.
void cacc_simulation_free(struct CaccSimulation *sim);

// Tabulated gains: `set` is "noise-free" or "noisy".
//
// # Safety
// `set` must be a NUL-terminated string; `out` writable.
enum CaccStatus cacc_gains_tabulated(const char *set, struct CaccGains **out);

// Gains from the synthesis LP for a built-in scenario's bounds.
//
// # Safety
// `scenario` must be a NUL-terminated string; `out` writable.
enum CaccStatus cacc_gains_synthesize(const char *scenario, struct CaccGains **out);

// Gains read from a gain file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` writable.
enum CaccStatus cacc_gains_load(const char *path, struct CaccGains **out);

// Copies the two-state gain matrices: `l` and `n` take 2 entries, `t` takes
// 4 in row-major order.
//
// # Safety
// `gains` must be a live handle; the output arrays writable at those sizes.
enum CaccStatus cacc_gains_get(const struct CaccGains *gains, double *l, double *t, double *n);

// # Safety
// `gains` must be null or a handle not yet freed.
void cacc_gains_free(struct CaccGains *gains);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESILIENT_CACC_H */
