#ifndef MAXWELL_FFI_H
#define MAXWELL_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum MxStatus {
  MX_STATUS_OK = 0,
  MX_STATUS_NULL_POINTER = 1,
  MX_STATUS_INVALID_ARGUMENT = 2,
  MX_STATUS_BUFFER_TOO_SMALL = 3,
  MX_STATUS_CFL_VIOLATION = 4,
  MX_STATUS_BLOW_UP = 5,
  MX_STATUS_FINISHED = 6,
  MX_STATUS_INTERNAL = 7,
  MX_STATUS_PANIC = 8,
} MxStatus;

/**
 * Structured triangulation of the unit square.
 */
typedef struct MxMesh MxMesh;

/**
 * One time-stepping run with fixed operators.
 */
typedef struct MxSimulation MxSimulation;

/**
 * Terms of the discrete energy functional at the current level.
 */
typedef struct MxEnergy {
  double t;
  double dt_e_eps;
  double e_sigma;
  double grad_e;
  double div_e_eps_m1;
  double total;
} MxEnergy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mx_version(void);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the length needed including the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t mx_last_error_message(char *buf, size_t len);

/**
 * Build the level-`level` mesh (`h = 2^-level`).
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free with [`mx_mesh_free`].
 */
enum MxStatus mx_mesh_new(uint32_t level, struct MxMesh **out);

/**
 * # Safety
 * `mesh` must be null or a handle from [`mx_mesh_new`] not yet freed.
 */
void mx_mesh_free(struct MxMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle; `out` must be valid.
 */
enum MxStatus mx_mesh_counts(const struct MxMesh *mesh,
                             size_t *num_vertices,
                             size_t *num_triangles);

/**
 * Copy vertex coordinates as interleaved `x, y` pairs into `xy` (`len ≥ 2·num_vertices`).
 *
 * # Safety
 * `mesh` must be a live handle; `xy` must point to `len` writable doubles.
 */
enum MxStatus mx_mesh_vertices(const struct MxMesh *mesh, double *xy, size_t len);

/**
 * Formula bound on the time step for `level`, profile `m` and constant `c`.
 *
 * # Safety
 * `out` must be valid.
 */
enum MxStatus mx_cfl_max_tau(uint32_t level, uint32_t m, double c, double *out);

/**
 * Create a run on the level-`level` mesh from zero initial data to `t_final`.
 * `m = 0` is the uniform medium. With `manufactured` the scheme is driven by the
 * manufactured source; otherwise the source is zero. Unless `cfl_override`, a
 * step above the CFL bound for `cfl_c` is refused with `MX_STATUS_CFL_VIOLATION`.
 *
 * # Safety
 * `out` must be valid; on success it receives a handle to free with [`mx_simulation_free`].
 */
enum MxStatus mx_simulation_new(uint32_t level,
                                uint32_t m,
                                double tau,
                                double t_final,
                                double cfl_c,
                                bool cfl_override,
                                bool manufactured,
                                struct MxSimulation **out);

/**
 * # Safety
 * `sim` must be null or a handle from [`mx_simulation_new`] not yet freed.
 */
void mx_simulation_free(struct MxSimulation *sim);

/**
 * Number of degrees of freedom (`2 · num_vertices`).
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum MxStatus mx_simulation_num_dofs(const struct MxSimulation *sim, size_t *out);

/**
 * Restart from `E^0 = f0`, `E^1 = f0 + τ f1` (node-major `E1, E2` pairs, length `num_dofs`).
 * Boundary values are zeroed.
 *
 * # Safety
 * `sim` must be a live handle; `f0` and `f1` must each point to `len` doubles.
 */
enum MxStatus mx_simulation_set_initial(struct MxSimulation *sim,
                                        const double *f0,
                                        const double *f1,
                                        size_t len);

/**
 * Advance at most `max_steps` steps, stopping at the final time. `taken` receives
 * the number performed. Returns `MX_STATUS_FINISHED` when already at the final time.
 *
 * # Safety
 * `sim` must be a live handle; `taken` may be null.
 */
enum MxStatus mx_simulation_step(struct MxSimulation *sim, size_t max_steps, size_t *taken);

/**
 * Current time `k τ` and level index `k`.
 *
 * # Safety
 * `sim` must be a live handle; outputs may be null.
 */
enum MxStatus mx_simulation_time(const struct MxSimulation *sim, double *t, size_t *k);

/**
 * Copy the current field `E^k` (node-major `E1, E2` pairs) into `buf`.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum MxStatus mx_simulation_field(const struct MxSimulation *sim, double *buf, size_t len);

/**
 * Relative L2 and gradient errors against the manufactured solution at the current time.
 *
 * # Safety
 * `sim` must be a live handle; outputs must be valid.
 */
enum MxStatus mx_simulation_errors(const struct MxSimulation *sim, double *theta1, double *theta2);

/**
 * Discrete energy functional at the current level.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid.
 */
enum MxStatus mx_simulation_energy(const struct MxSimulation *sim, struct MxEnergy *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAXWELL_FFI_H */
