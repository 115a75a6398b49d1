#ifndef BESOVLAB_H
#define BESOVLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BlStatus {
  BL_STATUS_OK = 0,
  BL_STATUS_NULL_POINTER = 1,
  BL_STATUS_INVALID_ARGUMENT = 2,
  BL_STATUS_NUMERICAL = 3,
  BL_STATUS_IO = 4,
  /**
   * The experiment ran but at least one acceptance check failed.
   */
  BL_STATUS_ACCEPTANCE_FAILED = 5,
  BL_STATUS_PANIC = 6,
} BlStatus;

/**
 * Littlewood-Paley filter bank for one grid size.
 */
typedef struct BlBank BlBank;

/**
 * Spectral field on a periodic grid.
 */
typedef struct BlField BlField;

/**
 * Recorded solver run.
 */
typedef struct BlTrajectory BlTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (always NUL
 * terminated, truncated if needed) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bl_last_error(char *buf, size_t len);

/**
 * ABC Beltrami flow with unit coefficients scaled by `amplitude`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum BlStatus bl_field_abc(size_t n, double amplitude, struct BlField **out);

/**
 * Seeded divergence-free datum with Besov-type spectrum of regularity `s`
 * and summability `q`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum BlStatus bl_field_rough(size_t n,
                             double s,
                             double q,
                             double amplitude,
                             uint64_t seed,
                             struct BlField **out);

/**
 * # Safety
 * `field` must be null or a handle from this library, not yet freed.
 */
void bl_field_free(struct BlField *field);

/**
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_field_grid_size(const struct BlField *field, size_t *out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_field_l2_norm(const struct BlField *field, double *out);

/**
 * Sobolev norm of order `alpha`, homogeneous when `homogeneous != 0`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_field_sobolev_norm(const struct BlField *field,
                                    double alpha,
                                    int32_t homogeneous,
                                    double *out);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum BlStatus bl_bank_new(size_t n, struct BlBank **out);

/**
 * # Safety
 * `bank` must be null or a handle from this library, not yet freed.
 */
void bl_bank_free(struct BlBank *bank);

/**
 * Smallest and largest dyadic block index of the bank.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_bank_range(const struct BlBank *bank, int32_t *j_min, int32_t *j_max);

/**
 * Largest deviation of the low-pass plus all blocks from one on the lattice.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_bank_partition_residual(const struct BlBank *bank, double *out);

/**
 * Besov norm with regularity `s` and exponents `p`, `q` (pass `INFINITY`
 * for the sup).
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_besov_norm(const struct BlBank *bank,
                            const struct BlField *field,
                            double s,
                            double p,
                            double q,
                            double *out);

/**
 * Integrates the Navier-Stokes equations from `field` up to `horizon`,
 * keeping every `stride`-th step.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_solve(const struct BlField *field,
                       double dt,
                       double horizon,
                       size_t stride,
                       struct BlTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a handle from this library, not yet freed.
 */
void bl_trajectory_free(struct BlTrajectory *traj);

/**
 * Number of recorded snapshots.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_trajectory_len(const struct BlTrajectory *traj, size_t *out);

/**
 * Time of snapshot `index`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_trajectory_time(const struct BlTrajectory *traj, size_t index, double *out);

/**
 * Copy of snapshot `index` as a new field handle.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_trajectory_field(const struct BlTrajectory *traj,
                                  size_t index,
                                  struct BlField **out);

/**
 * Largest relative energy-balance residual over the snapshots.
 *
 * # Safety
 * Pointers must be valid.
 */
enum BlStatus bl_trajectory_energy_balance(const struct BlTrajectory *traj, double *out);

/**
 * Runs a registered experiment and writes its report under `out_dir`.
 * `config_json` may be null for the defaults. Returns
 * `AcceptanceFailed` when the run completed but a check failed.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `passed` may be null.
 */
enum BlStatus bl_run_experiment(const char *name,
                                const char *config_json,
                                const char *out_dir,
                                size_t threads,
                                int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BESOVLAB_H */
