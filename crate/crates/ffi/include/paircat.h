#ifndef PAIRCAT_H
#define PAIRCAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PaircatStatus {
  PAIRCAT_STATUS_OK = 0,
  PAIRCAT_STATUS_INVALID_ARGUMENT = 1,
  PAIRCAT_STATUS_NUMERICAL = 2,
  PAIRCAT_STATUS_IO = 3,
  PAIRCAT_STATUS_NULL_POINTER = 4,
  PAIRCAT_STATUS_PANIC = 5,
} PaircatStatus;

/*
 Joint ion and vibration state.
 */
typedef struct PaircatJoint PaircatJoint;

/*
 Pair cat state on the charge-`q` ladder.
 */
typedef struct PaircatLadder PaircatLadder;

/*
 Coupling profile `lambda(t)`.
 */
typedef struct PaircatProfile PaircatProfile;

/*
 Quadrature distribution on a grid.
 */
typedef struct PaircatRaster PaircatRaster;

/*
 Observables of a joint state (natural logarithms).
 */
typedef struct PaircatObservables {
  /*
   `P_e - P_g`.
   */
  double inversion;
  double s_vn_atom;
  double s_vn_field;
  double s_lin_2;
  double s_lin_3;
  double norm_sqr;
} PaircatObservables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *paircat_last_error(void);

/*
 Library version as a static string.
 */
const char *paircat_version(void);

/*
 Builds the normalized pair cat state. A negative `q` is folded onto `|q|`
 by exchanging the modes; see [`paircat_ladder_modes_swapped`].

 # Safety
 `out` must be valid for writes.
 */
enum PaircatStatus paircat_pair_cat_new(double xi_re,
                                        double xi_im,
                                        int64_t q,
                                        double phi,
                                        double tail_epsilon,
                                        struct PaircatLadder **out);

/*
 # Safety
 `ladder` must come from [`paircat_pair_cat_new`] or be null.
 */
void paircat_ladder_free(struct PaircatLadder *ladder);

/*
 Charge `q >= 0` of the stored ladder and the truncation `N`.

 # Safety
 Pointers must be valid; any output pointer may be null.
 */
enum PaircatStatus paircat_ladder_info(const struct PaircatLadder *ladder,
                                       uint32_t *q_out,
                                       size_t *n_max_out,
                                       double *tail_bound_out);

/*
 Nonzero when a negative charge was folded by exchanging the modes.

 # Safety
 `ladder` must be valid or null (null gives 0).
 */
int32_t paircat_ladder_modes_swapped(const struct PaircatLadder *ladder);

/*
 Copies the `N + 1` coefficients into `re` and `im`, which hold `len` values.

 # Safety
 `re` and `im` must be valid for `len` writes.
 */
enum PaircatStatus paircat_ladder_coefficients(const struct PaircatLadder *ladder,
                                               double *re,
                                               double *im,
                                               size_t len);

/*
 # Safety
 `out` must be valid for writes.
 */
enum PaircatStatus paircat_profile_constant(double lambda, struct PaircatProfile **out);

/*
 `lambda sinh(varpi t)`.

 # Safety
 `out` must be valid for writes.
 */
enum PaircatStatus paircat_profile_sinh(double lambda, double varpi, struct PaircatProfile **out);

/*
 Linear interpolation through `len` knots `(times[k], values[k])`.

 # Safety
 `times` and `values` must be valid for `len` reads; `out` for writes.
 */
enum PaircatStatus paircat_profile_piecewise(const double *times,
                                             const double *values,
                                             size_t len,
                                             struct PaircatProfile **out);

/*
 # Safety
 `profile` must come from a `paircat_profile_*` constructor or be null.
 */
void paircat_profile_free(struct PaircatProfile *profile);

/*
 Pulse area `int_0^t lambda`.

 # Safety
 Pointers must be valid.
 */
enum PaircatStatus paircat_pulse_area(const struct PaircatProfile *profile, double t, double *out);

/*
 Joint state with the ion excited (`ground == 0`) or in the ground level.

 # Safety
 Pointers must be valid.
 */
enum PaircatStatus paircat_joint_new(const struct PaircatLadder *ladder,
                                     int32_t ground,
                                     struct PaircatJoint **out);

/*
 # Safety
 `joint` must come from this library or be null.
 */
void paircat_joint_free(struct PaircatJoint *joint);

/*
 Propagates `joint` to time `t` under `profile` into a new handle.

 # Safety
 Pointers must be valid.
 */
enum PaircatStatus paircat_joint_evolve(const struct PaircatJoint *joint,
                                        const struct PaircatProfile *profile,
                                        double t,
                                        struct PaircatJoint **out);

/*
 # Safety
 Pointers must be valid.
 */
enum PaircatStatus paircat_joint_observables(const struct PaircatJoint *joint,
                                             struct PaircatObservables *out);

/*
 Rasterizes `|psi(x, y)|^2` on an `nx` by `ny` grid.

 # Safety
 Pointers must be valid.
 */
enum PaircatStatus paircat_quadrature(const struct PaircatLadder *ladder,
                                      double x_min,
                                      double x_max,
                                      double y_min,
                                      double y_max,
                                      size_t nx,
                                      size_t ny,
                                      struct PaircatRaster **out);

/*
 # Safety
 `raster` must come from [`paircat_quadrature`] or be null.
 */
void paircat_raster_free(struct PaircatRaster *raster);

/*
 Copies `nx * ny` values, row-major over x (`values[i * ny + j] = P(x_i, y_j)`),
 and reports the trapezoid norm estimate.

 # Safety
 `values` must be valid for `len` writes; `norm_out` may be null.
 */
enum PaircatStatus paircat_raster_values(const struct PaircatRaster *raster,
                                         double *values,
                                         size_t len,
                                         double *norm_out);

/*
 Runs a built-in preset and returns its time series as CSV text.
 `threads == 0` uses every core. Release the string with [`paircat_string_free`].

 # Safety
 `name` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum PaircatStatus paircat_run_preset_csv(const char *name, size_t threads, char **out);

/*
 Same as [`paircat_run_preset_csv`] for configuration text.

 # Safety
 `config` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum PaircatStatus paircat_run_config_csv(const char *config, size_t threads, char **out);

/*
 # Safety
 `s` must come from this library or be null.
 */
void paircat_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAIRCAT_H */
