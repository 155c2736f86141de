#ifndef SQZLASER_H
#define SQZLASER_H

#include <stddef.h>
#include <stdint.h>

typedef enum SqzStatus {
  SQZ_STATUS_OK = 0,
  SQZ_STATUS_NULL_POINTER = 1,
  SQZ_STATUS_INVALID_ARGUMENT = 2,
  // Fock truncation or phase-space grid too small for the state.
  SQZ_STATUS_TRUNCATION = 3,
  // Solver, integrator or linear algebra failure.
  SQZ_STATUS_NUMERICAL = 4,
  SQZ_STATUS_IO = 5,
  // A scenario finished but some sweep points failed.
  SQZ_STATUS_PARTIAL_FAILURE = 6,
  SQZ_STATUS_BUFFER_TOO_SMALL = 7,
  SQZ_STATUS_PANIC = 8,
} SqzStatus;

typedef enum SqzBasis {
  SQZ_BASIS_MODE_A = 0,
  SQZ_BASIS_CAVITY = 1,
} SqzBasis;

// Opaque density matrix.
typedef struct SqzDensityMatrix SqzDensityMatrix;

// Opaque Wigner function on a rectangular grid.
typedef struct SqzWignerField SqzWignerField;

typedef struct SqzDressedCoupling {
  double u;
  double v;
  double r;
  double g_tilde;
  double norm_n;
} SqzDressedCoupling;

typedef struct SqzMeanField {
  double f_re;
  double f_im;
  double s_re;
  double s_im;
  double d;
  // `|F̄|²`
  double photons;
} SqzMeanField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sqz_version(void);

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *sqz_last_error(void);

void sqz_clear_error(void);

// # Safety
// `out` must be null or point to writable memory for one `double`.
enum SqzStatus sqz_bessel_j(int32_t order, double x, double *out);

// Bogoliubov dressing of the qubit coupling by sideband drives.
//
// # Safety
// `out` must be null or point to a writable `SqzDressedCoupling`.
enum SqzStatus sqz_dress(double eta1, double eta2, double g, struct SqzDressedCoupling *out);

// Mean-field fixed point with field phase `theta`.
//
// # Safety
// `out` must be null or point to a writable `SqzMeanField`.
enum SqzStatus sqz_mf_steady(double c_tilde,
                             double gamma,
                             double kappa,
                             double c_prime,
                             double theta,
                             struct SqzMeanField *out);

// Squeezing and thermal occupation of the mean-field Gaussian solution.
//
// # Safety
// `r_tilde` and `n_tilde` must be null or point to writable doubles.
enum SqzStatus sqz_mf_gaussian_parameters(double c_prime,
                                          double r,
                                          double *r_tilde,
                                          double *n_tilde);

// Steady state of the single-qubit laser with counter-rotating coupling.
//
// # Safety
// `out` must be null or point to writable storage for one handle.
enum SqzStatus sqz_steady_single_laser(double g,
                                       double gamma,
                                       double kappa,
                                       size_t field_dim,
                                       struct SqzDensityMatrix **out);

// Steady state of the engineered-dissipation laser in the Fock basis of
// the squeezed mode.
//
// # Safety
// `out` must be null or point to writable storage for one handle.
enum SqzStatus sqz_steady_effective(double r,
                                    double g_tilde,
                                    double gamma,
                                    double kappa,
                                    double c_prime,
                                    size_t field_dim,
                                    struct SqzDensityMatrix **out);

// Phase-averaged mean-field state of the field mode.
//
// # Safety
// `out` must be null or point to writable storage for one handle.
enum SqzStatus sqz_mf_ansatz(double f_mag,
                             double c_prime,
                             double r,
                             size_t field_dim,
                             size_t n_phases,
                             struct SqzDensityMatrix **out);

// # Safety
// `rho` must be a live handle; `n_qubits`, `field_dim` and `dim` must be
// null or writable.
enum SqzStatus sqz_density_shape(const struct SqzDensityMatrix *rho,
                                 size_t *n_qubits,
                                 size_t *field_dim,
                                 size_t *dim);

// Matrix element `ρ_ij`; basis order is qubits first, excited level first.
//
// # Safety
// `rho` must be a live handle; `re` and `im` must be null or writable.
enum SqzStatus sqz_density_element(const struct SqzDensityMatrix *rho,
                                   size_t i,
                                   size_t j,
                                   double *re,
                                   double *im);

// Field state after tracing out the qubits.
//
// # Safety
// `rho` must be a live handle; `out` must be null or writable.
enum SqzStatus sqz_density_reduced_field(const struct SqzDensityMatrix *rho,
                                         struct SqzDensityMatrix **out);

// Mean excitation number of the field mode.
//
// # Safety
// `rho` must be a live handle; `out` must be null or writable.
enum SqzStatus sqz_density_photon_number(const struct SqzDensityMatrix *rho, double *out);

// Uhlmann fidelity of two states on the same space.
//
// # Safety
// `a` and `b` must be live handles; `out` must be null or writable.
enum SqzStatus sqz_density_fidelity(const struct SqzDensityMatrix *a,
                                    const struct SqzDensityMatrix *b,
                                    double *out);

// # Safety
// `rho` must be null or a handle not yet freed.
void sqz_density_free(struct SqzDensityMatrix *rho);

// Wigner function of a field-only state on a square `points × points` grid
// over `[-half_width, half_width]²`. With `SqzBasis::Cavity` the state is
// taken to be written in the squeezed-mode basis with squeezing `r`.
//
// # Safety
// `rho` must be a live handle; `out` must be null or writable.
enum SqzStatus sqz_wigner(const struct SqzDensityMatrix *rho,
                          double half_width,
                          size_t points,
                          enum SqzBasis basis,
                          double r,
                          struct SqzWignerField **out);

// Grid size and extents.
//
// # Safety
// `w` must be a live handle; `extents` must be null or hold four doubles
// (`x_min`, `x_max`, `p_min`, `p_max`).
enum SqzStatus sqz_wigner_shape(const struct SqzWignerField *w,
                                size_t *nx,
                                size_t *np,
                                double *extents);

// Copies the values with `x` varying fastest: `buf[j * nx + i] = W(x_i, p_j)`.
//
// # Safety
// `w` must be a live handle and `buf` must hold `len` doubles.
enum SqzStatus sqz_wigner_values(const struct SqzWignerField *w, double *buf, size_t len);

// Midpoint-rule integral of the Wigner function over its grid.
//
// # Safety
// `w` must be a live handle; `out` must be null or writable.
enum SqzStatus sqz_wigner_integral(const struct SqzWignerField *w, double *out);

// # Safety
// `w` must be null or a handle not yet freed.
void sqz_wigner_free(struct SqzWignerField *w);

// Runs a named scenario and writes its files into `out_dir`.
//
// `preset` and `config_json` may be null. `threads` of 0 uses all cores.
// Returns `PartialFailure` when the run completed with failed sweep points;
// their number goes to `failed_points` when that pointer is non-null.
//
// # Safety
// String arguments must be null or NUL-terminated; `failed_points` must be
// null or writable.
enum SqzStatus sqz_run_scenario(const char *scenario,
                                const char *preset,
                                const char *config_json,
                                const char *out_dir,
                                size_t threads,
                                size_t *failed_points);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQZLASER_H */
