/* qdelay — atom-in-front-of-a-mirror waveguide-QED toolkit, C API.
 *
 * Conventions: every rate, detuning and Rabi frequency is angular (rad/s);
 * times are seconds; powers are dBm at the line unless an attenuation maps
 * them to chip level; coupling constants k are cyclic Hz per sqrt(W).
 * Functions return QD_OK or an error status; qd_last_error() carries a
 * thread-local human-readable detail for the most recent failure.
 */
#ifndef QDELAY_H
#define QDELAY_H

#include <stddef.h>

#if defined(_WIN32)
#define QD_API __declspec(dllexport)
#else
#define QD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qd_status {
    QD_OK = 0,
    QD_ERR_INVALID_ARGUMENT = 1,
    QD_ERR_VALIDATION = 2,
    QD_ERR_DOMAIN = 3,
    QD_ERR_NO_SOLUTION = 4,
    QD_ERR_SINGULAR = 5,
    QD_ERR_INSUFFICIENT_SAMPLES = 6,
    QD_ERR_LENGTH_MISMATCH = 7,
    QD_ERR_TOLERANCE_NOT_MET = 8,
    QD_ERR_INVALID_STATE = 9,
    QD_ERR_FIT_DIVERGED = 10,
    QD_ERR_NOT_CONVERGED = 11,
    QD_ERR_UNDERDETERMINED = 12,
    QD_ERR_DEGENERATE = 13,
    QD_ERR_BAD_GRID = 14,
    QD_ERR_IO = 15,
    QD_ERR_PARSE = 16,
    QD_ERR_INTERNAL = 17
} qd_status;

typedef struct qd_complex {
    double re;
    double im;
} qd_complex;

typedef struct qd_atom qd_atom;
typedef struct qd_pulse qd_pulse;
typedef struct qd_fit_result qd_fit_result;

QD_API const char* qd_version(void);
QD_API const char* qd_status_name(qd_status status);
QD_API const char* qd_last_error(void);

/* ------------------------------------------------------------------ atom */

/* NAN marks an absent field. gamma_10 = gamma_r_10/2 + gamma_n_10 closure:
 * give any two, the third is derived; three inconsistent values are a
 * validation error. gamma_r_21 defaults to 2*gamma_r_10, gamma_20 to
 * gamma_r_21/2 + gamma_n_20 (gamma_n_20 default 0), gamma_21 to
 * (gamma_r_10 + gamma_r_21)/2. */
typedef struct qd_atom_params {
    double omega_10;   /* rad/s */
    double gamma_r_10; /* rad/s */
    double gamma_10;   /* rad/s */
    double gamma_n_10; /* rad/s */
    double k_10;       /* Hz/sqrt(W) */
    double gamma_r_21; /* rad/s */
    double gamma_20;   /* rad/s */
    double gamma_n_20; /* rad/s */
    double gamma_21;   /* rad/s */
} qd_atom_params;

QD_API qd_status qd_atom_create(const qd_atom_params* params, qd_atom** out);
QD_API qd_status qd_atom_load_file(const char* path, qd_atom** out);
QD_API qd_status qd_atom_get(const qd_atom* atom, qd_atom_params* out);
QD_API void qd_atom_free(qd_atom* atom);

/* ------------------------------------------------- conversions and rates */

QD_API qd_status qd_dbm_to_rabi(double p_dbm, double k, double attenuation_db,
                                double* out_rabi);
QD_API qd_status qd_rabi_to_dbm(double rabi, double k, double attenuation_db,
                                double* out_dbm);

/* Pump-dressed effective two-level rates (Gamma, gamma, Gamma^n); domain
 * error at omega_c >= 2*gamma_20. */
QD_API qd_status qd_effective_rates(const qd_atom* atom, double omega_c,
                                    double* gamma_r_eff, double* gamma_eff,
                                    double* gamma_n_eff);
QD_API qd_status qd_singular_control_rabi(const qd_atom* atom, double* out);
QD_API qd_status qd_ats_threshold_rabi(const qd_atom* atom, double* out);
QD_API qd_status qd_singular_probe_rabi(const qd_atom* atom, double* out);

/* ------------------------------------------------------ frequency domain */

QD_API qd_status qd_reflection_weak(const qd_atom* atom, double delta,
                                    qd_complex* out);
QD_API qd_status qd_reflection_powered(const qd_atom* atom, double delta,
                                       double omega_p, qd_complex* out);
QD_API qd_status qd_reflection_two_tone(const qd_atom* atom, double delta_p,
                                        double omega_c, double delta_c,
                                        qd_complex* out);
QD_API qd_status qd_transfer_function(const qd_atom* atom, double delta_p,
                                      double omega_c, double delta_c,
                                      double omega_e, qd_complex* out);

/* Analytic phase-slope delay at probe detuning delta under control omega_c;
 * singular when delta = 0 and Gamma/2 = Gamma^n exactly. */
QD_API qd_status qd_group_delay_analytic(const qd_atom* atom, double omega_c,
                                         double delta, double* out_tau);

/* Zero-delay crossings; *exists is 0 and boundary untouched when the system
 * sits in the positive-delay regime. */
QD_API qd_status qd_zero_delay_boundary(const qd_atom* atom, double omega_c,
                                        double boundary[2], int* exists);

/* Two-tone reflection sampled on a strictly increasing detuning axis. */
QD_API qd_status qd_spectrum(const qd_atom* atom, const double* detunings,
                             size_t n, double omega_c, double delta_c,
                             qd_complex* out_r);

/* Continuous-branch phase of a reflection sample sequence. */
QD_API qd_status qd_phase_unwrap(const qd_complex* r, size_t n, double* out_phase);

/* Numeric tau_d = -d(arg r)/d(omega) on the unwrapped phase. out_mask cells
 * are 1 where the phase (and so the delay) is undefined. allow_coarse skips
 * the aliasing guard on coarse grids; smooth_window > 0 applies a moving
 * average of that half-width to the phase before differentiating (for noisy
 * imported data). */
QD_API qd_status qd_group_delay_numeric(const double* detunings,
                                        const qd_complex* r, size_t n,
                                        int allow_coarse, int smooth_window,
                                        double* out_tau,
                                        unsigned char* out_mask);

/* Control-power map: n_pc x n_det row-major grids of r, tau_d and the
 * singular mask. k_21 = sqrt(2) k_10; threads > 1 evaluates rows in parallel
 * with a deterministic merge. */
QD_API qd_status qd_sweep_control_power(const qd_atom* atom, const double* pc_dbm,
                                        size_t n_pc, double attenuation_db,
                                        double delta_c, const double* detunings,
                                        size_t n_det, int threads,
                                        qd_complex* out_r, double* out_tau,
                                        unsigned char* out_mask);

/* ----------------------------------------------------------- time domain */

QD_API qd_status qd_pulse_gaussian(double amplitude, double sigma, double t0,
                                   double span, double dt, int allow_short_lead,
                                   qd_pulse** out);
QD_API qd_status qd_pulse_create(double t0_offset, double dt,
                                 double carrier_detuning,
                                 const qd_complex* samples, size_t n,
                                 qd_pulse** out);
QD_API size_t qd_pulse_size(const qd_pulse* pulse);
QD_API double qd_pulse_dt(const qd_pulse* pulse);
QD_API double qd_pulse_t0(const qd_pulse* pulse);
QD_API int qd_pulse_warning(const qd_pulse* pulse);
QD_API qd_status qd_pulse_samples(const qd_pulse* pulse, qd_complex* out,
                                  size_t n);
QD_API void qd_pulse_free(qd_pulse* pulse);

/* Master-equation pulse scattering: integrates the three-level system driven
 * by the probe trace and a CW control, applies the input-output relation.
 * reduced != 0 selects the frozen-ground-state coherence equations. */
QD_API qd_status qd_bloch_output(const qd_atom* atom, const qd_pulse* probe,
                                 double delta_p, double omega_c, double delta_c,
                                 double rel_tol, int reduced,
                                 qd_pulse** out_output);

/* Raw state series on the probe grid, 9 doubles per sample:
 * [Re rho10, Im rho10, Re rho20, Im rho20, Re rho21, Im rho21,
 *  rho00, rho11, rho22]. */
QD_API qd_status qd_bloch_states(const qd_atom* atom, const qd_pulse* probe,
                                 double delta_p, double omega_c, double delta_c,
                                 double rel_tol, int reduced, double* out,
                                 size_t n);

/* Narrowband oracle r * Omega_p(t - tau_d); the output pulse carries a
 * warning flag when the envelope is too wideband for the premise. */
QD_API qd_status qd_narrowband_output(const qd_atom* atom, const qd_pulse* probe,
                                      double omega_c, double delta_p,
                                      qd_pulse** out);

/* Peak-arrival delay between reference and output envelopes. */
QD_API qd_status qd_extract_delay(const qd_pulse* reference,
                                  const qd_pulse* output, double* out_tau,
                                  double* out_residual_ratio,
                                  int* out_low_confidence);

/* ------------------------------------------------------------ estimation */

QD_API qd_status qd_circle_fit(const qd_complex* points, size_t n,
                               qd_complex* out_center, double* out_radius,
                               qd_fit_result** out_fit);

/* Recovers omega_10 (= omega_ref + fitted offset), gamma_r_10, gamma_10 from
 * a weak-probe spectrum sampled at `detunings` relative to omega_ref. */
QD_API qd_status qd_fit_weak_spectrum(const double* detunings, const qd_complex* r,
                                      size_t n, double omega_ref,
                                      qd_fit_result** out_fit);

/* Saturation fit of the resonant reflection vs line power. Exactly one of
 * pin_attenuation_db / pin_k_10 must be non-NAN; the other is recovered. */
QD_API qd_status qd_fit_power(const double* p_dbm, const qd_complex* r, size_t n,
                              const qd_atom* atom, double pin_attenuation_db,
                              double pin_k_10, qd_fit_result** out_fit);

/* gamma_20 from a (pc_dbm x detuning) complex reflection map. */
QD_API qd_status qd_fit_two_tone(const double* pc_dbm, size_t n_pc,
                                 const double* detunings, size_t n_det,
                                 const qd_complex* r, double attenuation_db,
                                 const qd_atom* atom, qd_fit_result** out_fit);

QD_API size_t qd_fit_result_count(const qd_fit_result* fit);
QD_API const char* qd_fit_result_name(const qd_fit_result* fit, size_t index);
QD_API double qd_fit_result_value(const qd_fit_result* fit, size_t index);
QD_API double qd_fit_result_stderr(const qd_fit_result* fit, size_t index);
QD_API double qd_fit_result_residual_norm(const qd_fit_result* fit);
QD_API int qd_fit_result_iterations(const qd_fit_result* fit);
QD_API int qd_fit_result_converged(const qd_fit_result* fit);
QD_API void qd_fit_result_free(qd_fit_result* fit);

#ifdef __cplusplus
}
#endif

#endif /* QDELAY_H */
