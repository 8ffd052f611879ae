#ifndef QDELAY_FIT_HPP
#define QDELAY_FIT_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdelay/spectrum.hpp"

namespace qdelay {

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> stderrs; // linearized-covariance estimates
    double residual_norm = 0.0;
    int n_iter = 0;
    bool converged = false;

    double value(const std::string& name) const;
    double stderr_of(const std::string& name) const;
};

// params -> stacked real residuals
using ResidualFn = std::function<void(std::span<const double>, std::span<double>)>;

struct LmOptions {
    int max_iter = 200;
    double jacobian_rel_step = 1e-6;
    double step_tol = 1e-11;
    double reduction_tol = 1e-14;
    double lambda_init = 1e-3;
    double lambda_max = 1e12;
    // Per-parameter magnitude scales; floor for relative steps and
    // convergence metrics. Empty = all ones.
    std::vector<double> scales;
};

struct LmSolution {
    std::vector<double> params;
    std::vector<double> stderrs;
    double residual_norm = 0.0;
    int n_iter = 0;
    bool converged = false;
};

// Damped Gauss-Newton with central-difference Jacobians.
LmSolution levenberg_marquardt(const ResidualFn& residuals, std::size_t n_residuals,
                               std::vector<double> initial, const LmOptions& options = {});

// A exp(-(t-t0)^2/(2 sigma^2)) + B fit of a real envelope.
struct GaussianFit {
    double amplitude = 0.0;
    double t0 = 0.0;
    double sigma = 0.0;
    double baseline = 0.0;
    double residual_ratio = 0.0; // ||resid||_2 / ||y||_2
    bool converged = false;
};

GaussianFit fit_gaussian_pulse(std::span<const double> t, std::span<const double> y);

struct CircleFitResult {
    Complex center;
    double radius = 0.0;
    FitResult fit;
};

// Taubin algebraic estimate refined by geometric least squares.
CircleFitResult circle_fit(std::span<const Complex> points);

// Weak-probe resonance fit on complex residuals. The spectrum's detuning axis
// is taken relative to omega_ref; the reported omega_10 is absolute.
// Recovers {omega_10, gamma_r_10, gamma_10}.
FitResult fit_weak_spectrum(const ComplexSpectrum& spectrum, double omega_ref = 0.0,
                            const LmOptions& options = {});

struct PowerPoint {
    double p_dbm; // line power
    Complex r;    // resonant reflection
};

// Saturation-curve fit of the resonant powered reflection. k_10 and the line
// attenuation are only jointly identifiable, so exactly one must be pinned;
// the other is recovered. Gamma_10 and gamma_10 are taken from `atom`.
FitResult fit_power_dependence(std::span<const PowerPoint> points, const AtomParams& atom,
                               std::optional<double> pin_attenuation_db,
                               std::optional<double> pin_k_10,
                               const LmOptions& options = {});

struct TwoToneMap {
    std::vector<double> pc_dbm;     // rows
    std::vector<double> detunings;  // columns, rad/s
    std::vector<Complex> values;    // row-major
    double attenuation_db = 0.0;
    double k21_scale = 1.4142135623730951;
};

// Single-parameter gamma_20 fit of the full complex ATS map; Gamma_10,
// gamma_10 and k_10 come from `atom`.
FitResult fit_two_tone(const TwoToneMap& map, const AtomParams& atom,
                       const LmOptions& options = {});

} // namespace qdelay

#endif
