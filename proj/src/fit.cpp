#include "qdelay/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdelay/errors.hpp"
#include "qdelay/units.hpp"

namespace qdelay {

double FitResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return values[i];
    fail(ErrorCode::invalid_argument, "no fitted parameter named " + name);
}

double FitResult::stderr_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name)
            return stderrs[i];
    fail(ErrorCode::invalid_argument, "no fitted parameter named " + name);
}

namespace {

// Gaussian elimination with partial pivoting; A is n x n row-major, solves in
// place into x. Small n only.
bool solve_linear(std::vector<double> a, std::vector<double> b,
                  std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col]))
                pivot = r;
        if (a[pivot * n + col] == 0.0)
            return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c < n; ++c)
                a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c)
            acc -= a[ri * n + c] * x[c];
        x[ri] = acc / a[ri * n + ri];
    }
    return true;
}

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v)
        acc += x * x;
    return std::sqrt(acc);
}

void numeric_jacobian(const ResidualFn& fn, std::span<const double> params,
                      std::span<const double> scales, double rel_step,
                      std::size_t m, std::vector<double>& jac) {
    const std::size_t n = params.size();
    jac.assign(m * n, 0.0);
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> hi(m), lo(m);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = rel_step * std::max(std::abs(params[j]), scales[j]);
        const double saved = p[j];
        p[j] = saved + h;
        fn(p, hi);
        p[j] = saved - h;
        fn(p, lo);
        p[j] = saved;
        const double inv = 1.0 / (2.0 * h);
        for (std::size_t i = 0; i < m; ++i)
            jac[i * n + j] = (hi[i] - lo[i]) * inv;
    }
}

std::vector<double> covariance_stderr(const std::vector<double>& jac, std::size_t m,
                                      std::size_t n, double residual_norm) {
    std::vector<double> jtj(n * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b <= a; ++b)
                jtj[a * n + b] += jac[i * n + a] * jac[i * n + b];
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            jtj[a * n + b] = jtj[b * n + a];

    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    if (m <= n)
        return out;
    const double s2 = residual_norm * residual_norm / double(m - n);
    // Diagonal of (J^T J)^-1 column by column.
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0), col;
        e[j] = 1.0;
        if (!solve_linear(jtj, e, col))
            return std::vector<double>(n, std::numeric_limits<double>::infinity());
        out[j] = col[j] > 0.0 ? std::sqrt(s2 * col[j])
                              : std::numeric_limits<double>::infinity();
    }
    return out;
}

} // namespace

LmSolution levenberg_marquardt(const ResidualFn& residuals, std::size_t m,
                               std::vector<double> params, const LmOptions& options) {
    const std::size_t n = params.size();
    if (n == 0)
        fail(ErrorCode::invalid_argument, "no parameters to fit");
    if (m < n)
        fail(ErrorCode::underdetermined, "fewer residuals than parameters");
    std::vector<double> scales = options.scales;
    if (scales.empty())
        scales.assign(n, 1.0);
    if (scales.size() != n)
        fail(ErrorCode::invalid_argument, "scales length mismatch");

    std::vector<double> resid(m), trial_resid(m), jac;
    residuals(params, resid);
    double cost = norm2(resid);
    if (!std::isfinite(cost))
        fail(ErrorCode::fit_diverged, "non-finite residuals at the initial guess");

    LmSolution sol;
    double lambda = options.lambda_init;
    bool converged = false;
    int iter = 0;
    for (; iter < options.max_iter && !converged; ++iter) {
        numeric_jacobian(residuals, params, scales, options.jacobian_rel_step, m, jac);

        std::vector<double> jtj(n * n, 0.0), jtr(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < n; ++a) {
                jtr[a] += jac[i * n + a] * resid[i];
                for (std::size_t b = 0; b <= a; ++b)
                    jtj[a * n + b] += jac[i * n + a] * jac[i * n + b];
            }
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                jtj[a * n + b] = jtj[b * n + a];

        bool stepped = false;
        while (lambda <= options.lambda_max) {
            std::vector<double> damped = jtj;
            for (std::size_t a = 0; a < n; ++a) {
                const double d = jtj[a * n + a];
                damped[a * n + a] += lambda * (d > 0.0 ? d : 1.0);
            }
            std::vector<double> neg_jtr(n), delta;
            for (std::size_t a = 0; a < n; ++a)
                neg_jtr[a] = -jtr[a];
            if (!solve_linear(damped, neg_jtr, delta)) {
                lambda *= 4.0;
                continue;
            }
            std::vector<double> trial(params);
            for (std::size_t a = 0; a < n; ++a)
                trial[a] += delta[a];
            residuals(trial, trial_resid);
            const double trial_cost = norm2(trial_resid);
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                double max_rel_step = 0.0;
                for (std::size_t a = 0; a < n; ++a)
                    max_rel_step = std::max(
                        max_rel_step,
                        std::abs(delta[a]) / (std::abs(params[a]) + scales[a]));
                const double reduction = (cost - trial_cost) / (cost + 1e-300);
                params = std::move(trial);
                resid = trial_resid;
                cost = trial_cost;
                lambda = std::max(lambda / 3.0, 1e-14);
                stepped = true;
                if (max_rel_step < options.step_tol || reduction < options.reduction_tol)
                    converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!stepped) {
            // Damping exhausted without a downhill step: stationary point.
            converged = cost < std::numeric_limits<double>::infinity();
            break;
        }
    }

    numeric_jacobian(residuals, params, scales, options.jacobian_rel_step, m, jac);
    sol.params = std::move(params);
    sol.stderrs = covariance_stderr(jac, m, n, cost);
    sol.residual_norm = cost;
    sol.n_iter = iter;
    sol.converged = converged;
    return sol;
}

GaussianFit fit_gaussian_pulse(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size())
        fail(ErrorCode::length_mismatch, "time and envelope arrays differ in length");
    const std::size_t n = t.size();
    if (n < 5)
        fail(ErrorCode::insufficient_samples, "gaussian fit needs at least 5 samples");

    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (y[i] > y[peak])
            peak = i;
    const double a0 = y[peak];
    if (!(a0 > 0.0))
        fail(ErrorCode::fit_diverged, "envelope has no positive peak to fit");

    // Baseline from the outermost 5% on each side.
    const std::size_t edge = std::max<std::size_t>(1, n / 20);
    std::vector<double> edges;
    edges.reserve(2 * edge);
    for (std::size_t i = 0; i < edge; ++i) {
        edges.push_back(y[i]);
        edges.push_back(y[n - 1 - i]);
    }
    std::nth_element(edges.begin(), edges.begin() + edges.size() / 2, edges.end());
    const double b0 = edges[edges.size() / 2];

    const double half = b0 + (a0 - b0) / 2.0;
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && y[lo] > half)
        --lo;
    while (hi + 1 < n && y[hi] > half)
        ++hi;
    double sigma0 = (t[hi] - t[lo]) / 2.355;
    if (!(sigma0 > 0.0))
        sigma0 = (t[n - 1] - t[0]) / 4.0;

    auto model = [&](std::span<const double> p, std::span<double> out) {
        const double A = p[0], t0 = p[1], s = std::abs(p[2]) + 1e-300, B = p[3];
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (t[i] - t0) / s;
            out[i] = A * std::exp(-0.5 * u * u) + B - y[i];
        }
    };

    LmOptions opts;
    opts.scales = {a0, sigma0, sigma0, a0};
    LmSolution sol = levenberg_marquardt(model, n, {a0 - b0, t[peak], sigma0, b0}, opts);

    GaussianFit fit;
    fit.amplitude = sol.params[0];
    fit.t0 = sol.params[1];
    fit.sigma = std::abs(sol.params[2]);
    fit.baseline = sol.params[3];
    fit.converged = sol.converged && std::isfinite(sol.residual_norm);
    const double y_norm = norm2(y);
    fit.residual_ratio = y_norm > 0.0 ? sol.residual_norm / y_norm : 0.0;
    if (!fit.converged || !(fit.amplitude > 0.0))
        fail(ErrorCode::fit_diverged, "gaussian envelope fit did not converge");
    return fit;
}

CircleFitResult circle_fit(std::span<const Complex> points) {
    const std::size_t n = points.size();
    if (n < 5)
        fail(ErrorCode::insufficient_samples, "circle fit needs at least 5 points");

    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& p : points) {
        mean_x += p.real();
        mean_y += p.imag();
    }
    mean_x /= double(n);
    mean_y /= double(n);

    // Normalized moments of centered coordinates (Taubin's system).
    double Mxx = 0, Myy = 0, Mxy = 0, Mxz = 0, Myz = 0, Mzz = 0;
    double span_sq = 0.0;
    for (const auto& p : points) {
        const double x = p.real() - mean_x;
        const double y = p.imag() - mean_y;
        const double z = x * x + y * y;
        Mxx += x * x;
        Myy += y * y;
        Mxy += x * y;
        Mxz += x * z;
        Myz += y * z;
        Mzz += z * z;
        span_sq = std::max(span_sq, z);
    }
    Mxx /= double(n);
    Myy /= double(n);
    Mxy /= double(n);
    Mxz /= double(n);
    Myz /= double(n);
    Mzz /= double(n);

    if (!(span_sq > 0.0))
        fail(ErrorCode::degenerate, "all points coincide");

    const double Mz = Mxx + Myy;
    const double cov_xy = Mxx * Myy - Mxy * Mxy;
    const double var_z = Mzz - Mz * Mz;
    const double a3 = 4.0 * Mz;
    const double a2 = -3.0 * Mz * Mz - Mzz;
    const double a1 = var_z * Mz + 4.0 * cov_xy * Mz - Mxz * Mxz - Myz * Myz;
    const double a0 = Mxz * (Mxz * Myy - Myz * Mxy) +
                      Myz * (Myz * Mxx - Mxz * Mxy) - var_z * cov_xy;

    // Newton iteration on the characteristic cubic from x = 0.
    double x = 0.0, fx = a0;
    for (int i = 0; i < 99; ++i) {
        const double dfx = a1 + x * (2.0 * a2 + 3.0 * a3 * x);
        if (dfx == 0.0)
            break;
        const double x_new = x - fx / dfx;
        if (!std::isfinite(x_new) || std::abs(x_new - x) <= 1e-14 * std::abs(x_new)) {
            x = x_new;
            break;
        }
        x = x_new;
        fx = a0 + x * (a1 + x * (a2 + x * a3));
    }

    const double det = x * x - x * Mz + cov_xy;
    if (!std::isfinite(det) || std::abs(det) < 1e-14 * std::max(Mz * Mz, 1e-300))
        fail(ErrorCode::degenerate, "points are collinear within tolerance");
    const double ca = (Mxz * (Myy - x) - Myz * Mxy) / det / 2.0;
    const double cb = (Myz * (Mxx - x) - Mxz * Mxy) / det / 2.0;
    const double r0 = std::sqrt(std::max(ca * ca + cb * cb + Mz - 2.0 * x, 0.0));
    if (!(r0 > 0.0) || r0 > 1e8 * std::sqrt(span_sq))
        fail(ErrorCode::degenerate, "points are collinear within tolerance");

    // Geometric refinement: distance residuals to (a, b, R).
    auto geometric = [&](std::span<const double> p, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = points[i].real() - p[0];
            const double dy = points[i].imag() - p[1];
            out[i] = std::hypot(dx, dy) - p[2];
        }
    };
    LmOptions opts;
    opts.scales = {r0, r0, r0};
    LmSolution sol =
        levenberg_marquardt(geometric, n, {mean_x + ca, mean_y + cb, r0}, opts);

    CircleFitResult result;
    result.center = {sol.params[0], sol.params[1]};
    result.radius = sol.params[2];
    result.fit.names = {"center_re", "center_im", "radius"};
    result.fit.values = {sol.params[0], sol.params[1], sol.params[2]};
    result.fit.stderrs = sol.stderrs;
    result.fit.residual_norm = sol.residual_norm;
    result.fit.n_iter = sol.n_iter;
    result.fit.converged = sol.converged;
    if (!sol.converged)
        fail(ErrorCode::not_converged, "geometric circle refinement did not converge");
    return result;
}

FitResult fit_weak_spectrum(const ComplexSpectrum& spectrum, double omega_ref,
                            const LmOptions& options) {
    const std::size_t n = spectrum.size();
    if (n < 5)
        fail(ErrorCode::insufficient_samples, "spectrum fit needs at least 5 samples");

    // Initial guesses from the scattered part u = 1 - r (Lorentzian of HWHM
    // gamma_10, peak Gamma_10/gamma_10 at resonance).
    std::vector<double> u_abs(n);
    double u_max = 0.0;
    std::size_t peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
        u_abs[i] = std::abs(1.0 - spectrum.values[i]);
        if (u_abs[i] > u_max) {
            u_max = u_abs[i];
            peak = i;
        }
    }
    if (u_max < 1e-9)
        fail(ErrorCode::degenerate,
             "spectrum carries no resonance (r = 1 everywhere); Gamma_10 "
             "unidentifiable");

    const double half = u_max / std::sqrt(2.0);
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && u_abs[lo] > half)
        --lo;
    while (hi + 1 < n && u_abs[hi] > half)
        ++hi;
    double gamma0 = (spectrum.detunings[hi] - spectrum.detunings[lo]) / 2.0;
    if (!(gamma0 > 0.0))
        gamma0 = (spectrum.detunings[n - 1] - spectrum.detunings[0]) / 8.0;
    const double gamma_r0 = u_max * gamma0;
    const double delta0 = spectrum.detunings[peak];

    auto model = [&](std::span<const double> p, std::span<double> out) {
        const double d0 = p[0];
        const double gr = std::abs(p[1]);
        const double g = std::abs(p[2]) + 1e-300;
        for (std::size_t i = 0; i < n; ++i) {
            const Complex r =
                1.0 - gr / Complex(g, spectrum.detunings[i] - d0);
            const Complex diff = r - spectrum.values[i];
            out[2 * i] = diff.real();
            out[2 * i + 1] = diff.imag();
        }
    };

    LmOptions opts = options;
    if (opts.scales.empty())
        opts.scales = {gamma0, gamma_r0, gamma0};
    LmSolution sol =
        levenberg_marquardt(model, 2 * n, {delta0, gamma_r0, gamma0}, opts);
    if (!sol.converged)
        fail(ErrorCode::not_converged, "weak-spectrum fit did not converge");

    FitResult result;
    result.names = {"omega_10", "gamma_r_10", "gamma_10"};
    result.values = {omega_ref + sol.params[0], std::abs(sol.params[1]),
                     std::abs(sol.params[2])};
    result.stderrs = sol.stderrs;
    result.residual_norm = sol.residual_norm;
    result.n_iter = sol.n_iter;
    result.converged = sol.converged;
    return result;
}

namespace {

Complex powered_resonant_reflection(double gamma_r, double gamma, double omega_p) {
    return 1.0 - (gamma_r / gamma) / (1.0 + omega_p * omega_p / (gamma_r * gamma));
}

} // namespace

FitResult fit_power_dependence(std::span<const PowerPoint> points, const AtomParams& atom,
                               std::optional<double> pin_attenuation_db,
                               std::optional<double> pin_k_10,
                               const LmOptions& options) {
    if (points.size() < 6)
        fail(ErrorCode::insufficient_samples,
             "power fit needs at least 6 powers across the saturation knee");
    if (pin_attenuation_db.has_value() == pin_k_10.has_value())
        fail(ErrorCode::underdetermined,
             "k_10 and attenuation are only identifiable as a product: pin "
             "exactly one of them");

    const bool fit_k = pin_attenuation_db.has_value();
    const double gamma_r = atom.gamma_r_10;
    const double gamma = atom.gamma_10;

    // Knee heuristic: the chip power where Omega_p^2 = Gamma gamma halves the
    // resonant dip. Seed the free parameter from the sample closest to it.
    const double dip = gamma_r / gamma;
    double best_gap = std::numeric_limits<double>::infinity();
    double knee_dbm = points[0].p_dbm;
    for (const auto& pt : points) {
        const double gap = std::abs(std::abs(1.0 - pt.r) - dip / 2.0);
        if (gap < best_gap) {
            best_gap = gap;
            knee_dbm = pt.p_dbm;
        }
    }
    const double omega_knee = std::sqrt(gamma_r * gamma);
    double init;
    if (fit_k) {
        const double p_chip = dbm_to_watt(knee_dbm - *pin_attenuation_db);
        init = omega_knee / (two_pi * std::sqrt(std::max(p_chip, 1e-300)));
    } else {
        // attenuation that maps the knee sample onto the knee Rabi frequency
        init = knee_dbm - rabi_to_dbm(omega_knee, *pin_k_10);
    }

    const std::size_t n = points.size();
    auto model = [&](std::span<const double> p, std::span<double> out) {
        for (std::size_t i = 0; i < n; ++i) {
            const double k = fit_k ? std::abs(p[0]) : *pin_k_10;
            const double att = fit_k ? *pin_attenuation_db : p[0];
            const double omega_p = dbm_to_rabi(points[i].p_dbm, k + 1e-300, att);
            const Complex diff =
                powered_resonant_reflection(gamma_r, gamma, omega_p) - points[i].r;
            out[2 * i] = diff.real();
            out[2 * i + 1] = diff.imag();
        }
    };

    LmOptions opts = options;
    if (opts.scales.empty())
        opts.scales = {std::abs(init) > 0.0 ? std::abs(init) : 1.0};
    LmSolution sol = levenberg_marquardt(model, 2 * n, {init}, opts);
    if (!sol.converged)
        fail(ErrorCode::not_converged, "power-dependence fit did not converge");

    FitResult result;
    result.names = {fit_k ? "k_10" : "attenuation_db"};
    result.values = {fit_k ? std::abs(sol.params[0]) : sol.params[0]};
    result.stderrs = sol.stderrs;
    result.residual_norm = sol.residual_norm;
    result.n_iter = sol.n_iter;
    result.converged = sol.converged;
    return result;
}

FitResult fit_two_tone(const TwoToneMap& map, const AtomParams& atom,
                       const LmOptions& options) {
    const std::size_t rows = map.pc_dbm.size();
    const std::size_t cols = map.detunings.size();
    if (rows == 0 || cols == 0 || map.values.size() != rows * cols)
        fail(ErrorCode::length_mismatch, "two-tone map shape mismatch");
    if (!atom.has_k_10())
        fail(ErrorCode::invalid_argument, "two-tone fit requires k_10");

    const double k21 = map.k21_scale * atom.k_10;
    std::vector<double> omega_c(rows);
    double omega_max = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        omega_c[i] = dbm_to_rabi(map.pc_dbm[i], k21, map.attenuation_db);
        omega_max = std::max(omega_max, omega_c[i]);
    }
    if (!(omega_max > 0.0))
        fail(ErrorCode::underdetermined,
             "gamma_20 is unidentifiable: every row has Omega_c = 0");

    const std::size_t n = rows * cols;
    auto model = [&](std::span<const double> p, std::span<double> out) {
        const double g20 = std::abs(p[0]) + 1e-300;
        for (std::size_t i = 0; i < rows; ++i) {
            const double oc2 = omega_c[i] * omega_c[i];
            for (std::size_t j = 0; j < cols; ++j) {
                const double dp = map.detunings[j];
                Complex denom = Complex(atom.gamma_10, dp);
                denom += oc2 / (4.0 * Complex(g20, dp));
                const Complex r = 1.0 - atom.gamma_r_10 / denom;
                const Complex diff = r - map.values[i * cols + j];
                out[2 * (i * cols + j)] = diff.real();
                out[2 * (i * cols + j) + 1] = diff.imag();
            }
        }
    };

    const double init = atom.gamma_20 > 0.0 ? atom.gamma_20 : atom.gamma_r_10;
    LmOptions opts = options;
    if (opts.scales.empty())
        opts.scales = {init};
    LmSolution sol = levenberg_marquardt(model, 2 * n, {init}, opts);
    if (!sol.converged)
        fail(ErrorCode::not_converged, "two-tone fit did not converge");

    FitResult result;
    result.names = {"gamma_20"};
    result.values = {std::abs(sol.params[0])};
    result.stderrs = sol.stderrs;
    result.residual_norm = sol.residual_norm;
    result.n_iter = sol.n_iter;
    result.converged = sol.converged;
    return result;
}

} // namespace qdelay
