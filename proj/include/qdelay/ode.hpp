#ifndef QDELAY_ODE_HPP
#define QDELAY_ODE_HPP

#include <array>
#include <cmath>
#include <cstddef>

#include "qdelay/errors.hpp"

namespace qdelay {

struct OdeOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    // Step underflow guard, relative to the requested interval.
    double min_step_fraction = 1e-12;
};

// Embedded Dormand-Prince 5(4) step with PI-free standard controller.
// Advances y from t_begin to t_end in place; `h_hint` carries the accepted
// step size across calls. rhs(t, y, dydt).
template <std::size_t N, typename Rhs>
void rk45_advance(Rhs&& rhs, double t_begin, double t_end,
                  std::array<double, N>& y, double& h_hint,
                  const OdeOptions& options) {
    using State = std::array<double, N>;

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                     a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double interval = t_end - t_begin;
    if (!(interval > 0.0))
        return;
    const double h_min = options.min_step_fraction * interval;

    double t = t_begin;
    double h = h_hint > 0.0 ? std::min(h_hint, interval) : interval;
    State k1, k2, k3, k4, k5, k6, k7, tmp, y_new;
    rhs(t, y, k1);

    while (t < t_end) {
        const double remaining = t_end - t;
        if (remaining <= h_min)
            break; // within rounding of the endpoint
        h = std::min(h, remaining);
        if (h < h_min)
            fail(ErrorCode::tolerance_not_met,
                 "adaptive step underflow: tolerance unreachable");

        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                 a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, tmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                                   b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, y_new, k7);

        double err_sq = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                    e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double tol = options.abs_tol +
                               options.rel_tol *
                                   std::max(std::abs(y[i]), std::abs(y_new[i]));
            err_sq += (err / tol) * (err / tol);
        }
        const double err_norm = std::sqrt(err_sq / double(N));

        if (err_norm <= 1.0) {
            t += h;
            y = y_new;
            k1 = k7; // first-same-as-last
            const double grow =
                err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
            h_hint = h;
        } else {
            h *= std::max(0.9 * std::pow(err_norm, -0.2), 0.2);
        }
    }
}

} // namespace qdelay

#endif
