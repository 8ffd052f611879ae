#include "qdelay/pulse.hpp"

#include <cmath>

#include "qdelay/errors.hpp"

namespace qdelay {

std::complex<double> PulseTrace::at_time(double t) const {
    const double x = (t - t0_offset) / dt;
    if (x <= 0.0)
        return x == 0.0 ? samples.front() : 0.0;
    if (x >= double(samples.size() - 1))
        return x == double(samples.size() - 1) ? samples.back() : 0.0;
    const auto i = static_cast<std::size_t>(x);
    const double frac = x - double(i);
    return samples[i] * (1.0 - frac) + samples[i + 1] * frac;
}

void validate_trace(const PulseTrace& trace) {
    if (!(trace.dt > 0.0))
        fail(ErrorCode::validation, "pulse trace dt must be positive");
    if (trace.samples.size() < 2)
        fail(ErrorCode::validation, "pulse trace needs at least 2 samples");
    for (const auto& s : trace.samples)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            fail(ErrorCode::validation, "pulse trace samples must be finite");
}

PulseTrace gaussian_probe(double amplitude, double sigma, double t0, double span,
                          double dt, bool allow_short_lead) {
    if (!(sigma > 0.0))
        fail(ErrorCode::invalid_argument, "sigma must be positive");
    if (!(amplitude >= 0.0))
        fail(ErrorCode::invalid_argument, "amplitude must be >= 0");
    if (!(dt > 0.0) || dt >= sigma / 10.0)
        fail(ErrorCode::bad_grid, "dt must satisfy 0 < dt < sigma/10");
    if (!(span > dt))
        fail(ErrorCode::invalid_argument, "span must exceed dt");
    if (!allow_short_lead && t0 < 5.0 * sigma * (1.0 - 1e-9))
        fail(ErrorCode::invalid_argument,
             "t0 < 5*sigma truncates the pulse onset; move t0 or pass "
             "allow_short_lead");

    PulseTrace trace;
    trace.dt = dt;
    const auto n = static_cast<std::size_t>(std::ceil(span / dt));
    trace.samples.resize(std::max<std::size_t>(n, 2));
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const double t = dt * double(i);
        const double u = (t - t0) / sigma;
        trace.samples[i] = amplitude * std::exp(-0.5 * u * u);
    }
    return trace;
}

} // namespace qdelay
