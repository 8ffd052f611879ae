#ifndef QDELAY_PULSE_HPP
#define QDELAY_PULSE_HPP

#include <complex>
#include <vector>

namespace qdelay {

// Uniformly sampled complex drive envelope in Rabi-frequency scale (rad/s),
// in the frame rotating at the tone's carrier.
struct PulseTrace {
    double t0_offset = 0.0;         // time of samples[0], s
    double dt = 0.0;                // s
    double carrier_detuning = 0.0;  // rad/s
    std::vector<std::complex<double>> samples;
    bool narrowband_warning = false;

    std::size_t size() const { return samples.size(); }
    double time_at(std::size_t i) const { return t0_offset + dt * double(i); }

    // Linear interpolation inside the grid, zero outside.
    std::complex<double> at_time(double t) const;
};

void validate_trace(const PulseTrace& trace);

// amplitude * exp(-(t-t0)^2 / (2 sigma^2)) on [0, span) at step dt.
// Rejects dt >= sigma/10 (bad_grid) and t0 < 5*sigma unless allow_short_lead
// (the leading truncation must be negligible).
PulseTrace gaussian_probe(double amplitude, double sigma, double t0, double span,
                          double dt, bool allow_short_lead = false);

} // namespace qdelay

#endif
