#ifndef QDELAY_SPECTRUM_HPP
#define QDELAY_SPECTRUM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "qdelay/reflection.hpp"

namespace qdelay {

// Ordered (detuning, r) samples with the unwrapped phase branch.
struct ComplexSpectrum {
    std::vector<double> detunings;        // strictly increasing, rad/s
    std::vector<Complex> values;
    std::vector<double> phase_unwrapped;  // radians, continuous branch

    std::size_t size() const { return detunings.size(); }
};

// +-pi branch correction on phases sampled along a sorted detuning axis.
std::vector<double> unwrap_phase(std::span<const Complex> values);

ComplexSpectrum make_spectrum(std::span<const double> detunings,
                              std::span<const Complex> values);

// Synthesize from the two-tone closed form (omega_c = 0 gives the weak form).
ComplexSpectrum synthesize_spectrum(const AtomParams& atom,
                                    std::span<const double> detunings,
                                    double omega_c = 0.0, double delta_c = 0.0);

struct DelayProfile {
    std::vector<double> detunings;      // rad/s
    std::vector<double> tau_d;          // s; 0 where masked
    std::vector<std::uint8_t> singular_mask;
};

struct DelayOptions {
    // Reject grids whose unwrapped phase jumps by more than max_phase_step
    // between samples (aliasing guard); allow_coarse disables the check.
    bool allow_coarse = false;
    double max_phase_step = 1.5707963267948966; // pi/2
    // Optional moving-average half-width applied to the unwrapped phase
    // before differentiating, for noisy imported data. 0 = off.
    int smooth_window = 0;
};

// tau_d = -d(arg r)/d(omega) by 3-point central differences on the unwrapped
// phase (one-sided at the ends). Non-uniform grids use the weighted stencil.
DelayProfile group_delay_numeric(const ComplexSpectrum& spectrum,
                                 const DelayOptions& options = {});

struct SweepGrid {
    std::vector<double> axis1;      // dBm or MHz, caller-defined meaning
    std::vector<double> detunings;  // rad/s
    std::vector<Complex> values;    // row-major, axis1-major
    std::vector<double> tau_d;      // s
    std::vector<std::uint8_t> singular_mask;

    std::size_t rows() const { return axis1.size(); }
    std::size_t cols() const { return detunings.size(); }
    std::size_t index(std::size_t row, std::size_t col) const { return row * cols() + col; }
};

// One sweep row: an atom driven by a fixed control tone.
struct SweepRow {
    double axis1 = 0.0;
    AtomParams atom;
    double omega_c = 0.0;
    double delta_c = 0.0;
};

// Evaluates each row's spectrum and numeric delay profile. Rows are
// independent; `threads` > 1 splits them across a pool with a deterministic
// row-indexed merge, so the grid is identical to serial evaluation.
SweepGrid sweep_rows(std::span<const SweepRow> rows,
                     std::span<const double> detunings, int threads = 1,
                     const DelayOptions& options = {});

struct PowerSweepConfig {
    std::vector<double> pc_dbm;    // control line powers (axis1)
    double attenuation_db = 0.0;   // line-to-chip attenuation
    double delta_c = 0.0;
    double k21_scale = 1.4142135623730951; // k_21 = sqrt(2) k_10
};

// Fig-3-style map: control power vs probe detuning for one atom.
SweepGrid sweep_control_power(const AtomParams& atom, const PowerSweepConfig& config,
                              std::span<const double> detunings, int threads = 1,
                              const DelayOptions& options = {});

} // namespace qdelay

#endif
