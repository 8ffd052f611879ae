#ifndef QDELAY_BLOCH_HPP
#define QDELAY_BLOCH_HPP

#include <span>
#include <vector>

#include "qdelay/fit.hpp"
#include "qdelay/params.hpp"
#include "qdelay/pulse.hpp"

namespace qdelay {

// Lower triangle of the three-level density matrix (levels 0,1,2).
struct BlochState {
    Complex rho_10{0.0, 0.0};
    Complex rho_20{0.0, 0.0};
    Complex rho_21{0.0, 0.0};
    double rho_00 = 1.0;
    double rho_11 = 0.0;
    double rho_22 = 0.0;
};

struct BlochOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    // Weak-probe fast path: freeze rho_00 = 1 and drop population transfer
    // (the three coherence equations only).
    bool reduced = false;
};

// Integrates the three-level master equation (full Hamiltonian + dissipator)
// driven by the sampled probe envelope and a CW or Gaussian-enveloped control
// tone, starting from the ground state. States are returned on the probe
// grid; the integrator steps exactly onto each grid node.
std::vector<BlochState> integrate_bloch(const AtomParams& atom, const PulseTrace& probe,
                                        const DriveSpec& control, double delta_p,
                                        double delta_c,
                                        const BlochOptions& options = {});

// Input-output relation Omega_out(t) = Omega_p(t) + 2i Gamma_10 rho_10(t).
PulseTrace input_output(const AtomParams& atom, const PulseTrace& probe,
                        std::span<const BlochState> states);
PulseTrace input_output(const AtomParams& atom, const PulseTrace& probe,
                        std::span<const Complex> rho_10);

// Full pipeline: integrate + input-output.
PulseTrace simulate_reflected_pulse(const AtomParams& atom, const PulseTrace& probe,
                                    const DriveSpec& control, double delta_p,
                                    double delta_c, const BlochOptions& options = {});

// Narrowband oracle Omega_out(t) = r * Omega_p(t - tau_d) with r from the
// two-tone reflection and tau_d from the analytic phase slope. Sets the
// narrowband_warning flag when the fitted envelope width is under 1/gamma.
PulseTrace narrowband_output(const AtomParams& atom, const PulseTrace& probe,
                             double omega_c, double delta_p);

struct DelayEstimate {
    double tau_d = 0.0;          // s
    double residual_ratio = 0.0; // output-fit ||resid||/||env||
    bool low_confidence = false;
    GaussianFit reference_fit;
    GaussianFit output_fit;
};

// Peak-arrival difference between two traces. Gaussian envelope fits give the
// estimate when the output residual stays under the 0.1 gate; past the gate
// (distorted, multi-lobe outputs) the estimate falls back to the refined
// envelope peaks and is flagged low-confidence.
DelayEstimate extract_delay(const PulseTrace& reference, const PulseTrace& output);

} // namespace qdelay

#endif
