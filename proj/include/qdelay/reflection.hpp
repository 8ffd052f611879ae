#ifndef QDELAY_REFLECTION_HPP
#define QDELAY_REFLECTION_HPP

#include <complex>
#include <optional>
#include <utility>

#include "qdelay/params.hpp"

namespace qdelay {

using Complex = std::complex<double>;

// Weak-probe reflection r = 1 - Gamma_10 / (gamma_10 + i*delta).
Complex reflection_weak(const AtomParams& atom, double delta);

// Same closed form on pump-dressed effective rates.
Complex reflection_weak(const EffectiveRates& eff, double delta);

// Power-dependent single-tone reflection:
// r = 1 - (Gamma/gamma) (1 - i d/gamma) / (1 + d^2/gamma^2 + Omega_p^2/(Gamma gamma)).
Complex reflection_powered(const AtomParams& atom, double delta, double omega_p);

// Two-tone weak-probe reflection with a control pump on |1>-|2>:
// r = 1 - 2 Gamma_10 / [2(gamma_10 + i dp) + Omega_c^2 / (2 gamma_20 + 2i(dp + dc))].
Complex reflection_two_tone(const AtomParams& atom, double delta_p,
                            double omega_c, double delta_c = 0.0);

// Envelope transfer function T(s = i*omega_e); T(0) equals the two-tone
// reflection identically (same code path).
Complex transfer_function(const AtomParams& atom, double delta_p, double omega_c,
                          double delta_c, double omega_e);

// Exact phase-slope group delay of the (effective) two-level reflection.
// Throws singular when the denominator vanishes (delta = 0, Gamma/2 = Gamma^n).
double group_delay_analytic(const EffectiveRates& eff, double delta);
double group_delay_analytic(const AtomParams& atom, double delta, double omega_c = 0.0);

// Detunings where tau_d crosses zero, +-sqrt(gamma (Gamma^n - Gamma/2));
// nullopt in the positive-delay regime Gamma^n <= Gamma/2.
std::optional<std::pair<double, double>> zero_delay_boundary(const EffectiveRates& eff);
std::optional<std::pair<double, double>> zero_delay_boundary(const AtomParams& atom,
                                                             double omega_c = 0.0);

} // namespace qdelay

#endif
