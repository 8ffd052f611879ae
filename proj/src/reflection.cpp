#include "qdelay/reflection.hpp"

#include <cmath>

#include "qdelay/errors.hpp"

namespace qdelay {

namespace {
constexpr Complex I{0.0, 1.0};
}

Complex reflection_weak(const AtomParams& atom, double delta) {
    return 1.0 - atom.gamma_r_10 / (atom.gamma_10 + I * delta);
}

Complex reflection_weak(const EffectiveRates& eff, double delta) {
    return 1.0 - eff.gamma_r_eff / (eff.gamma_eff + I * delta);
}

Complex reflection_powered(const AtomParams& atom, double delta, double omega_p) {
    if (!(omega_p >= 0.0))
        fail(ErrorCode::invalid_argument, "probe Rabi frequency must be >= 0");
    const double g = atom.gamma_10;
    const double gr = atom.gamma_r_10;
    const double d = delta / g;
    const double sat = omega_p * omega_p / (gr * g);
    return 1.0 - (gr / g) * (1.0 - I * d) / (1.0 + d * d + sat);
}

Complex reflection_two_tone(const AtomParams& atom, double delta_p,
                            double omega_c, double delta_c) {
    return transfer_function(atom, delta_p, omega_c, delta_c, 0.0);
}

Complex transfer_function(const AtomParams& atom, double delta_p, double omega_c,
                          double delta_c, double omega_e) {
    if (!(omega_c >= 0.0))
        fail(ErrorCode::invalid_argument, "control Rabi frequency must be >= 0");
    const Complex s = I * omega_e;
    Complex denom = s + I * delta_p + atom.gamma_10;
    if (omega_c != 0.0)
        denom += omega_c * omega_c /
                 (4.0 * (s + I * (delta_p + delta_c) + atom.gamma_20));
    return 1.0 - atom.gamma_r_10 / denom;
}

double group_delay_analytic(const EffectiveRates& eff, double delta) {
    const double G = eff.gamma_r_eff;
    const double g = eff.gamma_eff;
    const double Gn = eff.gamma_n_eff;
    const double half_diff = G / 2.0 - Gn;
    const double denom = half_diff * half_diff + delta * delta;
    if (denom == 0.0)
        fail(ErrorCode::singular,
             "group delay undefined: resonant probe at Gamma/2 = Gamma^n (r = 0)");
    const double lorentz = (G / g) / (1.0 + (delta / g) * (delta / g));
    const double numer = G / 2.0 - (Gn - delta * delta / g);
    return lorentz * numer / denom;
}

double group_delay_analytic(const AtomParams& atom, double delta, double omega_c) {
    return group_delay_analytic(effective_rates(atom, omega_c), delta);
}

std::optional<std::pair<double, double>> zero_delay_boundary(const EffectiveRates& eff) {
    const double excess = eff.gamma_n_eff - eff.gamma_r_eff / 2.0;
    if (excess <= 0.0)
        return std::nullopt;
    const double d = std::sqrt(eff.gamma_eff * excess);
    return std::make_pair(-d, d);
}

std::optional<std::pair<double, double>> zero_delay_boundary(const AtomParams& atom,
                                                             double omega_c) {
    return zero_delay_boundary(effective_rates(atom, omega_c));
}

} // namespace qdelay
