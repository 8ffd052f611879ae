#ifndef QDELAY_PARAMS_HPP
#define QDELAY_PARAMS_HPP

#include <optional>
#include <string>

namespace qdelay {

// Partially specified atom: NaN marks an absent field. Exactly the shape a
// device cfg file or the C API hands us before closure resolution.
struct AtomInput {
    double omega_10 = nan();   // |0>-|1> transition, rad/s
    double gamma_r_10 = nan(); // radiative decay Gamma_10, rad/s
    double gamma_10 = nan();   // decoherence gamma_10, rad/s
    double gamma_n_10 = nan(); // non-radiative Gamma^n_10, rad/s
    double k_10 = nan();       // coupling, cyclic Hz / sqrt(W)
    double gamma_r_21 = nan(); // Gamma_21, rad/s
    double gamma_20 = nan();   // |0>-|2> decoherence, rad/s
    double gamma_n_20 = nan(); // Gamma^n_20, rad/s
    double gamma_21 = nan();   // |1>-|2> decoherence, rad/s

    static constexpr double nan() { return __builtin_nan(""); }
};

// Fully resolved, validated parameter set. Immutable value object; create
// through resolve_atom() or load_device_file().
struct AtomParams {
    double omega_10;
    double gamma_r_10;
    double gamma_10;
    double gamma_n_10;
    double k_10;        // NaN when the device file omitted it
    double gamma_r_21;
    double gamma_20;
    double gamma_n_20;
    double gamma_21;

    bool has_k_10() const;
};

// Closure rules:
//   gamma_10 = gamma_r_10/2 + gamma_n_10   (any two given, third derived;
//       all three given must agree to 1e-9 relative)
//   gamma_r_21 defaults to 2*gamma_r_10
//   gamma_20 = gamma_r_21/2 + gamma_n_20   (absent: gamma_n_20 = 0)
//   gamma_21 defaults to (gamma_r_10 + gamma_r_21)/2
AtomParams resolve_atom(const AtomInput& input);

// Flat key-value device file, cyclic-MHz keys:
//   omega_10_mhz gamma_r_10_mhz gamma_10_mhz gamma_n_10_mhz k_10
//   gamma_r_21_mhz gamma_20_mhz gamma_21_mhz
// '#' starts a comment; "key value" or "key = value" per line.
AtomParams load_device_file(const std::string& path);
AtomInput parse_device_text(const std::string& text, const std::string& origin);

struct EffectiveRates {
    double gamma_r_eff; // Gamma
    double gamma_eff;   // gamma
    double gamma_n_eff; // Gamma^n = gamma - Gamma/2
};

// Rates of the pump-dressed effective two-level system. Valid below the
// Autler-Townes threshold; throws domain_error at omega_c >= 2*gamma_20.
EffectiveRates effective_rates(const AtomParams& atom, double omega_c);

// The control Rabi frequency where Gamma/2 = Gamma^n and the coherent
// reflection vanishes: 2*sqrt(gamma_20*(Gamma_10 - gamma_10)).
// Throws no_solution when Gamma_10 <= gamma_10.
double singular_control_rabi(const AtomParams& atom);

// Autler-Townes threshold, omega_c = 2*gamma_20.
double ats_threshold_rabi(const AtomParams& atom);

// Probe Rabi frequency where the powered reflection dips to zero on
// resonance: sqrt(Gamma_10*(Gamma_10 - gamma_10)).
double singular_probe_rabi(const AtomParams& atom);

struct GaussianEnvelope {
    double sigma; // s
    double t0;    // s
};

struct DriveSpec {
    double rabi = 0.0;     // rad/s
    double detuning = 0.0; // rad/s
    std::optional<GaussianEnvelope> envelope;
};

void validate_drive(const DriveSpec& drive);

struct LineCalibration {
    double attenuation_db = 0.0;
    double gain_db = 0.0;
};

void validate_calibration(const LineCalibration& cal);

} // namespace qdelay

#endif
