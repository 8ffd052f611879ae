#include "qdelay/params.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "qdelay/errors.hpp"
#include "qdelay/units.hpp"

namespace qdelay {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::validation: return "validation";
    case ErrorCode::domain_error: return "domain_error";
    case ErrorCode::no_solution: return "no_solution";
    case ErrorCode::singular: return "singular";
    case ErrorCode::insufficient_samples: return "insufficient_samples";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::tolerance_not_met: return "tolerance_not_met";
    case ErrorCode::invalid_state: return "invalid_state";
    case ErrorCode::fit_diverged: return "fit_diverged";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::underdetermined: return "underdetermined";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::bad_grid: return "bad_grid";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::parse_error: return "parse_error";
    }
    return "unknown";
}

double dbm_to_watt(double p_dbm) { return std::pow(10.0, (p_dbm - 30.0) / 10.0); }

double watt_to_dbm(double p_watt) { return 10.0 * std::log10(p_watt) + 30.0; }

double dbm_to_rabi(double p_dbm, double k, double attenuation_db) {
    if (!(k > 0.0))
        fail(ErrorCode::invalid_argument, "coupling constant k must be positive");
    if (std::isnan(p_dbm) || std::isnan(attenuation_db))
        fail(ErrorCode::invalid_argument, "dbm_to_rabi: NaN input");
    const double p_chip = dbm_to_watt(p_dbm - attenuation_db);
    return two_pi * k * std::sqrt(p_chip);
}

double rabi_to_dbm(double rabi, double k, double attenuation_db) {
    if (!(k > 0.0))
        fail(ErrorCode::invalid_argument, "coupling constant k must be positive");
    if (!(rabi >= 0.0))
        fail(ErrorCode::invalid_argument, "rabi_to_dbm: negative Rabi frequency");
    const double amp = rabi / (two_pi * k); // sqrt(W)
    return watt_to_dbm(amp * amp) + attenuation_db;
}

bool AtomParams::has_k_10() const { return std::isfinite(k_10); }

namespace {

bool given(double v) { return !std::isnan(v); }

void require_nonnegative(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0)
        fail(ErrorCode::validation, std::string(name) + " must be a finite non-negative rate");
}

} // namespace

AtomParams resolve_atom(const AtomInput& in) {
    if (!given(in.omega_10) || !(in.omega_10 > 0.0))
        fail(ErrorCode::validation, "omega_10 must be given and positive");

    const int n_given = int(given(in.gamma_r_10)) + int(given(in.gamma_10)) +
                        int(given(in.gamma_n_10));
    if (n_given < 2)
        fail(ErrorCode::validation,
             "need at least two of gamma_r_10, gamma_10, gamma_n_10");

    double g_r = in.gamma_r_10;
    double g = in.gamma_10;
    double g_n = in.gamma_n_10;
    if (!given(g_n))
        g_n = g - g_r / 2.0;
    else if (!given(g))
        g = g_r / 2.0 + g_n;
    else if (!given(g_r))
        g_r = 2.0 * (g - g_n);
    else {
        // All three supplied: enforce closure gamma_10 = gamma_r_10/2 + gamma_n_10.
        const double resid = g - g_r / 2.0 - g_n;
        const double scale = std::max({std::abs(g), std::abs(g_r), std::abs(g_n)});
        if (std::abs(resid) > 1e-9 * scale)
            fail(ErrorCode::validation,
                 "gamma_10, gamma_r_10, gamma_n_10 are mutually inconsistent "
                 "(gamma_10 != gamma_r_10/2 + gamma_n_10); supply only two");
    }
    require_nonnegative(g_r, "gamma_r_10");
    require_nonnegative(g, "gamma_10");
    require_nonnegative(g_n, "gamma_n_10");

    AtomParams atom{};
    atom.omega_10 = in.omega_10;
    atom.gamma_r_10 = g_r;
    atom.gamma_10 = g;
    atom.gamma_n_10 = g_n;
    atom.k_10 = in.k_10;
    if (given(in.k_10) && !(in.k_10 > 0.0))
        fail(ErrorCode::validation, "k_10 must be positive when given");

    atom.gamma_r_21 = given(in.gamma_r_21) ? in.gamma_r_21 : 2.0 * g_r;
    require_nonnegative(atom.gamma_r_21, "gamma_r_21");

    if (given(in.gamma_20)) {
        atom.gamma_20 = in.gamma_20;
        if (given(in.gamma_n_20)) {
            const double resid = in.gamma_20 - atom.gamma_r_21 / 2.0 - in.gamma_n_20;
            if (std::abs(resid) > 1e-9 * std::max(in.gamma_20, atom.gamma_r_21))
                fail(ErrorCode::validation,
                     "gamma_20 != gamma_r_21/2 + gamma_n_20; supply only one");
            atom.gamma_n_20 = in.gamma_n_20;
        } else {
            atom.gamma_n_20 = in.gamma_20 - atom.gamma_r_21 / 2.0;
        }
    } else {
        atom.gamma_n_20 = given(in.gamma_n_20) ? in.gamma_n_20 : 0.0;
        atom.gamma_20 = atom.gamma_r_21 / 2.0 + atom.gamma_n_20;
    }
    require_nonnegative(atom.gamma_20, "gamma_20");
    require_nonnegative(atom.gamma_n_20, "gamma_n_20");

    atom.gamma_21 = given(in.gamma_21) ? in.gamma_21
                                       : (atom.gamma_r_10 + atom.gamma_r_21) / 2.0;
    require_nonnegative(atom.gamma_21, "gamma_21");
    return atom;
}

AtomInput parse_device_text(const std::string& text, const std::string& origin) {
    static const std::map<std::string, double AtomInput::*> keys = {
        {"omega_10_mhz", &AtomInput::omega_10},
        {"gamma_r_10_mhz", &AtomInput::gamma_r_10},
        {"gamma_10_mhz", &AtomInput::gamma_10},
        {"gamma_n_10_mhz", &AtomInput::gamma_n_10},
        {"k_10", &AtomInput::k_10},
        {"gamma_r_21_mhz", &AtomInput::gamma_r_21},
        {"gamma_20_mhz", &AtomInput::gamma_20},
        {"gamma_n_20_mhz", &AtomInput::gamma_n_20},
        {"gamma_21_mhz", &AtomInput::gamma_21},
    };

    AtomInput input;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key))
            continue;
        std::string value_str;
        ls >> value_str;
        if (value_str == "=")
            ls >> value_str;
        auto it = keys.find(key);
        if (it == keys.end())
            fail(ErrorCode::parse_error,
                 origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        char* end = nullptr;
        const double value = std::strtod(value_str.c_str(), &end);
        if (value_str.empty() || end != value_str.c_str() + value_str.size())
            fail(ErrorCode::parse_error,
                 origin + ":" + std::to_string(line_no) + ": bad value '" + value_str + "'");
        std::string extra;
        if (ls >> extra)
            fail(ErrorCode::parse_error,
                 origin + ":" + std::to_string(line_no) + ": trailing content '" + extra + "'");
        // keys carry cyclic MHz except the coupling constant
        input.*(it->second) = (key == "k_10") ? value : mhz_to_angular(value);
    }
    return input;
}

AtomParams load_device_file(const std::string& path) {
    std::ifstream file(path);
    if (!file)
        fail(ErrorCode::io_error, "cannot open device file: " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    return resolve_atom(parse_device_text(buf.str(), path));
}

EffectiveRates effective_rates(const AtomParams& atom, double omega_c) {
    if (!(omega_c >= 0.0))
        fail(ErrorCode::invalid_argument, "control Rabi frequency must be >= 0");
    if (omega_c == 0.0)
        return {atom.gamma_r_10, atom.gamma_10, atom.gamma_10 - atom.gamma_r_10 / 2.0};
    if (omega_c >= 2.0 * atom.gamma_20)
        fail(ErrorCode::domain_error,
             "effective-rate reduction invalid at omega_c >= 2*gamma_20 "
             "(Autler-Townes threshold)");
    const double u = omega_c / (2.0 * atom.gamma_20);
    const double denom = 1.0 - u * u;
    EffectiveRates eff{};
    eff.gamma_r_eff = atom.gamma_r_10 / denom;
    eff.gamma_eff = (atom.gamma_10 + omega_c * omega_c / (4.0 * atom.gamma_20)) / denom;
    eff.gamma_n_eff = eff.gamma_eff - eff.gamma_r_eff / 2.0;
    return eff;
}

double singular_control_rabi(const AtomParams& atom) {
    const double excess = atom.gamma_r_10 - atom.gamma_10;
    if (excess <= 0.0)
        fail(ErrorCode::no_solution,
             "no singular control pump exists: Gamma_10 <= gamma_10");
    return 2.0 * std::sqrt(atom.gamma_20 * excess);
}

double ats_threshold_rabi(const AtomParams& atom) { return 2.0 * atom.gamma_20; }

double singular_probe_rabi(const AtomParams& atom) {
    const double excess = atom.gamma_r_10 - atom.gamma_10;
    if (excess <= 0.0)
        fail(ErrorCode::no_solution,
             "reflection never reaches zero: Gamma_10 <= gamma_10");
    return std::sqrt(atom.gamma_r_10 * excess);
}

void validate_calibration(const LineCalibration& cal) {
    if (!std::isfinite(cal.attenuation_db) || !std::isfinite(cal.gain_db))
        fail(ErrorCode::validation, "calibration entries must be finite");
}

void validate_drive(const DriveSpec& drive) {
    if (!(drive.rabi >= 0.0) || !std::isfinite(drive.rabi))
        fail(ErrorCode::validation, "drive rabi must be finite and >= 0");
    if (!std::isfinite(drive.detuning))
        fail(ErrorCode::validation, "drive detuning must be finite");
    if (drive.envelope && !(drive.envelope->sigma > 0.0))
        fail(ErrorCode::validation, "drive envelope sigma must be positive");
}

} // namespace qdelay
