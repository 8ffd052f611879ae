#include "qdelay.h"

#include <cmath>
#include <cstring>
#include <string>

#include "qdelay/bloch.hpp"
#include "qdelay/errors.hpp"
#include "qdelay/fit.hpp"
#include "qdelay/params.hpp"
#include "qdelay/pulse.hpp"
#include "qdelay/reflection.hpp"
#include "qdelay/spectrum.hpp"
#include "qdelay/units.hpp"

struct qd_atom {
    qdelay::AtomParams params;
};

struct qd_pulse {
    qdelay::PulseTrace trace;
};

struct qd_fit_result {
    qdelay::FitResult fit;
};

namespace {

thread_local std::string g_last_error;

qd_status map_code(qdelay::ErrorCode code) {
    using qdelay::ErrorCode;
    switch (code) {
    case ErrorCode::invalid_argument: return QD_ERR_INVALID_ARGUMENT;
    case ErrorCode::validation: return QD_ERR_VALIDATION;
    case ErrorCode::domain_error: return QD_ERR_DOMAIN;
    case ErrorCode::no_solution: return QD_ERR_NO_SOLUTION;
    case ErrorCode::singular: return QD_ERR_SINGULAR;
    case ErrorCode::insufficient_samples: return QD_ERR_INSUFFICIENT_SAMPLES;
    case ErrorCode::length_mismatch: return QD_ERR_LENGTH_MISMATCH;
    case ErrorCode::tolerance_not_met: return QD_ERR_TOLERANCE_NOT_MET;
    case ErrorCode::invalid_state: return QD_ERR_INVALID_STATE;
    case ErrorCode::fit_diverged: return QD_ERR_FIT_DIVERGED;
    case ErrorCode::not_converged: return QD_ERR_NOT_CONVERGED;
    case ErrorCode::underdetermined: return QD_ERR_UNDERDETERMINED;
    case ErrorCode::degenerate: return QD_ERR_DEGENERATE;
    case ErrorCode::bad_grid: return QD_ERR_BAD_GRID;
    case ErrorCode::io_error: return QD_ERR_IO;
    case ErrorCode::parse_error: return QD_ERR_PARSE;
    }
    return QD_ERR_INTERNAL;
}

template <typename Fn>
qd_status guarded(Fn&& fn) {
    try {
        fn();
        return QD_OK;
    } catch (const qdelay::Error& e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QD_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return QD_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok)
        qdelay::fail(qdelay::ErrorCode::invalid_argument, what);
}

qdelay::Complex to_cpp(qd_complex c) { return {c.re, c.im}; }
qd_complex to_c(qdelay::Complex c) { return {c.real(), c.imag()}; }

qdelay::AtomInput to_input(const qd_atom_params& p) {
    qdelay::AtomInput in;
    in.omega_10 = p.omega_10;
    in.gamma_r_10 = p.gamma_r_10;
    in.gamma_10 = p.gamma_10;
    in.gamma_n_10 = p.gamma_n_10;
    in.k_10 = p.k_10;
    in.gamma_r_21 = p.gamma_r_21;
    in.gamma_20 = p.gamma_20;
    in.gamma_n_20 = p.gamma_n_20;
    in.gamma_21 = p.gamma_21;
    return in;
}

qd_fit_result* wrap_fit(qdelay::FitResult fit) {
    return new qd_fit_result{std::move(fit)};
}

} // namespace

extern "C" {

const char* qd_version(void) { return "0.1.0"; }

const char* qd_status_name(qd_status status) {
    switch (status) {
    case QD_OK: return "ok";
    case QD_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case QD_ERR_VALIDATION: return "validation";
    case QD_ERR_DOMAIN: return "domain_error";
    case QD_ERR_NO_SOLUTION: return "no_solution";
    case QD_ERR_SINGULAR: return "singular";
    case QD_ERR_INSUFFICIENT_SAMPLES: return "insufficient_samples";
    case QD_ERR_LENGTH_MISMATCH: return "length_mismatch";
    case QD_ERR_TOLERANCE_NOT_MET: return "tolerance_not_met";
    case QD_ERR_INVALID_STATE: return "invalid_state";
    case QD_ERR_FIT_DIVERGED: return "fit_diverged";
    case QD_ERR_NOT_CONVERGED: return "not_converged";
    case QD_ERR_UNDERDETERMINED: return "underdetermined";
    case QD_ERR_DEGENERATE: return "degenerate";
    case QD_ERR_BAD_GRID: return "bad_grid";
    case QD_ERR_IO: return "io_error";
    case QD_ERR_PARSE: return "parse_error";
    case QD_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* qd_last_error(void) { return g_last_error.c_str(); }

qd_status qd_atom_create(const qd_atom_params* params, qd_atom** out) {
    return guarded([&] {
        require(params && out, "null pointer");
        *out = new qd_atom{qdelay::resolve_atom(to_input(*params))};
    });
}

qd_status qd_atom_load_file(const char* path, qd_atom** out) {
    return guarded([&] {
        require(path && out, "null pointer");
        *out = new qd_atom{qdelay::load_device_file(path)};
    });
}

qd_status qd_atom_get(const qd_atom* atom, qd_atom_params* out) {
    return guarded([&] {
        require(atom && out, "null pointer");
        const auto& a = atom->params;
        *out = {a.omega_10, a.gamma_r_10, a.gamma_10, a.gamma_n_10, a.k_10,
                a.gamma_r_21, a.gamma_20, a.gamma_n_20, a.gamma_21};
    });
}

void qd_atom_free(qd_atom* atom) { delete atom; }

qd_status qd_dbm_to_rabi(double p_dbm, double k, double attenuation_db,
                         double* out_rabi) {
    return guarded([&] {
        require(out_rabi, "null pointer");
        *out_rabi = qdelay::dbm_to_rabi(p_dbm, k, attenuation_db);
    });
}

qd_status qd_rabi_to_dbm(double rabi, double k, double attenuation_db,
                         double* out_dbm) {
    return guarded([&] {
        require(out_dbm, "null pointer");
        *out_dbm = qdelay::rabi_to_dbm(rabi, k, attenuation_db);
    });
}

qd_status qd_effective_rates(const qd_atom* atom, double omega_c,
                             double* gamma_r_eff, double* gamma_eff,
                             double* gamma_n_eff) {
    return guarded([&] {
        require(atom && gamma_r_eff && gamma_eff && gamma_n_eff, "null pointer");
        const auto eff = qdelay::effective_rates(atom->params, omega_c);
        *gamma_r_eff = eff.gamma_r_eff;
        *gamma_eff = eff.gamma_eff;
        *gamma_n_eff = eff.gamma_n_eff;
    });
}

qd_status qd_singular_control_rabi(const qd_atom* atom, double* out) {
    return guarded([&] {
        require(atom && out, "null pointer");
        *out = qdelay::singular_control_rabi(atom->params);
    });
}

qd_status qd_ats_threshold_rabi(const qd_atom* atom, double* out) {
    return guarded([&] {
        require(atom && out, "null pointer");
        *out = qdelay::ats_threshold_rabi(atom->params);
    });
}

qd_status qd_singular_probe_rabi(const qd_atom* atom, double* out) {
    return guarded([&] {
        require(atom && out, "null pointer");
        *out = qdelay::singular_probe_rabi(atom->params);
    });
}

qd_status qd_reflection_weak(const qd_atom* atom, double delta, qd_complex* out) {
    return guarded([&] {
        require(atom && out, "null pointer");
        *out = to_c(qdelay::reflection_weak(atom->params, delta));
    });
}

qd_status qd_reflection_powered(const qd_atom* atom, double delta, double omega_p,
                                qd_complex* out) {
    return guarded([&] {
        require(atom && out, "null pointer");
        *out = to_c(qdelay::reflection_powered(atom->params, delta, omega_p));
    });
}

qd_status qd_reflection_two_tone(const qd_atom* atom, double delta_p, double omega_c,
                                 double delta_c, qd_complex* out) {
    return guarded([&] {
        require(atom && out, "null pointer");
        *out = to_c(qdelay::reflection_two_tone(atom->params, delta_p, omega_c,
                                                delta_c));
    });
}

qd_status qd_transfer_function(const qd_atom* atom, double delta_p, double omega_c,
                               double delta_c, double omega_e, qd_complex* out) {
    return guarded([&] {
        require(atom && out, "null pointer");
        *out = to_c(qdelay::transfer_function(atom->params, delta_p, omega_c,
                                              delta_c, omega_e));
    });
}

qd_status qd_group_delay_analytic(const qd_atom* atom, double omega_c, double delta,
                                  double* out_tau) {
    return guarded([&] {
        require(atom && out_tau, "null pointer");
        *out_tau = qdelay::group_delay_analytic(atom->params, delta, omega_c);
    });
}

qd_status qd_zero_delay_boundary(const qd_atom* atom, double omega_c,
                                 double boundary[2], int* exists) {
    return guarded([&] {
        require(atom && boundary && exists, "null pointer");
        const auto pair = qdelay::zero_delay_boundary(atom->params, omega_c);
        *exists = pair.has_value() ? 1 : 0;
        if (pair) {
            boundary[0] = pair->first;
            boundary[1] = pair->second;
        }
    });
}

qd_status qd_spectrum(const qd_atom* atom, const double* detunings, size_t n,
                      double omega_c, double delta_c, qd_complex* out_r) {
    return guarded([&] {
        require(atom && detunings && out_r && n > 0, "null pointer or empty axis");
        const auto s = qdelay::synthesize_spectrum(
            atom->params, std::span(detunings, n), omega_c, delta_c);
        for (size_t i = 0; i < n; ++i)
            out_r[i] = to_c(s.values[i]);
    });
}

qd_status qd_phase_unwrap(const qd_complex* r, size_t n, double* out_phase) {
    return guarded([&] {
        require(r && out_phase, "null pointer");
        std::vector<qdelay::Complex> values(n);
        for (size_t i = 0; i < n; ++i)
            values[i] = to_cpp(r[i]);
        const auto phase = qdelay::unwrap_phase(values);
        std::copy(phase.begin(), phase.end(), out_phase);
    });
}

qd_status qd_group_delay_numeric(const double* detunings, const qd_complex* r,
                                 size_t n, int allow_coarse, int smooth_window,
                                 double* out_tau, unsigned char* out_mask) {
    return guarded([&] {
        require(detunings && r && out_tau && out_mask, "null pointer");
        std::vector<qdelay::Complex> values(n);
        for (size_t i = 0; i < n; ++i)
            values[i] = to_cpp(r[i]);
        const auto spectrum =
            qdelay::make_spectrum(std::span(detunings, n), values);
        qdelay::DelayOptions opts;
        opts.allow_coarse = allow_coarse != 0;
        opts.smooth_window = smooth_window;
        const auto profile = qdelay::group_delay_numeric(spectrum, opts);
        std::copy(profile.tau_d.begin(), profile.tau_d.end(), out_tau);
        std::copy(profile.singular_mask.begin(), profile.singular_mask.end(),
                  out_mask);
    });
}

qd_status qd_sweep_control_power(const qd_atom* atom, const double* pc_dbm,
                                 size_t n_pc, double attenuation_db, double delta_c,
                                 const double* detunings, size_t n_det, int threads,
                                 qd_complex* out_r, double* out_tau,
                                 unsigned char* out_mask) {
    return guarded([&] {
        require(atom && pc_dbm && detunings && out_r && out_tau && out_mask,
                "null pointer");
        qdelay::PowerSweepConfig config;
        config.pc_dbm.assign(pc_dbm, pc_dbm + n_pc);
        config.attenuation_db = attenuation_db;
        config.delta_c = delta_c;
        const auto grid = qdelay::sweep_control_power(
            atom->params, config, std::span(detunings, n_det), threads);
        for (size_t i = 0; i < grid.values.size(); ++i)
            out_r[i] = to_c(grid.values[i]);
        std::copy(grid.tau_d.begin(), grid.tau_d.end(), out_tau);
        std::copy(grid.singular_mask.begin(), grid.singular_mask.end(), out_mask);
    });
}

qd_status qd_pulse_gaussian(double amplitude, double sigma, double t0, double span,
                            double dt, int allow_short_lead, qd_pulse** out) {
    return guarded([&] {
        require(out, "null pointer");
        *out = new qd_pulse{qdelay::gaussian_probe(amplitude, sigma, t0, span, dt,
                                                   allow_short_lead != 0)};
    });
}

qd_status qd_pulse_create(double t0_offset, double dt, double carrier_detuning,
                          const qd_complex* samples, size_t n, qd_pulse** out) {
    return guarded([&] {
        require(samples && out, "null pointer");
        qdelay::PulseTrace trace;
        trace.t0_offset = t0_offset;
        trace.dt = dt;
        trace.carrier_detuning = carrier_detuning;
        trace.samples.resize(n);
        for (size_t i = 0; i < n; ++i)
            trace.samples[i] = to_cpp(samples[i]);
        qdelay::validate_trace(trace);
        *out = new qd_pulse{std::move(trace)};
    });
}

size_t qd_pulse_size(const qd_pulse* pulse) {
    return pulse ? pulse->trace.size() : 0;
}

double qd_pulse_dt(const qd_pulse* pulse) { return pulse ? pulse->trace.dt : 0.0; }

double qd_pulse_t0(const qd_pulse* pulse) {
    return pulse ? pulse->trace.t0_offset : 0.0;
}

int qd_pulse_warning(const qd_pulse* pulse) {
    return pulse && pulse->trace.narrowband_warning ? 1 : 0;
}

qd_status qd_pulse_samples(const qd_pulse* pulse, qd_complex* out, size_t n) {
    return guarded([&] {
        require(pulse && out, "null pointer");
        if (n != pulse->trace.size())
            qdelay::fail(qdelay::ErrorCode::length_mismatch,
                         "sample buffer length mismatch");
        for (size_t i = 0; i < n; ++i)
            out[i] = to_c(pulse->trace.samples[i]);
    });
}

void qd_pulse_free(qd_pulse* pulse) { delete pulse; }

qd_status qd_bloch_output(const qd_atom* atom, const qd_pulse* probe, double delta_p,
                          double omega_c, double delta_c, double rel_tol,
                          int reduced, qd_pulse** out_output) {
    return guarded([&] {
        require(atom && probe && out_output, "null pointer");
        qdelay::DriveSpec control;
        control.rabi = omega_c;
        control.detuning = delta_c;
        qdelay::BlochOptions opts;
        if (rel_tol > 0.0)
            opts.rel_tol = rel_tol;
        opts.reduced = reduced != 0;
        *out_output = new qd_pulse{qdelay::simulate_reflected_pulse(
            atom->params, probe->trace, control, delta_p, delta_c, opts)};
    });
}

qd_status qd_bloch_states(const qd_atom* atom, const qd_pulse* probe, double delta_p,
                          double omega_c, double delta_c, double rel_tol,
                          int reduced, double* out, size_t n) {
    return guarded([&] {
        require(atom && probe && out, "null pointer");
        if (n != probe->trace.size())
            qdelay::fail(qdelay::ErrorCode::length_mismatch,
                         "state buffer length mismatch");
        qdelay::DriveSpec control;
        control.rabi = omega_c;
        control.detuning = delta_c;
        qdelay::BlochOptions opts;
        if (rel_tol > 0.0)
            opts.rel_tol = rel_tol;
        opts.reduced = reduced != 0;
        const auto states = qdelay::integrate_bloch(atom->params, probe->trace,
                                                    control, delta_p, delta_c, opts);
        for (size_t i = 0; i < states.size(); ++i) {
            double* row = out + 9 * i;
            row[0] = states[i].rho_10.real();
            row[1] = states[i].rho_10.imag();
            row[2] = states[i].rho_20.real();
            row[3] = states[i].rho_20.imag();
            row[4] = states[i].rho_21.real();
            row[5] = states[i].rho_21.imag();
            row[6] = states[i].rho_00;
            row[7] = states[i].rho_11;
            row[8] = states[i].rho_22;
        }
    });
}

qd_status qd_narrowband_output(const qd_atom* atom, const qd_pulse* probe,
                               double omega_c, double delta_p, qd_pulse** out) {
    return guarded([&] {
        require(atom && probe && out, "null pointer");
        *out = new qd_pulse{qdelay::narrowband_output(atom->params, probe->trace,
                                                      omega_c, delta_p)};
    });
}

qd_status qd_extract_delay(const qd_pulse* reference, const qd_pulse* output,
                           double* out_tau, double* out_residual_ratio,
                           int* out_low_confidence) {
    return guarded([&] {
        require(reference && output && out_tau, "null pointer");
        const auto est = qdelay::extract_delay(reference->trace, output->trace);
        *out_tau = est.tau_d;
        if (out_residual_ratio)
            *out_residual_ratio = est.residual_ratio;
        if (out_low_confidence)
            *out_low_confidence = est.low_confidence ? 1 : 0;
    });
}

qd_status qd_circle_fit(const qd_complex* points, size_t n, qd_complex* out_center,
                        double* out_radius, qd_fit_result** out_fit) {
    return guarded([&] {
        require(points && out_center && out_radius, "null pointer");
        std::vector<qdelay::Complex> pts(n);
        for (size_t i = 0; i < n; ++i)
            pts[i] = to_cpp(points[i]);
        auto result = qdelay::circle_fit(pts);
        *out_center = to_c(result.center);
        *out_radius = result.radius;
        if (out_fit)
            *out_fit = wrap_fit(std::move(result.fit));
    });
}

qd_status qd_fit_weak_spectrum(const double* detunings, const qd_complex* r,
                               size_t n, double omega_ref, qd_fit_result** out_fit) {
    return guarded([&] {
        require(detunings && r && out_fit, "null pointer");
        std::vector<qdelay::Complex> values(n);
        for (size_t i = 0; i < n; ++i)
            values[i] = to_cpp(r[i]);
        const auto spectrum =
            qdelay::make_spectrum(std::span(detunings, n), values);
        *out_fit = wrap_fit(qdelay::fit_weak_spectrum(spectrum, omega_ref));
    });
}

qd_status qd_fit_power(const double* p_dbm, const qd_complex* r, size_t n,
                       const qd_atom* atom, double pin_attenuation_db,
                       double pin_k_10, qd_fit_result** out_fit) {
    return guarded([&] {
        require(p_dbm && r && atom && out_fit, "null pointer");
        std::vector<qdelay::PowerPoint> points(n);
        for (size_t i = 0; i < n; ++i)
            points[i] = {p_dbm[i], to_cpp(r[i])};
        std::optional<double> att, k;
        if (!std::isnan(pin_attenuation_db))
            att = pin_attenuation_db;
        if (!std::isnan(pin_k_10))
            k = pin_k_10;
        *out_fit = wrap_fit(qdelay::fit_power_dependence(points, atom->params, att, k));
    });
}

qd_status qd_fit_two_tone(const double* pc_dbm, size_t n_pc, const double* detunings,
                          size_t n_det, const qd_complex* r, double attenuation_db,
                          const qd_atom* atom, qd_fit_result** out_fit) {
    return guarded([&] {
        require(pc_dbm && detunings && r && atom && out_fit, "null pointer");
        qdelay::TwoToneMap map;
        map.pc_dbm.assign(pc_dbm, pc_dbm + n_pc);
        map.detunings.assign(detunings, detunings + n_det);
        map.values.resize(n_pc * n_det);
        for (size_t i = 0; i < map.values.size(); ++i)
            map.values[i] = to_cpp(r[i]);
        map.attenuation_db = attenuation_db;
        *out_fit = wrap_fit(qdelay::fit_two_tone(map, atom->params));
    });
}

size_t qd_fit_result_count(const qd_fit_result* fit) {
    return fit ? fit->fit.names.size() : 0;
}

const char* qd_fit_result_name(const qd_fit_result* fit, size_t index) {
    if (!fit || index >= fit->fit.names.size())
        return nullptr;
    return fit->fit.names[index].c_str();
}

double qd_fit_result_value(const qd_fit_result* fit, size_t index) {
    if (!fit || index >= fit->fit.values.size())
        return __builtin_nan("");
    return fit->fit.values[index];
}

double qd_fit_result_stderr(const qd_fit_result* fit, size_t index) {
    if (!fit || index >= fit->fit.stderrs.size())
        return __builtin_nan("");
    return fit->fit.stderrs[index];
}

double qd_fit_result_residual_norm(const qd_fit_result* fit) {
    return fit ? fit->fit.residual_norm : __builtin_nan("");
}

int qd_fit_result_iterations(const qd_fit_result* fit) {
    return fit ? fit->fit.n_iter : 0;
}

int qd_fit_result_converged(const qd_fit_result* fit) {
    return fit && fit->fit.converged ? 1 : 0;
}

void qd_fit_result_free(qd_fit_result* fit) { delete fit; }

} // extern "C"
