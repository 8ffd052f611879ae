#include "qdelay/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "qdelay/errors.hpp"
#include "qdelay/units.hpp"

namespace qdelay {

namespace {

// Phase is meaningless where the reflection vanishes; treat |r| below this
// (relative to the row maximum) as a singular cell.
constexpr double singular_magnitude_floor = 1e-12;

void check_detunings(std::span<const double> detunings) {
    if (detunings.empty())
        fail(ErrorCode::invalid_argument, "empty detuning axis");
    for (std::size_t i = 0; i + 1 < detunings.size(); ++i)
        if (!(detunings[i] < detunings[i + 1]))
            fail(ErrorCode::invalid_argument, "detunings must be strictly increasing");
}

} // namespace

std::vector<double> unwrap_phase(std::span<const Complex> values) {
    std::vector<double> phase(values.size());
    double offset = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double raw = std::arg(values[i]);
        if (i > 0) {
            double step = raw - prev;
            while (step > pi) {
                offset -= two_pi;
                step -= two_pi;
            }
            while (step < -pi) {
                offset += two_pi;
                step += two_pi;
            }
        }
        phase[i] = raw + offset;
        prev = raw;
    }
    return phase;
}

ComplexSpectrum make_spectrum(std::span<const double> detunings,
                              std::span<const Complex> values) {
    if (detunings.size() != values.size())
        fail(ErrorCode::length_mismatch, "detuning and value arrays differ in length");
    check_detunings(detunings);
    ComplexSpectrum s;
    s.detunings.assign(detunings.begin(), detunings.end());
    s.values.assign(values.begin(), values.end());
    s.phase_unwrapped = unwrap_phase(s.values);
    return s;
}

ComplexSpectrum synthesize_spectrum(const AtomParams& atom,
                                    std::span<const double> detunings,
                                    double omega_c, double delta_c) {
    check_detunings(detunings);
    ComplexSpectrum s;
    s.detunings.assign(detunings.begin(), detunings.end());
    s.values.resize(detunings.size());
    for (std::size_t i = 0; i < detunings.size(); ++i)
        s.values[i] = reflection_two_tone(atom, detunings[i], omega_c, delta_c);
    s.phase_unwrapped = unwrap_phase(s.values);
    return s;
}

DelayProfile group_delay_numeric(const ComplexSpectrum& spectrum,
                                 const DelayOptions& options) {
    const std::size_t n = spectrum.size();
    if (n < 3)
        fail(ErrorCode::insufficient_samples,
             "group_delay_numeric needs at least 3 samples");
    if (spectrum.values.size() != n || spectrum.phase_unwrapped.size() != n)
        fail(ErrorCode::length_mismatch, "spectrum arrays differ in length");

    double max_abs = 0.0;
    for (const auto& v : spectrum.values)
        max_abs = std::max(max_abs, std::abs(v));
    const double floor = singular_magnitude_floor * max_abs;

    std::vector<double> phase = spectrum.phase_unwrapped;
    if (!options.allow_coarse) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(spectrum.values[i]) <= floor ||
                std::abs(spectrum.values[i + 1]) <= floor)
                continue;
            if (std::abs(phase[i + 1] - phase[i]) > options.max_phase_step)
                fail(ErrorCode::bad_grid,
                     "phase steps exceed the aliasing guard; refine the detuning "
                     "grid or set allow_coarse");
        }
    }
    if (options.smooth_window > 0) {
        const int w = options.smooth_window;
        std::vector<double> smoothed(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i >= std::size_t(w) ? i - w : 0;
            const std::size_t hi = std::min(n - 1, i + std::size_t(w));
            double acc = 0.0;
            for (std::size_t j = lo; j <= hi; ++j)
                acc += phase[j];
            smoothed[i] = acc / double(hi - lo + 1);
        }
        phase = std::move(smoothed);
    }

    DelayProfile profile;
    profile.detunings = spectrum.detunings;
    profile.tau_d.assign(n, 0.0);
    profile.singular_mask.assign(n, 0);

    const auto& d = spectrum.detunings;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(spectrum.values[i]) <= floor || !std::isfinite(phase[i])) {
            profile.singular_mask[i] = 1;
            continue;
        }
        double slope;
        if (i == 0) {
            slope = (phase[1] - phase[0]) / (d[1] - d[0]);
        } else if (i == n - 1) {
            slope = (phase[n - 1] - phase[n - 2]) / (d[n - 1] - d[n - 2]);
        } else {
            const double h_minus = d[i] - d[i - 1];
            const double h_plus = d[i + 1] - d[i];
            slope = (h_minus * h_minus * phase[i + 1] +
                     (h_plus * h_plus - h_minus * h_minus) * phase[i] -
                     h_plus * h_plus * phase[i - 1]) /
                    (h_plus * h_minus * (h_plus + h_minus));
        }
        if (!std::isfinite(slope)) {
            profile.singular_mask[i] = 1;
            continue;
        }
        profile.tau_d[i] = -slope;
    }
    return profile;
}

SweepGrid sweep_rows(std::span<const SweepRow> rows,
                     std::span<const double> detunings, int threads,
                     const DelayOptions& options) {
    if (rows.empty())
        fail(ErrorCode::invalid_argument, "sweep needs at least one row");
    check_detunings(detunings);

    SweepGrid grid;
    grid.axis1.reserve(rows.size());
    for (const auto& row : rows)
        grid.axis1.push_back(row.axis1);
    grid.detunings.assign(detunings.begin(), detunings.end());
    const std::size_t cols = detunings.size();
    grid.values.resize(rows.size() * cols);
    grid.tau_d.assign(rows.size() * cols, 0.0);
    grid.singular_mask.assign(rows.size() * cols, 0);

    auto eval_row = [&](std::size_t r) {
        const auto& row = rows[r];
        ComplexSpectrum spectrum =
            synthesize_spectrum(row.atom, detunings, row.omega_c, row.delta_c);
        DelayProfile profile = group_delay_numeric(spectrum, options);
        const std::size_t base = r * cols;
        std::copy(spectrum.values.begin(), spectrum.values.end(),
                  grid.values.begin() + base);
        std::copy(profile.tau_d.begin(), profile.tau_d.end(),
                  grid.tau_d.begin() + base);
        std::copy(profile.singular_mask.begin(), profile.singular_mask.end(),
                  grid.singular_mask.begin() + base);
    };

    const std::size_t n_rows = rows.size();
    const int n_workers =
        std::max(1, std::min<int>(threads, static_cast<int>(n_rows)));
    if (n_workers == 1) {
        for (std::size_t r = 0; r < n_rows; ++r)
            eval_row(r);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        std::exception_ptr first_error;
        std::mutex error_mutex;
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t r = std::size_t(w); r < n_rows; r += n_workers)
                        eval_row(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error)
                        first_error = std::current_exception();
                }
            });
        }
        for (auto& t : pool)
            t.join();
        if (first_error)
            std::rethrow_exception(first_error);
    }
    return grid;
}

SweepGrid sweep_control_power(const AtomParams& atom, const PowerSweepConfig& config,
                              std::span<const double> detunings, int threads,
                              const DelayOptions& options) {
    if (config.pc_dbm.empty())
        fail(ErrorCode::invalid_argument, "power sweep needs at least one power");
    if (!atom.has_k_10())
        fail(ErrorCode::invalid_argument, "power sweep requires k_10");
    std::vector<SweepRow> rows(config.pc_dbm.size());
    const double k21 = config.k21_scale * atom.k_10;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].axis1 = config.pc_dbm[i];
        rows[i].atom = atom;
        rows[i].omega_c = dbm_to_rabi(config.pc_dbm[i], k21, config.attenuation_db);
        rows[i].delta_c = config.delta_c;
    }
    return sweep_rows(rows, detunings, threads, options);
}

} // namespace qdelay
