#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "qdelay/errors.hpp"
#include "qdelay/spectrum.hpp"
#include "test_support.hpp"

using namespace qdelay;
using test::device1a;
using test::device1b;
using test::device2;

namespace {

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return g;
}

} // namespace

TEST_CASE("phase unwrap keeps the branch continuous") {
    const std::size_t n = 400;
    std::vector<Complex> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double phi = 6.0 * pi * double(i) / double(n - 1);
        values[i] = std::polar(1.0, phi);
    }
    const auto unwrapped = unwrap_phase(values);
    for (std::size_t i = 1; i < n; ++i)
        CHECK(std::abs(unwrapped[i] - unwrapped[i - 1]) < pi);
    CHECK(unwrapped.back() - unwrapped.front() == doctest::Approx(6.0 * pi).epsilon(1e-9));
}

TEST_CASE("spectrum construction validates its axes") {
    std::vector<double> bad = {0.0, 1.0, 1.0};
    std::vector<Complex> v(3, Complex{1.0, 0.0});
    CHECK_THROWS_AS(make_spectrum(bad, v), Error);
    std::vector<double> good = {0.0, 1.0, 2.0};
    std::vector<Complex> short_v(2);
    CHECK_THROWS_AS(make_spectrum(good, short_v), Error);
    CHECK_NOTHROW(make_spectrum(good, v));
}

TEST_CASE("numeric delay needs at least three samples") {
    std::vector<double> d = {0.0, 1.0};
    std::vector<Complex> v = {{1, 0}, {1, 0}};
    const auto s = make_spectrum(d, v);
    CHECK_THROWS_AS(group_delay_numeric(s), Error);
}

TEST_CASE("constant phase gives zero delay") {
    const auto grid = uniform_grid(-1e6, 1e6, 31);
    std::vector<Complex> v(grid.size(), std::polar(0.5, 0.9));
    const auto profile = group_delay_numeric(make_spectrum(grid, v));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(profile.singular_mask[i] == 0);
        CHECK(profile.tau_d[i] == doctest::Approx(0.0));
    }
}

TEST_CASE("numeric delay matches the analytic slope on dense synthetic spectra") {
    for (const AtomParams& atom : {device2(), device1a(), device1b()}) {
        const double g = atom.gamma_10;
        const std::size_t n = std::size_t(2.0 * 5.0 * 50.0) + 1; // step gamma/50
        const auto grid = uniform_grid(-5.0 * g, 5.0 * g, n);
        const auto spectrum = synthesize_spectrum(atom, grid);
        const auto profile = group_delay_numeric(spectrum);
        const EffectiveRates eff = effective_rates(atom, 0.0);
        // 1% relative, with the denominator floored at 5% of the profile
        // peak: tau crosses zero inside the device-1a grid, where a pure
        // ratio is ill-posed and the truncation error is picoseconds.
        double peak = 0.0;
        for (double d : grid)
            peak = std::max(peak, std::abs(group_delay_analytic(eff, d)));
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double analytic = group_delay_analytic(eff, grid[i]);
            CHECK(profile.singular_mask[i] == 0);
            const double scale = std::max(std::abs(analytic), 0.05 * peak);
            CHECK(std::abs(profile.tau_d[i] - analytic) <= 0.01 * scale);
        }
    }
}

TEST_CASE("resonant numeric delays for the measured devices") {
    const auto check_at_zero = [](const AtomParams& atom, double expected_ns) {
        const double g = atom.gamma_10;
        const auto grid = uniform_grid(-4.0 * g, 4.0 * g, 401);
        const auto profile = group_delay_numeric(synthesize_spectrum(atom, grid));
        CHECK(profile.tau_d[200] * 1e9 == doctest::Approx(expected_ns).epsilon(0.01));
    };
    check_at_zero(device2(), 274.9454);
    check_at_zero(device1b(), 22.2433);
    check_at_zero(device1a(), -19.3955);
}

TEST_CASE("non-uniform grids use the weighted stencil") {
    const AtomParams atom = device2();
    const double g = atom.gamma_10;
    std::vector<double> grid;
    double x = -4.0 * g;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> step(g / 80.0, g / 50.0);
    while (x < 4.0 * g) {
        grid.push_back(x);
        x += step(rng);
    }
    const auto profile = group_delay_numeric(synthesize_spectrum(atom, grid));
    const EffectiveRates eff = effective_rates(atom, 0.0);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i)
        CHECK(profile.tau_d[i] ==
              doctest::Approx(group_delay_analytic(eff, grid[i])).epsilon(0.01));
}

TEST_CASE("aliasing guard rejects coarse grids unless overridden") {
    const AtomParams atom = device2();
    const double g = atom.gamma_10;
    const auto coarse = uniform_grid(-20.0 * g, 20.0 * g, 15);
    const auto spectrum = synthesize_spectrum(atom, coarse);
    CHECK_THROWS_AS(group_delay_numeric(spectrum), Error);
    DelayOptions opts;
    opts.allow_coarse = true;
    CHECK_NOTHROW(group_delay_numeric(spectrum, opts));
}

TEST_CASE("phase smoothing window runs and stays finite") {
    const AtomParams atom = device2();
    const auto grid = uniform_grid(-3.0 * atom.gamma_10, 3.0 * atom.gamma_10, 201);
    auto spectrum = synthesize_spectrum(atom, grid);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.002);
    for (auto& v : spectrum.values)
        v += Complex(noise(rng), noise(rng));
    spectrum.phase_unwrapped = unwrap_phase(spectrum.values);
    DelayOptions opts;
    opts.smooth_window = 3;
    const auto profile = group_delay_numeric(spectrum, opts);
    for (double tau : profile.tau_d)
        CHECK(std::isfinite(tau));
}

TEST_CASE("dark-point cells are masked, not fatal") {
    AtomInput in;
    in.omega_10 = mhz_to_angular(5000.0);
    in.gamma_r_10 = mhz_to_angular(4.0);
    in.gamma_10 = mhz_to_angular(4.0); // r(0) = 0 exactly
    const AtomParams atom = resolve_atom(in);
    const auto grid = uniform_grid(-2.0 * atom.gamma_10, 2.0 * atom.gamma_10, 201);
    REQUIRE(grid[100] == 0.0);
    // The pi phase jump across the masked zero must not trip the grid guard.
    const auto profile = group_delay_numeric(synthesize_spectrum(atom, grid));
    CHECK(profile.singular_mask[100] == 1);
    CHECK(profile.singular_mask[99] == 0);
    CHECK(profile.singular_mask[101] == 0);
}

TEST_CASE("degenerate one-row sweep equals the direct spectrum path") {
    const AtomParams atom = device2();
    const auto grid = uniform_grid(-3.0 * atom.gamma_10, 3.0 * atom.gamma_10, 301);
    SweepRow row;
    row.axis1 = 0.0;
    row.atom = atom;
    const auto swept = sweep_rows(std::vector<SweepRow>{row}, grid);
    const auto direct = synthesize_spectrum(atom, grid);
    const auto profile = group_delay_numeric(direct);
    REQUIRE(swept.values.size() == direct.values.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(swept.values[i] == direct.values[i]);
        CHECK(swept.tau_d[i] == profile.tau_d[i]);
    }
}

TEST_CASE("control-power sweep shows the delay sign flip at the singularity") {
    const AtomParams atom = device2();
    PowerSweepConfig config;
    config.pc_dbm = {-152.1, -141.0, -138.5};
    const auto grid = uniform_grid(mhz_to_angular(-15.0), mhz_to_angular(15.0), 1201);
    const auto map = sweep_control_power(atom, config, grid);
    const std::size_t mid = 600; // delta = 0 column
    REQUIRE(grid[mid] == 0.0);
    CHECK(map.tau_d[map.index(0, mid)] > 0.0);
    CHECK(map.tau_d[map.index(1, mid)] > 0.0);
    CHECK(map.tau_d[map.index(2, mid)] < 0.0); // past -139.38 dBm
}

TEST_CASE("sweep grids are conjugate-symmetric at delta_c = 0") {
    const AtomParams atom = device2();
    PowerSweepConfig config;
    config.pc_dbm = {-150.0, -140.0, -130.0};
    const auto grid = uniform_grid(mhz_to_angular(-10.0), mhz_to_angular(10.0), 801);
    const auto map = sweep_control_power(atom, config, grid);
    for (std::size_t r = 0; r < map.rows(); ++r)
        for (std::size_t c = 0; c < map.cols(); ++c) {
            const auto a = map.values[map.index(r, c)];
            const auto b = map.values[map.index(r, map.cols() - 1 - c)];
            CHECK(std::abs(a - std::conj(b)) < 1e-12);
        }
}

TEST_CASE("parallel sweep is bitwise identical to serial") {
    const AtomParams atom = device2();
    PowerSweepConfig config;
    config.pc_dbm.resize(24);
    for (std::size_t i = 0; i < config.pc_dbm.size(); ++i)
        config.pc_dbm[i] = -155.0 + 1.5 * double(i);
    const auto grid = uniform_grid(mhz_to_angular(-12.0), mhz_to_angular(12.0), 501);

    const auto serial = sweep_control_power(atom, config, grid, 1);
    const auto parallel = sweep_control_power(atom, config, grid, 4);
    REQUIRE(serial.values.size() == parallel.values.size());
    CHECK(std::memcmp(serial.values.data(), parallel.values.data(),
                      serial.values.size() * sizeof(Complex)) == 0);
    CHECK(std::memcmp(serial.tau_d.data(), parallel.tau_d.data(),
                      serial.tau_d.size() * sizeof(double)) == 0);
    CHECK(serial.singular_mask == parallel.singular_mask);
}

TEST_CASE("power sweep requires k_10") {
    AtomInput in;
    in.omega_10 = mhz_to_angular(5000.0);
    in.gamma_r_10 = mhz_to_angular(2.0);
    in.gamma_10 = mhz_to_angular(1.5);
    const AtomParams atom = resolve_atom(in);
    PowerSweepConfig config;
    config.pc_dbm = {-150.0};
    const auto grid = uniform_grid(-1e6, 1e6, 11);
    CHECK_THROWS_AS(sweep_control_power(atom, config, grid), Error);
}
