#include <cmath>
#include <random>

#include "doctest.h"
#include "qdelay/errors.hpp"
#include "qdelay/fit.hpp"
#include "qdelay/reflection.hpp"
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

TEST_CASE("levenberg_marquardt solves a tiny least-squares problem") {
    // Residuals (p0 - 3, p1 + 1, p0 + p1): inconsistent overdetermined
    // system, normal-equation solution (7/3, -5/3) with residual 2/sqrt(3).
    auto fn = [](std::span<const double> p, std::span<double> out) {
        out[0] = p[0] - 3.0;
        out[1] = p[1] + 1.0;
        out[2] = p[0] + p[1];
    };
    const auto sol = levenberg_marquardt(fn, 3, {0.0, 0.0});
    CHECK(sol.converged);
    CHECK(sol.params[0] == doctest::Approx(7.0 / 3.0).epsilon(1e-8));
    CHECK(sol.params[1] == doctest::Approx(-5.0 / 3.0).epsilon(1e-8));
    CHECK(sol.residual_norm == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-8));

    CHECK_THROWS_AS(levenberg_marquardt(fn, 1, {0.0, 0.0}), Error);
}

TEST_CASE("gaussian pulse fit recovers exact parameters") {
    const std::size_t n = 600;
    std::vector<double> t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = double(i) * 2e-9;
        const double u = (t[i] - 600e-9) / 90e-9;
        y[i] = 0.7 * std::exp(-0.5 * u * u) + 0.05;
    }
    const auto fit = fit_gaussian_pulse(t, y);
    CHECK(fit.converged);
    CHECK(fit.amplitude == doctest::Approx(0.7).epsilon(1e-7));
    CHECK(fit.t0 == doctest::Approx(600e-9).epsilon(1e-9));
    CHECK(fit.sigma == doctest::Approx(90e-9).epsilon(1e-6));
    CHECK(fit.baseline == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(fit.residual_ratio < 1e-7);
}

TEST_CASE("circle fit on exact circles") {
    SUBCASE("unit circle") {
        std::vector<Complex> pts;
        for (int i = 0; i < 12; ++i)
            pts.push_back(std::polar(1.0, two_pi * double(i) / 12.0));
        const auto fit = circle_fit(pts);
        CHECK(std::abs(fit.center) < 1e-12);
        CHECK(fit.radius == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("weak-reflection locus of device 2") {
        // Eq-form algebra: the reflection sweeps a circle through r = 1 with
        // center 1 - Gamma/(2 gamma) on the real axis, radius Gamma/(2 gamma).
        const AtomParams atom = device2();
        const auto grid = uniform_grid(-8.0 * atom.gamma_10, 8.0 * atom.gamma_10, 41);
        std::vector<Complex> pts;
        for (double d : grid)
            pts.push_back(reflection_weak(atom, d));
        const auto fit = circle_fit(pts);
        const double ratio = atom.gamma_r_10 / atom.gamma_10;
        CHECK(fit.center.real() == doctest::Approx(1.0 - ratio / 2.0).epsilon(1e-9));
        CHECK(std::abs(fit.center.imag()) < 1e-9);
        CHECK(fit.radius == doctest::Approx(ratio / 2.0).epsilon(1e-9));
        CHECK(2.0 * fit.radius == doctest::Approx(1.969388).epsilon(1e-6));
    }

    SUBCASE("device 1a diameter") {
        const AtomParams atom = device1a();
        const auto grid = uniform_grid(-8.0 * atom.gamma_10, 8.0 * atom.gamma_10, 41);
        std::vector<Complex> pts;
        for (double d : grid)
            pts.push_back(reflection_weak(atom, d));
        CHECK(2.0 * circle_fit(pts).radius == doctest::Approx(0.589831).epsilon(1e-6));
    }
}

TEST_CASE("circle fit is invariant under rotation and translation") {
    const AtomParams atom = device2();
    const auto grid = uniform_grid(-6.0 * atom.gamma_10, 6.0 * atom.gamma_10, 31);
    std::vector<Complex> pts;
    for (double d : grid)
        pts.push_back(reflection_weak(atom, d));
    const auto base = circle_fit(pts);

    const Complex rot = std::polar(1.0, 0.7);
    const Complex shift{0.3, -0.7};
    std::vector<Complex> moved;
    for (const auto& p : pts)
        moved.push_back(rot * p + shift);
    const auto fit = circle_fit(moved);
    const Complex recovered = (fit.center - shift) / rot;
    CHECK(std::abs(recovered - base.center) < 1e-9);
    CHECK(fit.radius == doctest::Approx(base.radius).epsilon(1e-9));
}

TEST_CASE("circle fit degeneracy detection") {
    std::vector<Complex> line;
    for (int i = 0; i < 10; ++i)
        line.push_back(Complex(double(i) * 0.1, 0.02 * double(i)));
    CHECK_THROWS_AS(circle_fit(line), Error);

    std::vector<Complex> few = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    CHECK_THROWS_AS(circle_fit(few), Error);

    std::vector<Complex> same(8, Complex{0.5, 0.5});
    CHECK_THROWS_AS(circle_fit(same), Error);
}

TEST_CASE("weak-spectrum fit recovers the measured devices") {
    for (const AtomParams& atom : {device2(), device1b()}) {
        const auto grid = uniform_grid(-6.0 * atom.gamma_10, 6.0 * atom.gamma_10, 201);
        const auto spectrum = synthesize_spectrum(atom, grid);
        const auto fit = fit_weak_spectrum(spectrum, atom.omega_10);
        CHECK(fit.converged);
        CHECK(fit.value("gamma_r_10") ==
              doctest::Approx(atom.gamma_r_10).epsilon(1e-3));
        CHECK(fit.value("gamma_10") == doctest::Approx(atom.gamma_10).epsilon(1e-3));
        CHECK(fit.value("omega_10") == doctest::Approx(atom.omega_10).epsilon(1e-9));
    }
}

TEST_CASE("weak-spectrum fit round-trips random atoms within 0.1%") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> gr(0.5, 40.0);
    std::uniform_real_distribution<double> excess(0.05, 10.0);
    std::uniform_real_distribution<double> offset(-0.5, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        AtomInput in;
        in.omega_10 = mhz_to_angular(5000.0);
        in.gamma_r_10 = mhz_to_angular(gr(rng));
        in.gamma_10 = in.gamma_r_10 / 2.0 + mhz_to_angular(excess(rng));
        const AtomParams atom = resolve_atom(in);

        // Off-center grid exercises the omega_10 recovery too.
        const double d0 = offset(rng) * atom.gamma_10;
        const auto grid =
            uniform_grid(d0 - 6.0 * atom.gamma_10, d0 + 6.0 * atom.gamma_10, 241);
        std::vector<Complex> values;
        for (double d : grid)
            values.push_back(reflection_weak(atom, d));
        const auto fit = fit_weak_spectrum(make_spectrum(grid, values), 0.0);
        CHECK(fit.value("gamma_r_10") ==
              doctest::Approx(atom.gamma_r_10).epsilon(1e-3));
        CHECK(fit.value("gamma_10") == doctest::Approx(atom.gamma_10).epsilon(1e-3));
        CHECK(std::abs(fit.value("omega_10")) < 1e-3 * atom.gamma_10);
    }
}

TEST_CASE("flat spectrum is rejected as degenerate") {
    const auto grid = uniform_grid(-1e7, 1e7, 51);
    std::vector<Complex> flat(grid.size(), Complex{1.0, 0.0});
    CHECK_THROWS_AS(fit_weak_spectrum(make_spectrum(grid, flat)), Error);
}

TEST_CASE("weak-spectrum fit under 1% noise: coverage and bias") {
    const AtomParams atom = device2();
    const auto grid = uniform_grid(-6.0 * atom.gamma_10, 6.0 * atom.gamma_10, 201);
    std::vector<Complex> clean;
    for (double d : grid)
        clean.push_back(reflection_weak(atom, d));

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.01);
    const int trials = 100;
    int covered_gr = 0, covered_g = 0;
    double sum_gr = 0.0, sum_se_gr = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<Complex> noisy(clean);
        for (auto& v : noisy)
            v += Complex(noise(rng), noise(rng));
        const auto fit = fit_weak_spectrum(make_spectrum(grid, noisy), 0.0);
        const double err_gr = fit.value("gamma_r_10") - atom.gamma_r_10;
        const double err_g = fit.value("gamma_10") - atom.gamma_10;
        if (std::abs(err_gr) <= 1.96 * fit.stderr_of("gamma_r_10"))
            ++covered_gr;
        if (std::abs(err_g) <= 1.96 * fit.stderr_of("gamma_10"))
            ++covered_g;
        sum_gr += fit.value("gamma_r_10");
        sum_se_gr += fit.stderr_of("gamma_r_10");
    }
    // 95% nominal coverage; allow binomial slack over 100 seeded trials.
    CHECK(covered_gr >= 90);
    CHECK(covered_g >= 90);
    // Mean estimate unbiased well within 3x the typical stderr.
    const double bias = sum_gr / trials - atom.gamma_r_10;
    CHECK(std::abs(bias) <= 3.0 * (sum_se_gr / trials));
}

TEST_CASE("power-dependence fit") {
    const AtomParams atom = device2();
    const double true_k = atom.k_10;
    const double att = 132.3;

    // Line powers spanning the saturation knee (~ -10 dBm at the line).
    std::vector<PowerPoint> points;
    for (double p = -30.0; p <= 6.0; p += 3.0) {
        const double omega_p = dbm_to_rabi(p, true_k, att);
        points.push_back({p, reflection_powered(atom, 0.0, omega_p)});
    }

    SUBCASE("recovers k_10 with the attenuation pinned") {
        const auto fit = fit_power_dependence(points, atom, att, std::nullopt);
        CHECK(fit.converged);
        CHECK(fit.value("k_10") == doctest::Approx(true_k).epsilon(0.005));
    }

    SUBCASE("recovers the attenuation with k_10 pinned") {
        const auto fit = fit_power_dependence(points, atom, std::nullopt, true_k);
        CHECK(fit.value("attenuation_db") == doctest::Approx(att).epsilon(1e-4));
    }

    SUBCASE("pinning neither or both is underdetermined") {
        CHECK_THROWS_AS(fit_power_dependence(points, atom, std::nullopt, std::nullopt),
                        Error);
        CHECK_THROWS_AS(fit_power_dependence(points, atom, att, true_k), Error);
    }

    SUBCASE("unsaturated data blow up the uncertainty, visibly") {
        // Noise keeps the variance estimate honest; noiseless flat data would
        // report stderr ~ 0 only because the residual floor is ~ 0 too.
        std::mt19937_64 rng(99);
        std::normal_distribution<double> noise(0.0, 0.005);
        std::vector<PowerPoint> weak;
        for (double p = -80.0; p >= -113.0; p -= 3.0) {
            const double omega_p = dbm_to_rabi(p, true_k, att);
            weak.push_back({p, reflection_powered(atom, 0.0, omega_p) +
                                   Complex(noise(rng), noise(rng))});
        }
        bool flagged = false;
        try {
            const auto fit = fit_power_dependence(weak, atom, att, std::nullopt);
            flagged = !fit.converged ||
                      fit.stderr_of("k_10") > 0.5 * std::abs(fit.value("k_10"));
        } catch (const Error&) {
            flagged = true;
        }
        CHECK(flagged);
    }

    SUBCASE("predicted dark-point power lands at -142.5 dBm chip level") {
        const auto fit = fit_power_dependence(points, atom, att, std::nullopt);
        const double p_sing =
            rabi_to_dbm(singular_probe_rabi(atom), fit.value("k_10"), 0.0);
        CHECK(p_sing == doctest::Approx(-142.48).epsilon(0.002));
    }
}

TEST_CASE("two-tone map fit recovers gamma_20") {
    const AtomParams atom = device2();
    TwoToneMap map;
    for (double p = -158.0; p <= -128.0; p += 2.0)
        map.pc_dbm.push_back(p);
    const auto grid = uniform_grid(-mhz_to_angular(10.0), mhz_to_angular(10.0), 41);
    map.detunings.assign(grid.begin(), grid.end());
    const double k21 = map.k21_scale * atom.k_10;
    for (double p : map.pc_dbm) {
        const double oc = dbm_to_rabi(p, k21, map.attenuation_db);
        for (double d : map.detunings)
            map.values.push_back(reflection_two_tone(atom, d, oc));
    }

    const auto fit = fit_two_tone(map, atom);
    CHECK(fit.converged);
    CHECK(fit.value("gamma_20") == doctest::Approx(atom.gamma_20).epsilon(0.005));
    CHECK(angular_to_mhz(fit.value("gamma_20")) == doctest::Approx(2.364).epsilon(0.005));

    // The recovered gamma_20 pins the singular pump power.
    AtomInput in;
    in.omega_10 = atom.omega_10;
    in.gamma_r_10 = atom.gamma_r_10;
    in.gamma_10 = atom.gamma_10;
    in.k_10 = atom.k_10;
    in.gamma_r_21 = atom.gamma_r_21;
    in.gamma_20 = fit.value("gamma_20");
    const AtomParams refit = resolve_atom(in);
    const double pc =
        rabi_to_dbm(singular_control_rabi(refit), std::sqrt(2.0) * refit.k_10, 0.0);
    CHECK(pc == doctest::Approx(-139.38).epsilon(0.0015));
}

TEST_CASE("two-tone fit with no pump power is underdetermined") {
    const AtomParams atom = device2();
    TwoToneMap map;
    map.pc_dbm = {-std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
    const auto grid = uniform_grid(-mhz_to_angular(5.0), mhz_to_angular(5.0), 21);
    map.detunings.assign(grid.begin(), grid.end());
    for (std::size_t r = 0; r < map.pc_dbm.size(); ++r)
        for (double d : map.detunings)
            map.values.push_back(reflection_weak(atom, d));
    CHECK_THROWS_AS(fit_two_tone(map, atom), Error);
}
