#include <cmath>
#include <random>

#include "doctest.h"
#include "qdelay/errors.hpp"
#include "qdelay/reflection.hpp"
#include "test_support.hpp"

using namespace qdelay;
using test::device1a;
using test::device2;

namespace {

AtomParams decoupled_atom() {
    AtomInput in;
    in.omega_10 = mhz_to_angular(5000.0);
    in.gamma_r_10 = 0.0;
    in.gamma_10 = mhz_to_angular(3.0);
    return resolve_atom(in);
}

AtomParams critically_damped_atom() { // Gamma_10 = gamma_10, so r(0) = 0
    AtomInput in;
    in.omega_10 = mhz_to_angular(5000.0);
    in.gamma_r_10 = mhz_to_angular(4.0);
    in.gamma_10 = mhz_to_angular(4.0);
    return resolve_atom(in);
}

// Independent phase-slope route: central difference of arg r.
double numeric_delay(const AtomParams& atom, double delta, double h) {
    const double hi = std::arg(reflection_weak(atom, delta + h));
    const double lo = std::arg(reflection_weak(atom, delta - h));
    double diff = hi - lo;
    while (diff > pi)
        diff -= two_pi;
    while (diff < -pi)
        diff += two_pi;
    return -diff / (2.0 * h);
}

} // namespace

TEST_CASE("weak reflection values") {
    const AtomParams d2 = device2();
    const Complex r0 = reflection_weak(d2, 0.0);
    CHECK(r0.real() == doctest::Approx(1.0 - 2.316 / 1.176).epsilon(1e-12));
    CHECK(r0.imag() == doctest::Approx(0.0));
    CHECK(std::abs(r0) == doctest::Approx(0.97).epsilon(0.01));

    const AtomParams d1a = device1a();
    CHECK(reflection_weak(d1a, 0.0).real() ==
          doctest::Approx(1.0 - 6.96 / 11.8).epsilon(1e-12));

    const AtomParams off = decoupled_atom();
    for (double d : {-5.0, 0.0, 3.0, 100.0})
        CHECK(reflection_weak(off, mhz_to_angular(d)) == Complex{1.0, 0.0});
}

TEST_CASE("exact dark point when Gamma_10 = gamma_10") {
    CHECK(reflection_weak(critically_damped_atom(), 0.0) == Complex{0.0, 0.0});
}

TEST_CASE("powered reflection limits") {
    const AtomParams d2 = device2();

    // Saturation: r -> 1.
    CHECK(std::abs(reflection_powered(d2, 0.0, 1e6 * d2.gamma_10) - 1.0) < 1e-4);

    // Weak limit matches the weak closed form.
    for (double f = -3.0; f <= 3.0; f += 0.25) {
        const double delta = f * d2.gamma_10;
        const Complex weak = reflection_weak(d2, delta);
        const Complex powered = reflection_powered(d2, delta, 1e-6 * d2.gamma_10);
        CHECK(std::abs(powered - weak) <= 1e-9 * std::abs(weak));
    }

    // The dip closes at the singular probe power.
    CHECK(std::abs(reflection_powered(d2, 0.0, singular_probe_rabi(d2))) < 1e-12);
    CHECK(std::abs(reflection_powered(d2, 0.0, mhz_to_angular(1.625))) < 1e-3);

    // Weak probe stays nearly fully reflected.
    CHECK(std::abs(reflection_powered(d2, 0.0, mhz_to_angular(0.166))) >= 0.9);

    CHECK_THROWS_AS(reflection_powered(d2, 0.0, -1.0), Error);
}

TEST_CASE("two-tone reflection") {
    const AtomParams d2 = device2();

    // Control off reduces to the weak form.
    for (double f = -4.0; f <= 4.0; f += 0.5) {
        const double delta = f * d2.gamma_10;
        CHECK(std::abs(reflection_two_tone(d2, delta, 0.0) -
                       reflection_weak(d2, delta)) < 1e-12);
    }

    // Singular pump kills the resonant reflection.
    const double oc_sing = singular_control_rabi(d2);
    CHECK(std::abs(reflection_two_tone(d2, 0.0, oc_sing)) < 1e-12);
    CHECK(std::abs(reflection_two_tone(d2, 0.0, mhz_to_angular(3.283))) < 0.02);

    // Autler-Townes doublet: |r| minima near +-Omega_c/2 at strong pump.
    const double oc = mhz_to_angular(10.0);
    const int n = 30001;
    std::vector<double> mag(n);
    for (int i = 0; i < n; ++i) {
        const double d = mhz_to_angular(-15.0 + 30.0 * double(i) / double(n - 1));
        mag[i] = std::abs(reflection_two_tone(d2, d, oc));
    }
    std::vector<double> minima;
    for (int i = 1; i + 1 < n; ++i)
        if (mag[i] < mag[i - 1] && mag[i] < mag[i + 1])
            minima.push_back(-15.0 + 30.0 * double(i) / double(n - 1));
    REQUIRE(minima.size() == 2);
    CHECK(minima[0] == doctest::Approx(-4.6434).epsilon(1e-3));
    CHECK(minima[1] == doctest::Approx(4.6434).epsilon(1e-3));
    CHECK(std::abs(minima[0] + 5.0) < 0.75); // near -Omega_c/2
    CHECK(std::abs(minima[1] - 5.0) < 0.75);
}

TEST_CASE("transfer function") {
    const AtomParams d2 = device2();

    // T(0) is the two-tone reflection by construction.
    for (double f : {-2.0, 0.0, 1.5}) {
        const double dp = f * d2.gamma_10;
        CHECK(transfer_function(d2, dp, mhz_to_angular(2.0), 0.0, 0.0) ==
              reflection_two_tone(d2, dp, mhz_to_angular(2.0)));
    }

    // Far-off-resonant envelope components pass unchanged.
    CHECK(std::abs(transfer_function(d2, 0.0, 0.0, 0.0, 1e12) - 1.0) < 1e-4);
    CHECK(std::abs(transfer_function(d2, 0.0, 0.0, 0.0, -1e12) - 1.0) < 1e-4);

    // Local phase slope of T at omega_e equals the analytic delay at the
    // matching detuning (T(i w)|_{dp=0} = r(w) when the control is off).
    const double we = mhz_to_angular(1.0);
    const double h = we * 1e-4;
    const double slope =
        (std::arg(transfer_function(d2, 0.0, 0.0, 0.0, we + h)) -
         std::arg(transfer_function(d2, 0.0, 0.0, 0.0, we - h))) /
        (2.0 * h);
    const double tau = group_delay_analytic(effective_rates(d2, 0.0), we);
    CHECK(-slope == doctest::Approx(tau).epsilon(1e-6));
    CHECK(tau == doctest::Approx(157.4423e-9).epsilon(1e-6));
}

TEST_CASE("analytic group delay values") {
    CHECK(group_delay_analytic(device2(), 0.0) ==
          doctest::Approx(274.9454e-9).epsilon(1e-5));
    CHECK(group_delay_analytic(device1a(), 0.0) ==
          doctest::Approx(-19.3955e-9).epsilon(1e-5));
    CHECK(group_delay_analytic(test::device1b(), 0.0) ==
          doctest::Approx(22.2433e-9).epsilon(1e-5));
    CHECK(group_delay_analytic(device2(), mhz_to_angular(-1.0)) ==
          doctest::Approx(157.4423e-9).epsilon(1e-5));
}

TEST_CASE("analytic delay is the exact phase slope") {
    for (const AtomParams& atom : {device2(), device1a()}) {
        const EffectiveRates eff = effective_rates(atom, 0.0);
        const double h = atom.gamma_10 * 1e-5;
        for (double f = -3.0; f <= 3.0; f += 0.2) {
            const double delta = f * atom.gamma_10;
            const double analytic = group_delay_analytic(eff, delta);
            CHECK(numeric_delay(atom, delta, h) ==
                  doctest::Approx(analytic).epsilon(1e-6));
        }
    }
}

TEST_CASE("group delay singular exactly at the dark point") {
    EffectiveRates eff{};
    eff.gamma_r_eff = mhz_to_angular(2.0);
    eff.gamma_n_eff = mhz_to_angular(1.0); // Gamma/2 = Gamma^n
    eff.gamma_eff = eff.gamma_r_eff / 2.0 + eff.gamma_n_eff;
    CHECK_THROWS_AS(group_delay_analytic(eff, 0.0), Error);
    CHECK_NOTHROW(group_delay_analytic(eff, mhz_to_angular(0.1)));
}

TEST_CASE("zero-delay boundary") {
    // Device 1a: gamma_10 (Gamma^n - Gamma/2) = 11.8 * 4.84 MHz^2 cyclic,
    // hand arithmetic sqrt gives 7.55725 MHz.
    const auto b1a = zero_delay_boundary(device1a());
    REQUIRE(b1a.has_value());
    CHECK(angular_to_mhz(b1a->second) == doctest::Approx(7.55725).epsilon(1e-5));
    CHECK(b1a->first == doctest::Approx(-b1a->second));

    // The delay really is zero there.
    const EffectiveRates eff = effective_rates(device1a(), 0.0);
    const double tau0 = group_delay_analytic(eff, 0.0);
    CHECK(std::abs(group_delay_analytic(eff, b1a->second)) <= 1e-10 * std::abs(tau0));

    // Device 2 sits in the positive-delay regime.
    CHECK(!zero_delay_boundary(device2()).has_value());

    // Slightly above the singular pump a small symmetric pair opens up.
    const AtomParams d2 = device2();
    const auto pair = zero_delay_boundary(d2, 1.02 * singular_control_rabi(d2));
    REQUIRE(pair.has_value());
    CHECK(pair->second > 0.0);
    CHECK(pair->second < mhz_to_angular(1.0));
    CHECK(pair->first == doctest::Approx(-pair->second));
}

TEST_CASE("conjugate symmetry of the reflection") {
    const AtomParams d2 = device2();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> detuning(-5.0, 5.0);
    std::uniform_real_distribution<double> pump(0.0, 1.8);
    for (int i = 0; i < 300; ++i) {
        const double d = detuning(rng) * d2.gamma_10;
        CHECK(std::abs(reflection_weak(d2, -d) - std::conj(reflection_weak(d2, d))) <
              1e-12);
        const double oc = pump(rng) * d2.gamma_20;
        CHECK(std::abs(reflection_two_tone(d2, -d, oc, 0.0) -
                       std::conj(reflection_two_tone(d2, d, oc, 0.0))) < 1e-12);
    }
}

TEST_CASE("passivity: |r| <= 1 for non-negative non-radiative rates") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> rate(0.05, 30.0);
    std::uniform_real_distribution<double> detuning(-10.0, 10.0);
    std::uniform_real_distribution<double> pump(0.0, 4.0);
    for (int i = 0; i < 500; ++i) {
        AtomInput in;
        in.omega_10 = mhz_to_angular(5000.0);
        in.gamma_r_10 = mhz_to_angular(rate(rng));
        in.gamma_n_10 = mhz_to_angular(rate(rng)) * 0.2;
        in.gamma_10 = in.gamma_r_10 / 2.0 + in.gamma_n_10;
        const AtomParams atom = resolve_atom(in);
        const double d = detuning(rng) * atom.gamma_10;
        CHECK(std::abs(reflection_weak(atom, d)) <= 1.0 + 1e-9);
        CHECK(std::abs(reflection_powered(atom, d, rate(rng) * atom.gamma_10)) <=
              1.0 + 1e-9);
        CHECK(std::abs(reflection_two_tone(atom, d, pump(rng) * atom.gamma_20)) <=
              1.0 + 1e-9);
    }
}

TEST_CASE("effective-rate reduction matches the two-tone form near resonance") {
    const AtomParams d2 = device2();
    double worst = 0.0;
    for (int i = 0; i <= 120; ++i) {
        const double oc = 1.5 * d2.gamma_20 * double(i) / 120.0;
        const EffectiveRates eff = effective_rates(d2, oc);
        for (int j = -40; j <= 40; ++j) {
            const double dp = 0.1 * d2.gamma_10 * double(j) / 40.0;
            const double dev = std::abs(reflection_two_tone(d2, dp, oc) -
                                        reflection_weak(eff, dp));
            worst = std::max(worst, dev);
        }
    }
    CHECK(worst <= 0.05);
}
