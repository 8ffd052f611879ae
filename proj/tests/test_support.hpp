#ifndef QDELAY_TEST_SUPPORT_HPP
#define QDELAY_TEST_SUPPORT_HPP

#include <string>

#include "qdelay/params.hpp"
#include "qdelay/units.hpp"

namespace qdelay::test {

// Table values for the three measured parameter sets. Gamma^n_10 is derived
// from the closure, matching the shipped device files.
inline AtomParams device2() {
    AtomInput in;
    in.omega_10 = mhz_to_angular(4761.62);
    in.gamma_r_10 = mhz_to_angular(2.316);
    in.gamma_10 = mhz_to_angular(1.176);
    in.k_10 = 6.8363e14;
    in.gamma_r_21 = mhz_to_angular(4.632);
    in.gamma_20 = mhz_to_angular(2.364);
    return resolve_atom(in);
}

inline AtomParams device1a() {
    AtomInput in;
    in.omega_10 = mhz_to_angular(7605.7);
    in.gamma_r_10 = mhz_to_angular(6.96);
    in.gamma_10 = mhz_to_angular(11.8);
    in.k_10 = 9.37e14;
    return resolve_atom(in);
}

inline AtomParams device1b() {
    AtomInput in;
    in.omega_10 = mhz_to_angular(7799.0);
    in.gamma_r_10 = mhz_to_angular(33.07);
    in.gamma_10 = mhz_to_angular(22.6);
    in.k_10 = 2.0185e15;
    return resolve_atom(in);
}

inline std::string data_path(const std::string& name) {
    return std::string(QDELAY_DATA_DIR) + "/" + name;
}

} // namespace qdelay::test

#endif
