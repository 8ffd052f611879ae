#ifndef QDELAY_UNITS_HPP
#define QDELAY_UNITS_HPP

// Unit conventions: every rate, frequency and Rabi frequency inside the
// library is angular (rad/s). The coupling constant k is cyclic Hz per
// sqrt(W), so k*sqrt(P) is multiplied by 2*pi on conversion. CLI and file
// surfaces use cyclic MHz / dBm / ns and convert here at the boundary.

namespace qdelay {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 6.28318530717958647692;

constexpr double mhz_to_angular(double f_mhz) { return two_pi * f_mhz * 1e6; }
constexpr double angular_to_mhz(double omega) { return omega / (two_pi * 1e6); }

// Line power in dBm to watts (and back).
double dbm_to_watt(double p_dbm);
double watt_to_dbm(double p_watt);

// Line power at p_dbm, attenuated by attenuation_db down to chip level,
// to an angular Rabi frequency through the coupling constant k [Hz/sqrt(W)].
double dbm_to_rabi(double p_dbm, double k, double attenuation_db = 0.0);
double rabi_to_dbm(double rabi, double k, double attenuation_db = 0.0);

} // namespace qdelay

#endif
