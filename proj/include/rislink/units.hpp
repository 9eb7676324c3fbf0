#pragma once

#include <cmath>
#include <numbers>

namespace rislink {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline double wavelength_m(double freq_hz) { return kSpeedOfLight / freq_hz; }

/// Power ratio in dB to linear. -inf maps to 0.
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Field (amplitude) ratio in dB to linear, 20 log10 convention.
inline double db20_to_lin(double db) { return std::pow(10.0, db / 20.0); }
inline double lin_to_db20(double lin) { return 20.0 * std::log10(lin); }

/// Wrap to (-pi, pi].
inline double wrap_phase(double rad) {
  double w = std::remainder(rad, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

}  // namespace rislink
