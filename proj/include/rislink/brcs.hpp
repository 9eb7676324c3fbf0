#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rislink/geometry.hpp"
#include "rislink/optimizer.hpp"

namespace rislink {

/// Value reported for sigma = 0 (and anything below it).
inline constexpr double kDbsmFloor = -100.0;

struct BrcsFingerprint {
  double beta_rad = 0.0;
  double range_m = 0.0;
  double freq_hz = 0.0;
  std::uint64_t load_hash = 0;  // FNV-1a over the capacitance bytes, 0 for none
};

struct BrcsCurve {
  std::string label;
  std::vector<double> alpha_rad;   // strictly increasing
  std::vector<double> sigma_dbsm;  // floored at kDbsmFloor
  BrcsFingerprint fingerprint;
};

/// Bistatic RCS in m^2 that reproduces |s_rx_tx|^2 through the radar equation.
double brcs_from_coupling(Complex s_rx_tx, double d_tx_m, double d_rx_m, double g_tx_lin, double g_rx_lin,
                          double lambda_m);

/// Forward bistatic radar equation: received/transmitted power ratio for a target of sigma m^2.
double radar_equation_power_ratio(double sigma_m2, double d_tx_m, double d_rx_m, double g_tx_lin,
                                  double g_rx_lin, double lambda_m);

/// 10 log10(sigma), floored at kDbsmFloor.
double to_dbsm(double sigma_m2);

std::uint64_t load_hash(const LoadVector& caps);

/// BRCS versus receiver angle for fixed loads. Each alpha re-assembles the
/// link (only the Rx couplings change), reduces it with `caps`, and converts
/// with the common reference range R on both sides.
BrcsCurve sweep_rx_angle(const Scenario& scn, const ScatterMatrix& ris, const std::vector<ElementPattern>& patterns,
                         const LoadVector& caps, const std::vector<double>& alphas,
                         const VaractorModel& model = {}, unsigned threads = 1);

/// Physical-optics rectangular plate of width x height:
/// 4 pi (A cos beta)^2 / lambda^2 * sinc^2(k w / 2 (sin alpha - sin beta)).
BrcsCurve flat_reflector_reference(double width_m, double height_m, double lambda_m, double beta_rad,
                                   const std::vector<double>& alphas);

/// Linear sigma of the plate model at one angle.
double flat_reflector_sigma(double width_m, double height_m, double lambda_m, double beta_rad, double alpha_rad);

/// CSV with header "alpha_deg,<label>_dbsm,..." and %.6g values.
std::string format_csv(const std::vector<BrcsCurve>& curves);
void export_csv(const std::vector<BrcsCurve>& curves, const std::filesystem::path& path);

/// Inverse of export_csv; alpha in radians, labels without the _dbsm suffix.
std::vector<BrcsCurve> read_csv(const std::filesystem::path& path);
std::vector<BrcsCurve> parse_csv(const std::string& text);

}  // namespace rislink
