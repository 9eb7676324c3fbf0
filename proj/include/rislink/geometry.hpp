#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rislink/network.hpp"

namespace rislink {

enum class Side { Tx, Rx };

struct ElementGeometry {
  int index = 0;    // element number, matches the RIS port role
  double x_m = 0.0; // along the surface, in the azimuth plane
  double z_m = 0.0; // out of the azimuth plane
};

/// Link geometry. Angles are measured from the surface normal in the
/// azimuth plane, positive toward +x. The Rx position uses -alpha.
struct Scenario {
  double range_m = 0.0;
  double alpha_rad = 0.0;
  double beta_rad = 0.0;
  double freq_hz = 0.0;
  double gain_tx_lin = 1.0;
  double gain_rx_lin = 1.0;
  std::vector<ElementGeometry> elements;
  // Physical board extent; zero means "derive from the element layout".
  double board_width_m = 0.0;
  double board_height_m = 0.0;

  double wavelength_m() const;
  /// beta for Tx, -alpha for Rx.
  double side_angle_rad(Side side) const;
  double side_gain_lin(Side side) const;
  /// Throws GeometryError when an invariant is broken.
  void validate() const;
};

/// Sampled azimuth gain pattern of one embedded element, plus its
/// self-scatter coefficient S_mm.
class ElementPattern {
 public:
  ElementPattern(int index, std::vector<double> azimuth_rad, std::vector<double> gain_lin, Complex s_mm);

  int index() const noexcept { return index_; }
  Complex s_mm() const noexcept { return s_mm_; }
  const std::vector<double>& azimuth_rad() const noexcept { return azimuth_; }
  const std::vector<double>& gain_lin() const noexcept { return gain_; }

  bool covers(double azimuth_rad) const noexcept;
  /// Linear interpolation in linear gain. Throws InterpolationRangeError
  /// outside the sampled range.
  double gain_at(double azimuth_rad) const;

  /// G(phi) = peak * cos(phi)^exponent sampled every step_deg over [-90, 90].
  static ElementPattern cosine(int index, double peak_gain_lin, double exponent, Complex s_mm,
                               double step_deg = 1.0);
  static ElementPattern isotropic(int index, double gain_lin, Complex s_mm);

 private:
  int index_;
  std::vector<double> azimuth_;
  std::vector<double> gain_;
  Complex s_mm_;
};

double distance_to_element(const Scenario& scn, std::size_t pos, Side side);
double azimuth_to_element(const Scenario& scn, std::size_t pos, Side side);

/// Far-field coupling entry between the Tx (or Rx) antenna and element `pos`.
Complex coupling_coefficient(const Scenario& scn, const ElementPattern& pat, std::size_t pos, Side side);

/// Build the (N+2)-port link matrix [Tx, RIS..., Rx] from the RIS-only
/// matrix. Tx/Rx self terms and the direct Tx-Rx term are zero.
ScatterMatrix assemble_full_matrix(const Scenario& scn, const ScatterMatrix& ris,
                                   const std::vector<ElementPattern>& patterns);

/// Tolerance on |pattern.s_mm - ris diagonal| accepted by the assembly.
inline constexpr double kSelfScatterTolerance = 1e-6;

struct CouplingModel {
  enum class Kind { Isolated, ExpDecay };
  Kind kind = Kind::Isolated;
  Complex s_mm{};
  double c0 = 0.0;
  double rolloff_m = 1.0;

  static CouplingModel isolated(Complex s_mm) { return {Kind::Isolated, s_mm, 0.0, 1.0}; }
  static CouplingModel exp_decay(Complex s_mm, double c0, double rolloff_m) {
    return {Kind::ExpDecay, s_mm, c0, rolloff_m};
  }
};

/// Largest singular value a synthesized RIS matrix is allowed to reach.
/// Leaves headroom for the power the elements radiate toward Tx and Rx.
inline constexpr double kSynthSingularCeiling = 0.95;

/// Synthetic reciprocal, passive RIS-only matrix standing in for a full-wave
/// export. Off-diagonal coupling is scaled down when needed so the largest
/// singular value stays at or below kSynthSingularCeiling (or max |s_mm|).
ScatterMatrix synth_ris_matrix(const std::vector<ElementGeometry>& elements, double freq_hz,
                               const CouplingModel& model, double z0_ohm = 50.0);

struct GridSpec {
  int rows = 1;
  int cols = 1;
  double pitch_x_m = 0.0;
  double pitch_z_m = 0.0;
  double offset_x_m = 0.0;  // shift of the grid centre
  double offset_z_m = 0.0;
};

/// Row-major element layout centred on the origin (plus offsets). Element
/// numbers start at 1 in the bottom row, left to right.
std::vector<ElementGeometry> grid_layout(const GridSpec& grid);

/// RIS aperture diagonal: board extent when given, element extent otherwise.
double aperture_diagonal_m(const Scenario& scn);
/// 2 D^2 / lambda.
double far_field_distance_m(const Scenario& scn);
/// At most one message per side, summarising elements inside the far-field distance.
std::vector<std::string> far_field_warnings(const Scenario& scn);

}  // namespace rislink
