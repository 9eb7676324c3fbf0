#include "rislink/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rislink/error.hpp"
#include "rislink/units.hpp"

namespace rislink {

double Scenario::wavelength_m() const { return rislink::wavelength_m(freq_hz); }

double Scenario::side_angle_rad(Side side) const { return side == Side::Tx ? beta_rad : -alpha_rad; }

double Scenario::side_gain_lin(Side side) const { return side == Side::Tx ? gain_tx_lin : gain_rx_lin; }

void Scenario::validate() const {
  if (!(range_m > 0.0) || !std::isfinite(range_m)) throw GeometryError("range must be positive");
  if (!(freq_hz > 0.0) || !std::isfinite(freq_hz)) throw GeometryError("frequency must be positive");
  if (!(gain_tx_lin > 0.0) || !(gain_rx_lin > 0.0)) throw GeometryError("antenna gains must be positive");
  if (!(std::abs(alpha_rad) < kPi / 2) || !(std::abs(beta_rad) < kPi / 2))
    throw GeometryError("Tx/Rx angles must satisfy |angle| < 90 deg (antennas in front of the surface)");
  if (elements.empty()) throw GeometryError("scenario has no RIS elements");
  std::vector<int> seen;
  for (const auto& e : elements) {
    if (!std::isfinite(e.x_m) || !std::isfinite(e.z_m))
      throw GeometryError("element " + std::to_string(e.index) + " has non-finite coordinates");
    if (std::find(seen.begin(), seen.end(), e.index) != seen.end())
      throw GeometryError("duplicate element index " + std::to_string(e.index));
    seen.push_back(e.index);
  }
  if (board_width_m < 0.0 || board_height_m < 0.0) throw GeometryError("board dimensions must be non-negative");
}

ElementPattern::ElementPattern(int index, std::vector<double> azimuth_rad, std::vector<double> gain_lin,
                               Complex s_mm)
    : index_(index), azimuth_(std::move(azimuth_rad)), gain_(std::move(gain_lin)), s_mm_(s_mm) {
  if (azimuth_.size() != gain_.size() || azimuth_.size() < 2)
    throw GeometryError("pattern of element " + std::to_string(index_) + " needs at least two samples");
  for (std::size_t k = 0; k < azimuth_.size(); ++k) {
    if (k > 0 && !(azimuth_[k] > azimuth_[k - 1]))
      throw GeometryError("pattern azimuths of element " + std::to_string(index_) + " must be strictly increasing");
    if (!(gain_[k] >= 0.0) || !std::isfinite(gain_[k]))
      throw GeometryError("pattern gains of element " + std::to_string(index_) + " must be finite and >= 0");
  }
  if (!(std::abs(s_mm_) <= 1.0)) throw GeometryError("|s_mm| of element " + std::to_string(index_) + " exceeds 1");
}

bool ElementPattern::covers(double az) const noexcept { return az >= azimuth_.front() && az <= azimuth_.back(); }

double ElementPattern::gain_at(double az) const {
  if (!covers(az)) {
    std::ostringstream os;
    os << "azimuth " << rad_to_deg(az) << " deg outside the pattern of element " << index_ << " ["
       << rad_to_deg(azimuth_.front()) << ", " << rad_to_deg(azimuth_.back()) << "] deg";
    throw InterpolationRangeError(os.str());
  }
  auto hi = std::upper_bound(azimuth_.begin(), azimuth_.end(), az);
  if (hi == azimuth_.end()) return gain_.back();
  const auto k = static_cast<std::size_t>(hi - azimuth_.begin());
  const double t = (az - azimuth_[k - 1]) / (azimuth_[k] - azimuth_[k - 1]);
  return gain_[k - 1] + t * (gain_[k] - gain_[k - 1]);
}

ElementPattern ElementPattern::cosine(int index, double peak_gain_lin, double exponent, Complex s_mm,
                                      double step_deg) {
  const int steps = static_cast<int>(std::lround(180.0 / step_deg));
  std::vector<double> az, g;
  for (int k = 0; k <= steps; ++k) {
    const double deg = -90.0 + 180.0 * k / steps;
    const double c = std::max(0.0, std::cos(deg_to_rad(deg)));
    az.push_back(deg_to_rad(deg));
    g.push_back(peak_gain_lin * std::pow(c, exponent));
  }
  return ElementPattern(index, std::move(az), std::move(g), s_mm);
}

ElementPattern ElementPattern::isotropic(int index, double gain_lin, Complex s_mm) {
  return ElementPattern(index, {-kPi / 2, kPi / 2}, {gain_lin, gain_lin}, s_mm);
}

namespace {

const ElementGeometry& element_at(const Scenario& scn, std::size_t pos) {
  if (pos >= scn.elements.size())
    throw DimensionError("element position " + std::to_string(pos) + " out of range");
  return scn.elements[pos];
}

}  // namespace

double distance_to_element(const Scenario& scn, std::size_t pos, Side side) {
  const auto& e = element_at(scn, pos);
  const double r = scn.range_m;
  return std::sqrt(r * r + e.x_m * e.x_m + e.z_m * e.z_m - 2.0 * e.x_m * r * std::sin(scn.side_angle_rad(side)));
}

double azimuth_to_element(const Scenario& scn, std::size_t pos, Side side) {
  const auto& e = element_at(scn, pos);
  const double angle = scn.side_angle_rad(side);
  // Element at the origin sees the antenna exactly at the side angle.
  if (e.x_m == 0.0 && e.z_m == 0.0) return angle;
  const double d = distance_to_element(scn, pos, side);
  double s = (scn.range_m * std::sin(angle) - e.x_m) / d;
  if (std::abs(s) > 1.0 + 1e-9)
    throw GeometryError("sin of element azimuth out of range for element " + std::to_string(e.index));
  s = std::clamp(s, -1.0, 1.0);
  return std::asin(s);
}

Complex coupling_coefficient(const Scenario& scn, const ElementPattern& pat, std::size_t pos, Side side) {
  const double lambda = scn.wavelength_m();
  const double d = distance_to_element(scn, pos, side);
  const double gamma = azimuth_to_element(scn, pos, side);
  const double g_elem = pat.gain_at(gamma);
  const double mismatch = std::sqrt(std::max(0.0, 1.0 - std::norm(pat.s_mm())));
  const double electrical_len = d / lambda;
  const double mag = mismatch * std::sqrt(scn.side_gain_lin(side) * g_elem) / (4.0 * kPi * electrical_len);
  // Reduce the cycle count before scaling by 2 pi to keep the phase accurate.
  const double phase = -2.0 * kPi * (electrical_len - std::floor(electrical_len));
  return std::polar(mag, phase);
}

ScatterMatrix assemble_full_matrix(const Scenario& scn, const ScatterMatrix& ris,
                                   const std::vector<ElementPattern>& patterns) {
  if (ris.is_full_link()) throw DimensionError("assemble_full_matrix expects a RIS-only matrix");
  const std::size_t n = ris.element_count();
  const auto numbers = ris.element_numbers();
  if (n > 0) scn.validate();
  if (scn.elements.size() != n || patterns.size() != n)
    throw DimensionError("RIS matrix has " + std::to_string(n) + " ports but the scenario lists " +
                         std::to_string(scn.elements.size()) + " elements and " +
                         std::to_string(patterns.size()) + " patterns");
  for (std::size_t k = 0; k < n; ++k) {
    if (scn.elements[k].index != numbers[k] || patterns[k].index() != numbers[k])
      throw DimensionError("pattern/port misalignment at RIS port " + std::to_string(k) + ": port element " +
                           std::to_string(numbers[k]) + ", geometry element " +
                           std::to_string(scn.elements[k].index) + ", pattern element " +
                           std::to_string(patterns[k].index()));
    const auto ki = static_cast<Eigen::Index>(k);
    if (std::abs(patterns[k].s_mm() - ris(ki, ki)) > kSelfScatterTolerance)
      throw DimensionError("s_mm of pattern " + std::to_string(numbers[k]) +
                           " does not match the RIS matrix diagonal");
  }

  const auto ni = static_cast<Eigen::Index>(n);
  CMatrix s = CMatrix::Zero(ni + 2, ni + 2);
  s.block(1, 1, ni, ni) = ris.entries();
  for (std::size_t k = 0; k < n; ++k) {
    const auto p = static_cast<Eigen::Index>(k) + 1;
    const Complex tx = coupling_coefficient(scn, patterns[k], k, Side::Tx);
    const Complex rx = coupling_coefficient(scn, patterns[k], k, Side::Rx);
    s(0, p) = s(p, 0) = tx;
    s(ni + 1, p) = s(p, ni + 1) = rx;
  }

  std::vector<PortRole> roles;
  roles.reserve(n + 2);
  roles.push_back(PortRole::tx());
  for (int m : numbers) roles.push_back(PortRole::ris(m));
  roles.push_back(PortRole::rx());
  return ScatterMatrix(std::move(s), ris.freq_hz(), ris.z0_ohm(), std::move(roles));
}

ScatterMatrix synth_ris_matrix(const std::vector<ElementGeometry>& elements, double freq_hz,
                               const CouplingModel& model, double z0_ohm) {
  if (elements.empty()) throw GeometryError("synth_ris_matrix needs at least one element");
  if (!(std::abs(model.s_mm) <= 1.0)) throw ConfigError("synthetic |s_mm| must not exceed 1");
  const auto n = static_cast<Eigen::Index>(elements.size());
  const double lambda = wavelength_m(freq_hz);

  CMatrix diag = CMatrix::Zero(n, n);
  CMatrix off = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    diag(i, i) = model.s_mm;
    if (model.kind != CouplingModel::Kind::ExpDecay) continue;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = elements[static_cast<std::size_t>(i)];
      const auto& b = elements[static_cast<std::size_t>(j)];
      const double dist = std::hypot(a.x_m - b.x_m, a.z_m - b.z_m);
      const double cycles = dist / lambda;
      const Complex c = std::polar(model.c0 * std::exp(-dist / model.rolloff_m),
                                   -2.0 * kPi * (cycles - std::floor(cycles)));
      off(i, j) = off(j, i) = c;
    }
  }

  const double ceiling = std::max(kSynthSingularCeiling, std::abs(model.s_mm));
  double scale = 1.0;
  if (largest_singular_value(diag + off) > ceiling) {
    // sigma_max(D + tO) is convex in t, so the feasible set is an interval [0, t*].
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (largest_singular_value(diag + mid * off) <= ceiling ? lo : hi) = mid;
    }
    scale = lo;
  }

  std::vector<int> numbers;
  numbers.reserve(elements.size());
  for (const auto& e : elements) numbers.push_back(e.index);
  return ScatterMatrix::ris_only(diag + scale * off, freq_hz, z0_ohm, numbers);
}

std::vector<ElementGeometry> grid_layout(const GridSpec& grid) {
  if (grid.rows < 1 || grid.cols < 1) throw ConfigError("grid needs at least one row and one column");
  std::vector<ElementGeometry> out;
  out.reserve(static_cast<std::size_t>(grid.rows * grid.cols));
  const double cx = 0.5 * (grid.cols - 1);
  const double cz = 0.5 * (grid.rows - 1);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      out.push_back({r * grid.cols + c + 1, (c - cx) * grid.pitch_x_m + grid.offset_x_m,
                     (r - cz) * grid.pitch_z_m + grid.offset_z_m});
  return out;
}

double aperture_diagonal_m(const Scenario& scn) {
  if (scn.board_width_m > 0.0 && scn.board_height_m > 0.0) return std::hypot(scn.board_width_m, scn.board_height_m);
  if (scn.elements.empty()) return 0.0;
  auto [xmin, xmax] = std::minmax_element(scn.elements.begin(), scn.elements.end(),
                                          [](const auto& a, const auto& b) { return a.x_m < b.x_m; });
  auto [zmin, zmax] = std::minmax_element(scn.elements.begin(), scn.elements.end(),
                                          [](const auto& a, const auto& b) { return a.z_m < b.z_m; });
  return std::hypot(xmax->x_m - xmin->x_m, zmax->z_m - zmin->z_m);
}

double far_field_distance_m(const Scenario& scn) {
  const double d = aperture_diagonal_m(scn);
  return 2.0 * d * d / scn.wavelength_m();
}

std::vector<std::string> far_field_warnings(const Scenario& scn) {
  std::vector<std::string> out;
  const double limit = far_field_distance_m(scn);
  for (Side side : {Side::Tx, Side::Rx}) {
    double closest = std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (std::size_t k = 0; k < scn.elements.size(); ++k) {
      const double d = distance_to_element(scn, k, side);
      if (d < limit) ++count;
      closest = std::min(closest, d);
    }
    if (count == 0) continue;
    std::ostringstream os;
    os << (side == Side::Tx ? "Tx" : "Rx") << ": " << count << " element(s) closer than the far-field distance "
       << limit << " m (closest " << closest << " m)";
    out.push_back(os.str());
  }
  return out;
}

}  // namespace rislink
