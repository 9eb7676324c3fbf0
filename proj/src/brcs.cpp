#include "rislink/brcs.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rislink/error.hpp"
#include "rislink/parallel.hpp"
#include "rislink/units.hpp"

namespace rislink {

double brcs_from_coupling(Complex s_rx_tx, double d_tx_m, double d_rx_m, double g_tx_lin, double g_rx_lin,
                          double lambda_m) {
  const double four_pi_cubed = std::pow(4.0 * kPi, 3);
  return four_pi_cubed * d_tx_m * d_tx_m * d_rx_m * d_rx_m * std::norm(s_rx_tx) /
         (g_tx_lin * g_rx_lin * lambda_m * lambda_m);
}

double radar_equation_power_ratio(double sigma_m2, double d_tx_m, double d_rx_m, double g_tx_lin, double g_rx_lin,
                                  double lambda_m) {
  return g_tx_lin * g_rx_lin * lambda_m * lambda_m * sigma_m2 /
         (std::pow(4.0 * kPi, 3) * d_tx_m * d_tx_m * d_rx_m * d_rx_m);
}

double to_dbsm(double sigma_m2) {
  if (!(sigma_m2 > 0.0)) return kDbsmFloor;
  return std::max(kDbsmFloor, 10.0 * std::log10(sigma_m2));
}

std::uint64_t load_hash(const LoadVector& caps) {
  std::uint64_t h = 1469598103934665603ull;
  for (double c : caps.caps_f) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &c, sizeof c);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

namespace {

void require_increasing(const std::vector<double>& alphas) {
  for (std::size_t k = 1; k < alphas.size(); ++k)
    if (!(alphas[k] > alphas[k - 1])) throw DimensionError("alpha grid must be strictly increasing");
}

}  // namespace

BrcsCurve sweep_rx_angle(const Scenario& scn, const ScatterMatrix& ris, const std::vector<ElementPattern>& patterns,
                         const LoadVector& caps, const std::vector<double>& alphas, const VaractorModel& model,
                         unsigned threads) {
  if (alphas.empty()) throw ConfigError("empty alpha grid");
  require_increasing(alphas);
  if (caps.size() != ris.element_count())
    throw DimensionError("load vector length does not match the RIS port count");
  const ReflectionVector loads = caps_to_reflections(caps, ris.freq_hz(), ris.z0_ohm(), model);
  const double lambda = scn.wavelength_m();

  BrcsCurve curve;
  curve.label = "ris";
  curve.alpha_rad = alphas;
  curve.sigma_dbsm.assign(alphas.size(), kDbsmFloor);
  curve.fingerprint = {scn.beta_rad, scn.range_m, scn.freq_hz, load_hash(caps)};

  parallel_for(alphas.size(), threads, [&](std::size_t k) {
    Scenario at = scn;
    at.alpha_rad = alphas[k];
    const ScatterMatrix full = assemble_full_matrix(at, ris, patterns);
    const Complex s21 = LinkReducer(full).transfer(loads);
    curve.sigma_dbsm[k] =
        to_dbsm(brcs_from_coupling(s21, scn.range_m, scn.range_m, scn.gain_tx_lin, scn.gain_rx_lin, lambda));
  });
  return curve;
}

double flat_reflector_sigma(double width_m, double height_m, double lambda_m, double beta_rad, double alpha_rad) {
  const double area = width_m * height_m;
  const double k = 2.0 * kPi / lambda_m;
  const double x = 0.5 * k * width_m * (std::sin(alpha_rad) - std::sin(beta_rad));
  const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
  const double proj = area * std::cos(beta_rad);
  return 4.0 * kPi * proj * proj / (lambda_m * lambda_m) * sinc * sinc;
}

BrcsCurve flat_reflector_reference(double width_m, double height_m, double lambda_m, double beta_rad,
                                   const std::vector<double>& alphas) {
  if (!(width_m > 0.0) || !(height_m > 0.0)) throw ConfigError("reflector dimensions must be positive");
  if (alphas.empty()) throw ConfigError("empty alpha grid");
  require_increasing(alphas);
  BrcsCurve curve;
  curve.label = "reflector";
  curve.alpha_rad = alphas;
  curve.fingerprint = {beta_rad, 0.0, kSpeedOfLight / lambda_m, 0};
  curve.sigma_dbsm.reserve(alphas.size());
  for (double a : alphas) curve.sigma_dbsm.push_back(to_dbsm(flat_reflector_sigma(width_m, height_m, lambda_m, beta_rad, a)));
  return curve;
}

std::string format_csv(const std::vector<BrcsCurve>& curves) {
  if (curves.empty()) throw DimensionError("no curves to export");
  for (const auto& c : curves)
    if (c.alpha_rad != curves.front().alpha_rad || c.sigma_dbsm.size() != c.alpha_rad.size())
      throw DimensionError("curves must share the same alpha grid");
  std::string out = "alpha_deg";
  for (const auto& c : curves) out += "," + c.label + "_dbsm";
  out += "\n";
  char buf[32];
  for (std::size_t k = 0; k < curves.front().alpha_rad.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.6g", rad_to_deg(curves.front().alpha_rad[k]));
    out += buf;
    for (const auto& c : curves) {
      std::snprintf(buf, sizeof buf, ",%.6g", c.sigma_dbsm[k]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void export_csv(const std::vector<BrcsCurve>& curves, const std::filesystem::path& path) {
  const std::string text = format_csv(curves);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write BRCS CSV '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw Error("write failed for BRCS CSV '" + path.string() + "'");
}

std::vector<BrcsCurve> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty BRCS CSV", 1);
  std::vector<std::string> cols;
  {
    std::istringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  if (cols.size() < 2 || cols.front() != "alpha_deg") throw ParseError("BRCS CSV header must start with alpha_deg", 1);
  std::vector<BrcsCurve> curves(cols.size() - 1);
  for (std::size_t i = 1; i < cols.size(); ++i) {
    std::string label = cols[i];
    if (label.size() > 5 && label.compare(label.size() - 5, 5, "_dbsm") == 0) label.resize(label.size() - 5);
    curves[i - 1].label = label;
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("invalid number '" + cell + "'", line_no);
      }
    }
    if (v.size() != cols.size()) throw ParseError("wrong column count", line_no);
    for (std::size_t i = 1; i < v.size(); ++i) {
      curves[i - 1].alpha_rad.push_back(deg_to_rad(v[0]));
      curves[i - 1].sigma_dbsm.push_back(v[i]);
    }
  }
  return curves;
}

std::vector<BrcsCurve> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open BRCS CSV '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace rislink
