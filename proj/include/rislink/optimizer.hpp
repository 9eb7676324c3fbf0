#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rislink/geometry.hpp"
#include "rislink/network.hpp"

namespace rislink {

/// Varactor tuning range in farads.
struct LoadBounds {
  double c_min_f = 0.23e-12;
  double c_max_f = 2.1e-12;

  /// Throws ConfigError unless 0 < c_min < c_max.
  void validate() const;
  bool contains(double c_f) const noexcept { return c_f >= c_min_f && c_f <= c_max_f; }
  double clamp(double c_f) const noexcept;
};

/// Series R-L parasitics of the varactor. Defaults are ideal.
struct VaractorModel {
  double series_resistance_ohm = 0.0;
  double series_inductance_h = 0.0;
};

/// One capacitance per RIS element, in RIS port order.
struct LoadVector {
  std::vector<double> caps_f;

  std::size_t size() const noexcept { return caps_f.size(); }
  friend bool operator==(const LoadVector&, const LoadVector&) = default;
};

/// Reflection coefficient of the varactor termination, Z_L = R_s + j(wL_s - 1/(wC)).
Complex cap_to_gamma(double c_f, double freq_hz, double z0_ohm, const VaractorModel& model = {});
/// d gamma / d C.
Complex cap_to_gamma_derivative(double c_f, double freq_hz, double z0_ohm, const VaractorModel& model = {});

ReflectionVector caps_to_reflections(const LoadVector& caps, double freq_hz, double z0_ohm,
                                     const VaractorModel& model = {});

/// Matched Tx -> Rx power transfer of `full` loaded by `caps`.
double objective(const ScatterMatrix& full, const LoadVector& caps, const LoadBounds& bounds,
                 const VaractorModel& model = {});

/// d objective / d C_m in 1/F, analytic.
std::vector<double> objective_gradient(const ScatterMatrix& full, const LoadVector& caps,
                                       const VaractorModel& model = {});

struct OptimizerOptions {
  int starts = 8;
  int max_evals = 2000;  // simplex evaluations per start
  std::uint64_t seed = 1;
  bool polish = true;            // coordinate-wise golden-section refinement
  bool gradient_refine = false;  // projected-gradient ascent after polish
  unsigned threads = 1;          // worker threads for multi-start
  double spread_tol = 1e-10;     // simplex objective spread stopping rule
};

struct StartResult {
  LoadVector initial;
  double initial_objective = 0.0;
  LoadVector caps;
  double objective = 0.0;
  int evaluations = 0;
  std::vector<double> trace;  // best-so-far objective per iteration
};

struct OptimizeResult {
  LoadVector caps;
  double objective = 0.0;
  std::size_t best_start = 0;
  int evaluations = 0;
  std::vector<StartResult> starts;
};

/// Multi-start bounded simplex search for the capacitances maximizing
/// objective(). Start 0 is `first_start` (bounds midpoint when absent), the
/// remaining starts are uniform random draws from `opts.seed`. The result
/// is deterministic for fixed options and independent of `opts.threads`.
///
/// Throws UnoptimizableError when the link has no Tx or no Rx coupling.
OptimizeResult optimize(const ScatterMatrix& full, const LoadBounds& bounds, const VaractorModel& model,
                        const OptimizerOptions& opts, const std::optional<LoadVector>& first_start = {});

/// Capacitances whose load reflection phase compensates each element's
/// Tx -> element -> Rx path phase, nearest achievable within bounds.
LoadVector phase_gradient_seed(const Scenario& scn, const LoadBounds& bounds, const VaractorModel& model = {},
                               double z0_ohm = 50.0);

}  // namespace rislink
