#include "rislink/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "rislink/error.hpp"
#include "rislink/parallel.hpp"
#include "rislink/units.hpp"

namespace rislink {

void LoadBounds::validate() const {
  if (!(c_min_f > 0.0) || !(c_min_f < c_max_f) || !std::isfinite(c_max_f)) {
    std::ostringstream os;
    os << "invalid capacitance bounds [" << c_min_f << ", " << c_max_f << "] F: need 0 < c_min < c_max";
    throw ConfigError(os.str());
  }
}

double LoadBounds::clamp(double c_f) const noexcept { return std::clamp(c_f, c_min_f, c_max_f); }

namespace {

Complex load_impedance(double c_f, double freq_hz, const VaractorModel& model) {
  const double w = 2.0 * kPi * freq_hz;
  return {model.series_resistance_ohm, w * model.series_inductance_h - 1.0 / (w * c_f)};
}

}  // namespace

Complex cap_to_gamma(double c_f, double freq_hz, double z0_ohm, const VaractorModel& model) {
  const Complex z = load_impedance(c_f, freq_hz, model);
  return (z - z0_ohm) / (z + z0_ohm);
}

Complex cap_to_gamma_derivative(double c_f, double freq_hz, double z0_ohm, const VaractorModel& model) {
  const Complex z = load_impedance(c_f, freq_hz, model);
  const double w = 2.0 * kPi * freq_hz;
  const Complex dz_dc(0.0, 1.0 / (w * c_f * c_f));
  return 2.0 * z0_ohm / ((z + z0_ohm) * (z + z0_ohm)) * dz_dc;
}

ReflectionVector caps_to_reflections(const LoadVector& caps, double freq_hz, double z0_ohm,
                                     const VaractorModel& model) {
  std::vector<Complex> g;
  g.reserve(caps.size());
  for (double c : caps.caps_f) g.push_back(cap_to_gamma(c, freq_hz, z0_ohm, model));
  return ReflectionVector(std::move(g));
}

double objective(const ScatterMatrix& full, const LoadVector& caps, const LoadBounds& bounds,
                 const VaractorModel& model) {
  for (std::size_t m = 0; m < caps.size(); ++m)
    if (!bounds.contains(caps.caps_f[m]))
      throw ConfigError("capacitance of element position " + std::to_string(m) + " outside bounds");
  return power_transfer(reduce_loaded(full, caps_to_reflections(caps, full.freq_hz(), full.z0_ohm(), model)));
}

std::vector<double> objective_gradient(const ScatterMatrix& full, const LoadVector& caps,
                                       const VaractorModel& model) {
  const LinkReducer reducer(full);
  const auto gammas = caps_to_reflections(caps, full.freq_hz(), full.z0_ohm(), model).gammas;
  std::vector<Complex> ds;
  const Complex s = reducer.transfer_with_gradient(gammas, ds);
  std::vector<double> grad(caps.size());
  for (std::size_t m = 0; m < caps.size(); ++m) {
    const Complex dg = cap_to_gamma_derivative(caps.caps_f[m], full.freq_hz(), full.z0_ohm(), model);
    grad[m] = 2.0 * std::real(std::conj(s) * ds[m] * dg);
  }
  return grad;
}

namespace {

using Point = std::vector<double>;  // normalized coordinates in [0, 1]^N

class Problem {
 public:
  Problem(const ScatterMatrix& full, const LoadBounds& bounds, const VaractorModel& model)
      : reducer_(full), freq_(full.freq_hz()), z0_(full.z0_ohm()), bounds_(bounds), model_(model) {}

  std::size_t dim() const { return reducer_.element_count(); }

  double cap(double u) const { return bounds_.c_min_f + std::clamp(u, 0.0, 1.0) * (bounds_.c_max_f - bounds_.c_min_f); }
  double unit(double c) const { return (bounds_.clamp(c) - bounds_.c_min_f) / (bounds_.c_max_f - bounds_.c_min_f); }

  LoadVector caps(const Point& u) const {
    LoadVector lv;
    lv.caps_f.reserve(u.size());
    for (double x : u) lv.caps_f.push_back(cap(x));
    return lv;
  }

  double value(const Point& u) const {
    std::vector<Complex> g(u.size());
    for (std::size_t m = 0; m < u.size(); ++m) g[m] = cap_to_gamma(cap(u[m]), freq_, z0_, model_);
    return std::norm(reducer_.transfer(g));
  }

  /// Gradient with respect to the normalized coordinates.
  double value_and_gradient(const Point& u, Point& grad) const {
    std::vector<Complex> g(u.size());
    for (std::size_t m = 0; m < u.size(); ++m) g[m] = cap_to_gamma(cap(u[m]), freq_, z0_, model_);
    std::vector<Complex> ds;
    const Complex s = reducer_.transfer_with_gradient(g, ds);
    grad.resize(u.size());
    const double span = bounds_.c_max_f - bounds_.c_min_f;
    for (std::size_t m = 0; m < u.size(); ++m)
      grad[m] = 2.0 * std::real(std::conj(s) * ds[m] * cap_to_gamma_derivative(cap(u[m]), freq_, z0_, model_)) * span;
    return std::norm(s);
  }

  const LinkReducer& reducer() const { return reducer_; }

 private:
  LinkReducer reducer_;
  double freq_;
  double z0_;
  LoadBounds bounds_;
  VaractorModel model_;
};

void project(Point& p) {
  for (double& x : p) x = std::clamp(x, 0.0, 1.0);
}

class Search {
 public:
  Search(const Problem& prob, StartResult& out) : prob_(prob), out_(out) {}

  double eval(const Point& u) {
    ++out_.evaluations;
    const double v = prob_.value(u);
    if (v > best_val_) {
      best_val_ = v;
      best_ = u;
    }
    return v;
  }

  void record() { out_.trace.push_back(best_val_); }

  // Bounded Nelder-Mead on -f with box projection. Returns once the
  // objective spread falls below tol or the evaluation budget is spent.
  void nelder_mead(const Point& x0, int budget_end, double tol) {
    const std::size_t n = x0.size();
    const double step = 0.1;
    std::vector<Point> simplex(n + 1, x0);
    std::vector<double> val(n + 1);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += (x0[i] + step <= 1.0) ? step : -step;
    for (std::size_t i = 0; i <= n; ++i) {
      project(simplex[i]);
      val[i] = -eval(simplex[i]);
    }
    std::vector<std::size_t> order(n + 1);
    while (out_.evaluations < budget_end) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
      const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
      record();
      if (val[worst] - val[best] < tol) break;

      Point c(n, 0.0);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) c[i] += simplex[order[k]][i] / static_cast<double>(n);

      auto along = [&](double t, const Point& from) {
        Point p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = c[i] + t * (from[i] - c[i]);
        project(p);
        return p;
      };

      Point xr = along(-1.0, simplex[worst]);
      const double fr = -eval(xr);
      if (fr < val[best]) {
        Point xe = along(2.0, xr);
        const double fe = -eval(xe);
        if (fe < fr) {
          simplex[worst] = std::move(xe);
          val[worst] = fe;
        } else {
          simplex[worst] = std::move(xr);
          val[worst] = fr;
        }
      } else if (fr < val[second]) {
        simplex[worst] = std::move(xr);
        val[worst] = fr;
      } else {
        const bool outside = fr < val[worst];
        Point xc = outside ? along(0.5, xr) : along(0.5, simplex[worst]);
        const double fc = -eval(xc);
        if (fc < std::min(fr, val[worst])) {
          simplex[worst] = std::move(xc);
          val[worst] = fc;
        } else {
          for (std::size_t k = 1; k <= n; ++k) {
            Point& p = simplex[order[k]];
            for (std::size_t i = 0; i < n; ++i) p[i] = simplex[best][i] + 0.5 * (p[i] - simplex[best][i]);
            val[order[k]] = -eval(p);
          }
        }
      }
    }
  }

  // Coordinate-wise refinement: coarse scan of each coordinate over the
  // whole range, then golden-section around the best sample.
  void polish() {
    constexpr int kScan = 32;
    constexpr double kInvPhi = 0.6180339887498949;
    for (int sweep = 0; sweep < 30; ++sweep) {
      const double before = best_val_;
      for (std::size_t m = 0; m < best_.size(); ++m) {
        Point p = best_;
        double best_u = best_[m];
        double best_f = best_val_;
        // Full-range scan on the first sweep only; later sweeps refine locally.
        for (int k = 0; sweep == 0 && k <= kScan; ++k) {
          p[m] = static_cast<double>(k) / kScan;
          const double f = eval(p);
          if (f > best_f) {
            best_f = f;
            best_u = p[m];
          }
        }
        double a = std::max(0.0, best_u - 1.0 / kScan), b = std::min(1.0, best_u + 1.0 / kScan);
        double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
        p[m] = x1;
        double f1 = eval(p);
        p[m] = x2;
        double f2 = eval(p);
        while (b - a > 1e-12) {
          if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            p[m] = x1;
            f1 = eval(p);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            p[m] = x2;
            f2 = eval(p);
          }
        }
      }
      record();
      if (best_val_ - before <= 1e-12 * best_val_) break;
    }
  }

  // Projected gradient ascent with backtracking.
  void gradient_refine() {
    Point grad;
    for (int it = 0; it < 200; ++it) {
      ++out_.evaluations;
      const double f0 = prob_.value_and_gradient(best_, grad);
      double gmax = 0.0;
      for (double g : grad) gmax = std::max(gmax, std::abs(g));
      if (gmax == 0.0) break;
      double step = 0.05 / gmax;
      bool improved = false;
      for (int ls = 0; ls < 40 && !improved; ++ls, step *= 0.5) {
        Point p = best_;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += step * grad[i];
        project(p);
        if (eval(p) > f0) improved = true;
      }
      record();
      if (!improved || best_val_ - f0 <= 1e-16 * std::max(1.0, f0)) break;
    }
  }

  void seed_best(const Point& u, double v) {
    best_ = u;
    best_val_ = v;
  }
  const Point& best() const { return best_; }
  double best_value() const { return best_val_; }

 private:
  const Problem& prob_;
  StartResult& out_;
  Point best_;
  double best_val_ = -std::numeric_limits<double>::infinity();
};

Point random_point(std::size_t n, std::uint64_t seed, std::size_t start) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(start)};
  std::mt19937_64 rng(seq);
  Point p(n);
  for (double& x : p) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return p;
}

}  // namespace

OptimizeResult optimize(const ScatterMatrix& full, const LoadBounds& bounds, const VaractorModel& model,
                        const OptimizerOptions& opts, const std::optional<LoadVector>& first_start) {
  bounds.validate();
  if (!full.is_full_link()) throw DimensionError("optimize needs a full Tx/RIS/Rx link");
  const Problem prob(full, bounds, model);
  const std::size_t n = prob.dim();
  if (n == 0) throw UnoptimizableError("unoptimizable: the link has no RIS elements");
  if (prob.reducer().tx_column().isZero(0.0) || prob.reducer().rx_row().isZero(0.0))
    throw UnoptimizableError("unoptimizable: no Tx or Rx coupling through the surface");
  if (opts.starts < 1) throw ConfigError("optimizer needs at least one start");
  if (first_start && first_start->size() != n)
    throw DimensionError("initial load vector length does not match the RIS port count");

  const auto starts = static_cast<std::size_t>(opts.starts);
  std::vector<StartResult> results(starts);
  parallel_for(starts, opts.threads, [&](std::size_t k) {
    StartResult& r = results[k];
    Point x0;
    if (k == 0) {
      x0.assign(n, 0.5);
      if (first_start)
        for (std::size_t i = 0; i < n; ++i) x0[i] = prob.unit(first_start->caps_f[i]);
    } else {
      x0 = random_point(n, opts.seed, k);
    }
    r.initial = prob.caps(x0);

    Search search(prob, r);
    r.initial_objective = search.eval(x0);
    search.record();
    const int budget_end = opts.max_evals;
    while (r.evaluations < budget_end) {
      const double before = search.best_value();
      search.nelder_mead(search.best(), budget_end, opts.spread_tol);
      if (search.best_value() - before <= 1e-13 * std::max(1.0, before)) break;
    }
    if (opts.polish) search.polish();
    if (opts.gradient_refine) search.gradient_refine();
    r.caps = prob.caps(search.best());
    for (std::size_t i = 0; i < n; ++i) r.caps.caps_f[i] = bounds.clamp(r.caps.caps_f[i]);
    r.objective = search.best_value();
  });

  OptimizeResult out;
  out.starts = std::move(results);
  for (std::size_t k = 0; k < starts; ++k) {
    out.evaluations += out.starts[k].evaluations;
    if (k == 0 || out.starts[k].objective > out.objective) {
      out.objective = out.starts[k].objective;
      out.best_start = k;
    }
  }
  out.caps = out.starts[out.best_start].caps;
  for (double c : out.caps.caps_f)
    if (!bounds.contains(c)) throw Error("internal: optimizer produced a capacitance outside bounds");
  return out;
}

namespace {

// Reflection phase over the tuning range, sampled and unwrapped.
struct PhaseArc {
  std::vector<double> caps;
  std::vector<double> phase;  // unwrapped
  double lo = 0.0, span = 0.0;
};

PhaseArc phase_arc(const LoadBounds& b, double f, double z0, const VaractorModel& model) {
  constexpr int kSamples = 2048;
  PhaseArc arc;
  for (int k = 0; k <= kSamples; ++k) {
    const double c = b.c_min_f + (b.c_max_f - b.c_min_f) * k / kSamples;
    double ph = std::arg(cap_to_gamma(c, f, z0, model));
    if (!arc.phase.empty()) ph = arc.phase.back() + wrap_phase(ph - arc.phase.back());
    arc.caps.push_back(c);
    arc.phase.push_back(ph);
  }
  const auto [mn, mx] = std::minmax_element(arc.phase.begin(), arc.phase.end());
  arc.lo = *mn;
  arc.span = *mx - *mn;
  return arc;
}

// Distance from a target phase to the achievable arc (0 inside) and, for
// targets inside, the margin to the nearest arc end.
std::pair<double, double> arc_distance(const PhaseArc& arc, double target) {
  if (arc.span >= 2.0 * kPi) return {0.0, kPi};
  double d = std::fmod(target - arc.lo, 2.0 * kPi);
  if (d < 0) d += 2.0 * kPi;
  if (d <= arc.span) return {0.0, std::min(d, arc.span - d)};
  return {std::min(d - arc.span, 2.0 * kPi - d), 0.0};
}

double cap_for_phase(const PhaseArc& arc, double target, double f, double z0, const VaractorModel& model) {
  auto err = [&](double c) { return std::abs(wrap_phase(std::arg(cap_to_gamma(c, f, z0, model)) - target)); };
  std::size_t best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < arc.caps.size(); ++k) {
    const double e = std::abs(wrap_phase(arc.phase[k] - target));
    if (e < best_err) {
      best_err = e;
      best = k;
    }
  }
  double a = arc.caps[best == 0 ? 0 : best - 1];
  double b = arc.caps[std::min(best + 1, arc.caps.size() - 1)];
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
  double f1 = err(x1), f2 = err(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-9 * arc.caps.back(); ++it) {
    if (f1 < f2) {
      b = x2, x2 = x1, f2 = f1, x1 = b - kInvPhi * (b - a), f1 = err(x1);
    } else {
      a = x1, x1 = x2, f1 = f2, x2 = a + kInvPhi * (b - a), f2 = err(x2);
    }
  }
  const double c = 0.5 * (a + b);
  return err(c) <= best_err ? c : arc.caps[best];
}

}  // namespace

LoadVector phase_gradient_seed(const Scenario& scn, const LoadBounds& bounds, const VaractorModel& model,
                               double z0_ohm) {
  scn.validate();
  bounds.validate();
  const double lambda = scn.wavelength_m();
  const std::size_t n = scn.elements.size();
  std::vector<double> path_phase(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double cycles = (distance_to_element(scn, m, Side::Tx) + distance_to_element(scn, m, Side::Rx)) / lambda;
    path_phase[m] = 2.0 * kPi * (cycles - std::floor(cycles));
  }

  const PhaseArc arc = phase_arc(bounds, scn.freq_hz, z0_ohm, model);
  // Common offset: least total shortfall outside the arc, then the largest
  // worst-case margin inside it.
  constexpr int kOffsets = 720;
  double best_offset = 0.0, best_cost = std::numeric_limits<double>::infinity(), best_margin = -1.0;
  for (int k = 0; k < kOffsets; ++k) {
    const double offset = 2.0 * kPi * k / kOffsets;
    double cost = 0.0, margin = std::numeric_limits<double>::infinity();
    for (double p : path_phase) {
      const auto [outside, inside] = arc_distance(arc, offset + p);
      cost += outside;
      margin = std::min(margin, inside);
    }
    if (cost < best_cost - 1e-12 || (std::abs(cost - best_cost) <= 1e-12 && margin > best_margin + 1e-12)) {
      best_cost = cost;
      best_margin = margin;
      best_offset = offset;
    }
  }

  LoadVector out;
  out.caps_f.reserve(n);
  for (double p : path_phase)
    out.caps_f.push_back(bounds.clamp(cap_for_phase(arc, best_offset + p, scn.freq_hz, z0_ohm, model)));
  return out;
}

}  // namespace rislink
