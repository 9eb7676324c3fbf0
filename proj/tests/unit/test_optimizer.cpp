#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rislink/error.hpp"
#include "rislink/optimizer.hpp"
#include "rislink/units.hpp"

using namespace rislink;

namespace {

constexpr double kF = 3.55e9;

ScatterMatrix link_from(const CMatrix& s) {
  std::vector<PortRole> roles{PortRole::tx()};
  for (int m = 1; m + 1 < s.rows(); ++m) roles.push_back(PortRole::ris(m));
  roles.push_back(PortRole::rx());
  return ScatterMatrix(s, kF, 50.0, roles);
}

// Hand-evaluated varactor reflection for the ideal model.
Complex ideal_gamma(double c) {
  const Complex z(0.0, -1.0 / (2.0 * oracle::kPi * kF * c));
  return (z - 50.0) / (z + 50.0);
}

// |S21|^2 of a loaded 1- or 2-element link, written out by hand.
double closed_form_objective(const CMatrix& s, const std::vector<double>& caps) {
  const auto n = static_cast<Eigen::Index>(caps.size());
  const Eigen::Index rx = n + 1;
  if (n == 1) {
    const Complex g = ideal_gamma(caps[0]);
    return std::norm(s(rx, 1) * g / (1.0 - s(1, 1) * g) * s(1, 0));
  }
  const Complex g1 = ideal_gamma(caps[0]), g2 = ideal_gamma(caps[1]);
  // (I - S_ii G)^-1 for 2x2.
  const Complex a = 1.0 - s(1, 1) * g1, b = -s(1, 2) * g2, c = -s(2, 1) * g1, d = 1.0 - s(2, 2) * g2;
  const Complex det = a * d - b * c;
  const Complex v1 = (d * s(1, 0) - b * s(2, 0)) / det;
  const Complex v2 = (-c * s(1, 0) + a * s(2, 0)) / det;
  return std::norm(s(rx, 0) + s(rx, 1) * g1 * v1 + s(rx, 2) * g2 * v2);
}

struct GridBest {
  double value = -1.0;
  std::vector<double> caps;
};

GridBest grid_search(const CMatrix& s, const LoadBounds& b, int per_axis, int dims) {
  GridBest best;
  auto cap = [&](int k) { return b.c_min_f + (b.c_max_f - b.c_min_f) * k / (per_axis - 1); };
  if (dims == 1) {
    for (int i = 0; i < per_axis; ++i) {
      const double v = closed_form_objective(s, {cap(i)});
      if (v > best.value) best = {v, {cap(i)}};
    }
  } else {
    for (int i = 0; i < per_axis; ++i)
      for (int j = 0; j < per_axis; ++j) {
        const double v = closed_form_objective(s, {cap(i), cap(j)});
        if (v > best.value) best = {v, {cap(i), cap(j)}};
      }
  }
  return best;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("varactor reflection coefficient") {
  const Complex g = cap_to_gamma(1e-12, kF, 50.0);
  CHECK(g.real() == doctest::Approx(-0.10866167164928699).epsilon(1e-12));
  CHECK(g.imag() == doctest::Approx(-0.9940787901944104).epsilon(1e-12));
  CHECK(std::abs(g) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(cap_to_gamma(1.0, kF, 50.0) - Complex(-1.0)) < 1e-9);
  CHECK(std::abs(cap_to_gamma(1e-18, kF, 50.0) - Complex(1.0)) < 1e-4);
  // Series resistance pulls the load inside the unit circle.
  CHECK(std::abs(cap_to_gamma(1e-12, kF, 50.0, {2.0, 0.0})) < 1.0);
}

TEST_CASE("reflection phase decreases monotonically with capacitance") {
  const LoadBounds b;
  double prev = std::arg(cap_to_gamma(b.c_min_f, kF, 50.0));
  for (int k = 1; k <= 1000; ++k) {
    const double c = b.c_min_f + (b.c_max_f - b.c_min_f) * k / 1000.0;
    const double ph = prev + wrap_phase(std::arg(cap_to_gamma(c, kF, 50.0)) - prev);
    CHECK(ph < prev);
    prev = ph;
  }
}

TEST_CASE("reflection derivative matches differences") {
  const VaractorModel m{1.0, 0.5e-9};
  for (double c : {0.3e-12, 1e-12, 2e-12}) {
    const double h = 1e-6 * c;
    const Complex fd = (cap_to_gamma(c + h, kF, 50.0, m) - cap_to_gamma(c - h, kF, 50.0, m)) / (2.0 * h);
    CHECK(oracle::rel_err(cap_to_gamma_derivative(c, kF, 50.0, m), fd) < 1e-8);
  }
}

TEST_CASE("bounds") {
  CHECK_NOTHROW(LoadBounds{}.validate());
  CHECK_THROWS_AS((LoadBounds{2e-12, 1e-12}.validate()), ConfigError);
  CHECK_THROWS_AS((LoadBounds{0.0, 1e-12}.validate()), ConfigError);
  CHECK(LoadBounds{}.clamp(5e-12) == 2.1e-12);
}

TEST_CASE("objective equals the hand-written reduction") {
  std::mt19937_64 rng(41);
  const CMatrix s1 = oracle::random_link(1, 0.95, rng);
  const CMatrix s2 = oracle::random_link(2, 0.95, rng);
  const LoadBounds b;
  for (double c : {0.23e-12, 0.9e-12, 2.1e-12}) {
    CHECK(oracle::rel_err(objective(link_from(s1), {{c}}, b), closed_form_objective(s1, {c})) < 1e-12);
    CHECK(oracle::rel_err(objective(link_from(s2), {{c, 2.33e-12 - c}}, b),
                          closed_form_objective(s2, {c, 2.33e-12 - c})) < 1e-12);
  }
  CHECK_THROWS_AS(objective(link_from(s1), {{3e-12}}, b), ConfigError);

  // Grid argmax evaluated through the library gives the same number.
  const auto g = grid_search(s1, b, 10000, 1);
  CHECK(objective(link_from(s1), {g.caps}, b) == doctest::Approx(g.value).epsilon(1e-13));
}

TEST_CASE("objective ignores a global phase on the Tx couplings") {
  std::mt19937_64 rng(43);
  CMatrix s = oracle::random_link(4, 0.9, rng);
  const LoadVector caps{{0.5e-12, 1e-12, 1.5e-12, 2e-12}};
  const double before = objective(link_from(s), caps, LoadBounds{});
  const Complex rot = std::polar(1.0, 1.234);
  s.row(0) *= rot;
  s.col(0) *= rot;
  s(0, 0) = 0.0;
  CHECK(oracle::rel_err(objective(link_from(s), caps, LoadBounds{}), before) < 1e-12);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(47);
  const CMatrix s = oracle::random_link(5, 0.9, rng);
  const auto full = link_from(s);
  const LoadBounds b;
  const VaractorModel model{0.5, 0.3e-9};
  std::uniform_real_distribution<double> u(0.05, 0.95), dir(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    LoadVector c;
    std::vector<double> v(5);
    for (int m = 0; m < 5; ++m) {
      c.caps_f.push_back(b.c_min_f + u(rng) * (b.c_max_f - b.c_min_f));
      v[m] = dir(rng);
    }
    const auto g = objective_gradient(full, c, model);
    LoadVector plus = c, minus = c;
    double analytic = 0.0;
    for (int m = 0; m < 5; ++m) {
      const double h = 1e-6 * c.caps_f[m] * v[m];
      plus.caps_f[m] += h;
      minus.caps_f[m] -= h;
      analytic += g[m] * h;
    }
    const double fd = 0.5 * (objective(full, plus, b, model) - objective(full, minus, b, model));
    CHECK(oracle::rel_err(analytic, fd) < 1e-4);
  }
}

TEST_CASE("single element reaches the fine grid optimum") {
  std::mt19937_64 rng(53);
  const LoadBounds b;
  OptimizerOptions opts;
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix s = oracle::random_link(1, 0.95, rng);
    const auto grid = grid_search(s, b, 100000, 1);
    const auto r = optimize(link_from(s), b, {}, opts);
    CHECK(r.objective >= grid.value - 1e-8);
    CHECK(closed_form_objective(s, r.caps.caps_f) >= grid.value - 1e-8);
  }
}

TEST_CASE("two elements reach the grid optimum") {
  std::mt19937_64 rng(59);
  const LoadBounds b;
  OptimizerOptions opts;
  for (int trial = 0; trial < 3; ++trial) {
    const CMatrix s = oracle::random_link(2, 0.95, rng);
    const auto grid = grid_search(s, b, 300, 2);
    const auto r = optimize(link_from(s), b, {}, opts);
    CHECK(r.objective >= grid.value - 1e-6);
  }
}

TEST_CASE("result respects bounds, beats every start and has monotone traces") {
  std::mt19937_64 rng(61);
  const CMatrix s = oracle::random_link(6, 0.9, rng);
  const LoadBounds b{0.5e-12, 1.2e-12};
  OptimizerOptions opts;
  opts.starts = 4;
  opts.max_evals = 400;
  opts.gradient_refine = true;
  const auto r = optimize(link_from(s), b, {}, opts);
  for (double c : r.caps.caps_f) CHECK(b.contains(c));
  CHECK(r.starts.size() == 4);
  int evals = 0;
  for (const auto& st : r.starts) {
    CHECK(r.objective >= st.initial_objective);
    CHECK(r.objective >= st.objective);
    for (double c : st.initial.caps_f) CHECK(b.contains(c));
    for (std::size_t k = 1; k < st.trace.size(); ++k) CHECK(st.trace[k] >= st.trace[k - 1]);
    CHECK(st.trace.back() == st.objective);
    evals += st.evaluations;
  }
  CHECK(evals == r.evaluations);
  CHECK(r.objective == r.starts[r.best_start].objective);
  CHECK(oracle::rel_err(objective(link_from(s), r.caps, b), r.objective) < 1e-12);
}

TEST_CASE("optimization is reproducible and thread-count independent") {
  std::mt19937_64 rng(67);
  const CMatrix s = oracle::random_link(5, 0.9, rng);
  OptimizerOptions opts;
  opts.starts = 5;
  opts.max_evals = 300;
  const auto a = optimize(link_from(s), LoadBounds{}, {}, opts);
  const auto b = optimize(link_from(s), LoadBounds{}, {}, opts);
  opts.threads = 3;
  const auto c = optimize(link_from(s), LoadBounds{}, {}, opts);
  CHECK(a.caps == b.caps);
  CHECK(a.caps == c.caps);
  CHECK(a.objective == c.objective);
  opts.seed = 2;
  const auto d = optimize(link_from(s), LoadBounds{}, {}, opts);
  CHECK(d.starts[1].initial != a.starts[1].initial);
  CHECK(d.starts[0].initial == a.starts[0].initial);
}

TEST_CASE("first start comes from the caller") {
  std::mt19937_64 rng(71);
  const CMatrix s = oracle::random_link(3, 0.9, rng);
  OptimizerOptions opts;
  opts.starts = 1;
  const LoadVector seed{{0.3e-12, 0.7e-12, 1.9e-12}};
  const auto r = optimize(link_from(s), LoadBounds{}, {}, opts, seed);
  for (int m = 0; m < 3; ++m)
    CHECK(r.starts[0].initial.caps_f[m] == doctest::Approx(seed.caps_f[m]).epsilon(1e-12));
  CHECK_THROWS_AS(optimize(link_from(s), LoadBounds{}, {}, opts, LoadVector{{1e-12}}), DimensionError);
}

TEST_CASE("links without surface coupling are unoptimizable") {
  std::mt19937_64 rng(73);
  CMatrix s = oracle::random_link(3, 0.9, rng);
  s.row(0).setZero();
  s.col(0).setZero();
  const auto full = link_from(s);
  CHECK(objective(full, {{0.5e-12, 1e-12, 2e-12}}, LoadBounds{}) == 0.0);
  CHECK_THROWS_WITH_AS(optimize(full, LoadBounds{}, {}, OptimizerOptions{}), doctest::Contains("unoptimizable"),
                       UnoptimizableError);
  const ScatterMatrix bare(CMatrix::Zero(2, 2), kF, 50.0, {PortRole::tx(), PortRole::rx()});
  CHECK_THROWS_AS(optimize(bare, LoadBounds{}, {}, OptimizerOptions{}), UnoptimizableError);
}

TEST_CASE("phase-gradient seed") {
  Scenario scn;
  scn.range_m = 2.0;
  scn.freq_hz = kF;
  scn.gain_tx_lin = scn.gain_rx_lin = 10.0;
  const LoadBounds b;

  SUBCASE("equidistant elements get identical loads") {
    scn.beta_rad = 0.0;
    scn.alpha_rad = 0.0;
    scn.elements = {{1, 0.0, 0.02}, {2, 0.0, -0.02}, {3, 0.03, 0.0}, {4, -0.03, 0.0}};
    const auto seed = phase_gradient_seed(scn, b);
    CHECK(seed.caps_f[0] == seed.caps_f[1]);
    CHECK(seed.caps_f[2] == seed.caps_f[3]);
  }

  SUBCASE("half-wavelength path difference gives opposite phases") {
    scn.beta_rad = 0.0;
    scn.alpha_rad = 0.0;
    const double lambda = oracle::kC / kF;
    const double x = std::sqrt(std::pow(scn.range_m + lambda / 4.0, 2) - scn.range_m * scn.range_m);
    scn.elements = {{1, 0.0, 0.0}, {2, x, 0.0}};
    const VaractorModel model{0.0, 3e-9};
    const auto seed = phase_gradient_seed(scn, b, model);
    const double d = std::arg(cap_to_gamma(seed.caps_f[0], kF, 50.0, model)) -
                     std::arg(cap_to_gamma(seed.caps_f[1], kF, 50.0, model));
    CHECK(std::abs(std::abs(wrap_phase(d)) - oracle::kPi) < 1e-3);
  }

  SUBCASE("seeds stay within bounds") {
    std::mt19937_64 rng(79);
    std::uniform_real_distribution<double> pos(-0.3, 0.3), ang(-1.3, 1.3);
    for (int trial = 0; trial < 20; ++trial) {
      scn.beta_rad = ang(rng);
      scn.alpha_rad = ang(rng);
      scn.elements.clear();
      for (int m = 1; m <= 6; ++m) scn.elements.push_back({m, pos(rng), pos(rng)});
      const LoadBounds nb{0.4e-12, 0.9e-12};
      for (double c : phase_gradient_seed(scn, nb).caps_f) CHECK(nb.contains(c));
    }
  }
}

}  // TEST_SUITE
