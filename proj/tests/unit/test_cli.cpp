#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "oracles.hpp"
#include "rislink/error.hpp"
#include "rislink/pattern_io.hpp"
#include "rislink/touchstone.hpp"
#include "rislink/units.hpp"

using namespace rislink;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "rislink");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

// Directory with a small scenario: `layout` lines plus isotropic or cosine patterns.
struct Toy {
  fs::path dir = oracle::temp_dir("cli");
  fs::path cfg = dir / "toy.cfg";

  Toy(const std::string& layout, const std::vector<ElementPattern>& pats, const std::string& extra) {
    {
      std::ofstream(dir / "pats.csv") << write_pattern_table(pats);
    }
    std::ofstream(cfg) << "freq = 3.55 GHz\nrange = 2 m\nalpha = 0 deg\nbeta = 30 deg\n"
                          "gain_tx_db = 11 dB\ngain_rx_db = 11 dB\n"
                       << layout << "patterns = pats.csv\noutput.dir = out\n"
                       << extra;
  }
  ~Toy() { fs::remove_all(dir); }
};

const std::string kTwoElements =
    "element.1 = -20 0 mm\nelement.2 = 20 0 mm\n"
    "board.width = 80 mm\nboard.height = 40 mm\n"
    "bounds.c_min = 0.23 pF\nbounds.c_max = 2.1 pF\n"
    "ris.synth = exp_decay\nris.s_mm = 0.1666667 0.8333333\nris.c0 = 0.2\nris.rolloff = 30 mm\n";

std::vector<ElementPattern> cosine_pair() {
  const Complex smm(0.1666667, 0.8333333);
  return {ElementPattern::cosine(1, db_to_lin(5.0), 1.0, smm), ElementPattern::cosine(2, db_to_lin(5.0), 1.0, smm)};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("single isotropic element: synthesized file equals the direct assembly") {
  Toy toy("element.1 = 0 0 mm\nris.synth = isolated\n", {ElementPattern::isotropic(1, 1.0, 0.0)}, "");
  std::ostringstream log;
  const fs::path ts = cli::cmd_synthesize(toy.cfg, {}, log);
  CHECK(ts.filename() == "link.s3p");
  const auto doc = load_touchstone(ts);
  REQUIRE(doc.n_ports == 3);

  Scenario s;
  s.range_m = 2.0;
  s.beta_rad = deg_to_rad(30.0);
  s.freq_hz = 3.55e9;
  s.gain_tx_lin = s.gain_rx_lin = db_to_lin(11.0);
  s.elements = {{1, 0.0, 0.0}};
  const auto direct = assemble_full_matrix(s, ScatterMatrix::ris_only(CMatrix::Zero(1, 1), 3.55e9, 50.0, {1}),
                                           {ElementPattern::isotropic(1, 1.0, 0.0)});
  CHECK(doc.points[0].s == direct.entries());
  CHECK(doc.points[0].freq_hz == 3.55e9);
  const std::string text = slurp(ts);
  CHECK(text.find("! port 1: Tx") != std::string::npos);
  CHECK(text.find("! port 3: Rx") != std::string::npos);
  CHECK(fs::exists(ts.parent_path() / "manifest_synthesize.json"));
}

TEST_CASE("shipped configuration synthesizes a 16-port link") {
  const auto dir = oracle::temp_dir("cli16");
  std::ostringstream log;
  cli::Overrides ov;
  ov.out_dir = dir;
  const fs::path ts = cli::cmd_synthesize(fs::path(RISLINK_CONFIG_DIR) / "paper_7x2.cfg", ov, log);
  CHECK(ts.filename() == "link.s16p");
  const auto doc = load_touchstone(ts);
  CHECK(doc.n_ports == 16);
  CHECK(check_reciprocity(doc.points[0].s, 1e-12));
  CHECK(check_passivity(doc.points[0].s, 1e-6));
  CHECK(log.str().find("far-field") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("missing pattern file exits with a usage error naming the path") {
  Toy toy("element.1 = 0 0 mm\nris.synth = isolated\n", {ElementPattern::isotropic(1, 1.0, 0.0)}, "");
  fs::remove(toy.dir / "pats.csv");
  std::string err;
  CHECK(run_cli({"synthesize", toy.cfg.string()}, &err) == cli::kExitUsage);
  CHECK(err.find("pats.csv") != std::string::npos);
}

TEST_CASE("two-element optimization lands on the brute-force optimum") {
  Toy toy(kTwoElements, cosine_pair(), "opt.seed = 3\n");
  std::ostringstream log;
  const fs::path csv = cli::cmd_optimize(toy.cfg, {}, log);
  const LoadVector caps = cli::read_caps_csv(csv, {1, 2});

  const auto cfg = load_scenario_file(toy.cfg);
  const auto ris = synth_ris_matrix(cfg.scenario.elements, 3.55e9, *cfg.ris.synth);
  const auto full = assemble_full_matrix(cfg.scenario, ris, cosine_pair());
  const LoadBounds b = *cfg.bounds;
  const CMatrix& s = full.entries();
  // Exhaustive 300 x 300 grid with a hand-written 2x2 reduction.
  auto gamma = [](double c) {
    const Complex z(0.0, -1.0 / (2.0 * oracle::kPi * 3.55e9 * c));
    return (z - 50.0) / (z + 50.0);
  };
  double best = -1.0, c1 = 0.0, c2 = 0.0;
  for (int i = 0; i < 300; ++i)
    for (int j = 0; j < 300; ++j) {
      const double a = b.c_min_f + (b.c_max_f - b.c_min_f) * i / 299.0;
      const double d = b.c_min_f + (b.c_max_f - b.c_min_f) * j / 299.0;
      const Complex g1 = gamma(a), g2 = gamma(d);
      Eigen::Matrix2cd m;
      m << 1.0 - s(1, 1) * g1, -s(1, 2) * g2, -s(2, 1) * g1, 1.0 - s(2, 2) * g2;
      const Eigen::Vector2cd v = m.inverse() * Eigen::Vector2cd(s(1, 0), s(2, 0));
      const double f = std::norm(s(3, 1) * g1 * v(0) + s(3, 2) * g2 * v(1));
      if (f > best) {
        best = f;
        c1 = a;
        c2 = d;
      }
    }
  CHECK(std::abs(caps.caps_f[0] - c1) * 1e12 <= 0.005);
  CHECK(std::abs(caps.caps_f[1] - c2) * 1e12 <= 0.005);

  const auto report = nlohmann::json::parse(slurp(csv.parent_path() / "optimize_report.json"));
  CHECK(report["objective"].get<double>() >= best - 1e-6);
  CHECK(report["objective"].get<double>() >= report["uniform_1pF_objective"].get<double>());
}

TEST_CASE("optimize is byte-reproducible for a fixed seed") {
  Toy toy(kTwoElements, cosine_pair(), "opt.starts = 3\n");
  cli::Overrides a, b;
  a.out_dir = toy.dir / "a";
  b.out_dir = toy.dir / "b";
  a.seed = b.seed = 11;
  std::ostringstream log;
  const auto ca = cli::cmd_optimize(toy.cfg, a, log);
  const auto cb = cli::cmd_optimize(toy.cfg, b, log);
  CHECK(slurp(ca) == slurp(cb));
  CHECK(slurp(a.out_dir.value() / "optimize_report.json") == slurp(b.out_dir.value() / "optimize_report.json"));

  auto ma = nlohmann::json::parse(slurp(*a.out_dir / "manifest_optimize.json"));
  CHECK(ma["seed"] == 11);
  CHECK(ma["command"] == "optimize");
  CHECK(ma["inputs"].size() == 2);
  CHECK(ma["outputs"].size() == 2);
}

TEST_CASE("caps CSV format") {
  const std::string text = cli::format_caps_csv({3, 8}, LoadVector{{1e-12, 0.5e-12}}, 3.55e9, 50.0, {});
  CHECK(text.rfind("m,C_pF,gamma_re,gamma_im\n3,1,-0.108661672,-0.99407879\n8,0.5,", 0) == 0);
  const auto dir = oracle::temp_dir("caps");
  std::ofstream(dir / "c.csv") << text;
  const LoadVector back = cli::read_caps_csv(dir / "c.csv", {8, 3});
  CHECK(back.caps_f[0] == doctest::Approx(0.5e-12));
  CHECK(back.caps_f[1] == doctest::Approx(1e-12));
  CHECK_THROWS_AS(cli::read_caps_csv(dir / "c.csv", {1}), ConfigError);
  std::ofstream(dir / "bad.csv") << "x\n";
  CHECK_THROWS_AS(cli::read_caps_csv(dir / "bad.csv", {1}), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("sweep outputs") {
  Toy toy(kTwoElements, cosine_pair(), "sweep.alpha_min = -10 deg\nsweep.alpha_max = 10 deg\nsweep.alpha_step = 5 deg\n");
  std::ostringstream log;

  SUBCASE("reflector only") {
    const auto csv = cli::cmd_sweep(toy.cfg, std::nullopt, {}, log);
    const auto curves = read_csv(csv);
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].label == "reflector");
    CHECK(curves[0].alpha_rad.size() == 5);
  }
  SUBCASE("with capacitances") {
    std::ofstream(toy.dir / "caps.csv") << "m,C_pF\n1,1.0\n2,0.7\n";
    const auto csv = cli::cmd_sweep(toy.cfg, toy.dir / "caps.csv", {}, log);
    CHECK(slurp(csv).rfind("alpha_deg,ris_dbsm,reflector_dbsm\n", 0) == 0);
    const auto first = slurp(csv);
    cli::cmd_sweep(toy.cfg, toy.dir / "caps.csv", {}, log);
    CHECK(slurp(csv) == first);
  }
}

TEST_CASE("usage and configuration errors map to exit code 2") {
  Toy empty_grid(kTwoElements, cosine_pair(), "sweep.alpha_min = 10 deg\nsweep.alpha_max = -10 deg\n");
  std::string err;
  CHECK(run_cli({"sweep", empty_grid.cfg.string()}, &err) == cli::kExitUsage);
  CHECK(err.find("empty alpha grid") != std::string::npos);

  std::string bad_bounds = kTwoElements;
  bad_bounds.replace(bad_bounds.find("0.23 pF"), 7, "3 pF");
  Toy inverted(bad_bounds, cosine_pair(), "");
  CHECK(run_cli({"optimize", inverted.cfg.string()}, &err) == cli::kExitUsage);
  CHECK(err.find("c_min") != std::string::npos);

  Toy ok(kTwoElements, cosine_pair(), "");
  CHECK(run_cli({"synthesize", ok.cfg.string(), "--alpha", "95"}) == cli::kExitUsage);
  CHECK(run_cli({"frobnicate"}) == cli::kExitUsage);
  CHECK(run_cli({}) == cli::kExitUsage);
  CHECK(run_cli({"synthesize", (ok.dir / "absent.cfg").string()}) == cli::kExitUsage);
  CHECK(run_cli({"sweep", ok.cfg.string(), (ok.dir / "absent.csv").string()}) == cli::kExitUsage);
  CHECK(run_cli({"synthesize", ok.cfg.string(), "--out", (ok.dir / "o").string()}) == cli::kExitOk);
  CHECK(fs::exists(ok.dir / "o" / "link.s4p"));
}

TEST_CASE("runtime failures map to exit code 1") {
  // No coupling toward Tx/Rx: zero element gain everywhere.
  const Complex smm(0.1666667, 0.8333333);
  std::vector<ElementPattern> dead;
  for (int m = 1; m <= 2; ++m) dead.emplace_back(m, std::vector<double>{-1.6, 1.6}, std::vector<double>{0.0, 0.0}, smm);
  Toy toy(kTwoElements, dead, "");
  std::string err;
  CHECK(run_cli({"optimize", toy.cfg.string()}, &err) == cli::kExitRuntime);
  CHECK(err.find("unoptimizable") != std::string::npos);
}

}  // TEST_SUITE
