#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rislink/error.hpp"
#include "rislink/parallel.hpp"
#include "rislink/pattern_io.hpp"
#include "rislink/touchstone.hpp"
#include "rislink/units.hpp"

#ifndef RISLINK_VERSION
#define RISLINK_VERSION "dev"
#endif

namespace rislink::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kFrequencyMatchTolHz = 1e3;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
  out.flush();
  if (!out) throw Error("write failed for '" + p.string() + "'");
}

fs::path output_dir(const Pipeline& p) {
  fs::path dir = p.config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json manifest(const std::string& command, const Pipeline& p, const std::string& started,
                      const std::vector<fs::path>& outputs) {
  ordered_json j;
  j["tool"] = "rislink";
  j["version"] = RISLINK_VERSION;
  j["command"] = command;
  j["config_path"] = p.config_path.string();
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : p.config.entries) cfg[k] = v;
  j["config"] = cfg;
  const auto& s = p.config.scenario;
  j["resolved"] = {{"freq_hz", s.freq_hz},
                   {"range_m", s.range_m},
                   {"alpha_deg", rad_to_deg(s.alpha_rad)},
                   {"beta_deg", rad_to_deg(s.beta_rad)},
                   {"gain_tx_lin", s.gain_tx_lin},
                   {"gain_rx_lin", s.gain_rx_lin},
                   {"elements", s.elements.size()},
                   {"z0_ohm", p.ris.z0_ohm()},
                   {"output_dir", p.config.output_dir.string()}};
  ordered_json inputs = ordered_json::object();
  for (const auto& in : p.inputs) inputs[in.string()] = file_hash(in);
  j["inputs"] = inputs;
  j["seed"] = p.config.optimizer.seed;
  ordered_json outs = ordered_json::array();
  for (const auto& o : outputs) outs.push_back({{"path", o.string()}, {"hash", file_hash(o)}});
  j["outputs"] = outs;
  j["started_utc"] = started;
  j["finished_utc"] = utc_now();
  return j;
}

std::vector<ElementPattern> align_patterns(std::vector<ElementPattern> patterns, const std::vector<int>& numbers) {
  std::vector<ElementPattern> out;
  out.reserve(numbers.size());
  for (int m : numbers) {
    auto it = std::find_if(patterns.begin(), patterns.end(), [m](const auto& p) { return p.index() == m; });
    if (it == patterns.end()) throw ConfigError("pattern file has no entry for element " + std::to_string(m));
    out.push_back(*it);
  }
  if (patterns.size() != numbers.size())
    throw ConfigError("pattern file lists " + std::to_string(patterns.size()) + " elements, layout has " +
                      std::to_string(numbers.size()));
  return out;
}

ScatterMatrix load_ris(const ScenarioConfig& cfg, std::vector<fs::path>& inputs) {
  std::vector<int> numbers;
  for (const auto& e : cfg.scenario.elements) numbers.push_back(e.index);
  if (cfg.ris.touchstone) {
    inputs.push_back(*cfg.ris.touchstone);
    const auto doc = load_touchstone(*cfg.ris.touchstone);
    return matrix_at_frequency(doc, cfg.scenario.freq_hz, kFrequencyMatchTolHz, numbers);
  }
  return synth_ris_matrix(cfg.scenario.elements, cfg.scenario.freq_hz, *cfg.ris.synth, cfg.z0_ohm);
}

std::string fmt(const char* f, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

Pipeline prepare(const fs::path& config_path, const Overrides& ov, std::ostream& log) {
  ScenarioConfig cfg = load_scenario_file(config_path);
  if (ov.alpha_deg) {
    cfg.scenario.alpha_rad = deg_to_rad(*ov.alpha_deg);
    cfg.entries.emplace_back("--alpha", format_double(*ov.alpha_deg) + " deg");
  }
  if (ov.beta_deg) {
    cfg.scenario.beta_rad = deg_to_rad(*ov.beta_deg);
    cfg.entries.emplace_back("--beta", format_double(*ov.beta_deg) + " deg");
  }
  if (ov.seed) {
    cfg.optimizer.seed = *ov.seed;
    cfg.entries.emplace_back("--seed", std::to_string(*ov.seed));
  }
  if (ov.out_dir) {
    cfg.output_dir = *ov.out_dir;
    cfg.entries.emplace_back("--out", ov.out_dir->string());
  }
  try {
    cfg.scenario.validate();
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("invalid scenario after overrides: ") + e.what());
  }
  cfg.optimizer.threads = threads_from_env(1);

  std::vector<fs::path> inputs{config_path};
  ScatterMatrix ris = load_ris(cfg, inputs);
  inputs.push_back(*cfg.patterns);
  auto patterns = align_patterns(load_pattern_table(*cfg.patterns), ris.element_numbers());
  for (const auto& w : far_field_warnings(cfg.scenario)) log << "warning: " << w << "\n";
  return Pipeline{config_path, std::move(cfg), std::move(ris), std::move(patterns), std::move(inputs)};
}

fs::path cmd_synthesize(const fs::path& config_path, const Overrides& overrides, std::ostream& log) {
  const std::string started = utc_now();
  const Pipeline p = prepare(config_path, overrides, log);
  const ScatterMatrix full = assemble_full_matrix(p.config.scenario, p.ris, p.patterns);
  if (!check_passivity(full)) log << "warning: assembled matrix is not passive (largest singular value > 1)\n";

  const fs::path dir = output_dir(p);
  const fs::path ts = dir / ("link.s" + std::to_string(full.size()) + "p");
  const auto& s = p.config.scenario;
  std::vector<std::string> comments = {
      "rislink " RISLINK_VERSION " synthesized link",
      "alpha_deg = " + format_double(rad_to_deg(s.alpha_rad)) +
          ", beta_deg = " + format_double(rad_to_deg(s.beta_rad)) + ", range_m = " + format_double(s.range_m)};
  for (auto& c : port_role_comments(full)) comments.push_back(std::move(c));
  save_touchstone(ts, document_from_matrix(full), comments);

  write_text(dir / "manifest_synthesize.json", manifest("synthesize", p, started, {ts}).dump(2) + "\n");
  log << "wrote " << ts.string() << " (" << full.size() << " ports)\n";
  return ts;
}

std::string format_caps_csv(const std::vector<int>& numbers, const LoadVector& caps, double freq_hz, double z0_ohm,
                            const VaractorModel& model) {
  std::string out = "m,C_pF,gamma_re,gamma_im\n";
  char buf[128];
  for (std::size_t k = 0; k < caps.size(); ++k) {
    const Complex g = cap_to_gamma(caps.caps_f[k], freq_hz, z0_ohm, model);
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.9g,%.9g\n", numbers[k], caps.caps_f[k] * 1e12, g.real(), g.imag());
    out += buf;
  }
  return out;
}

LoadVector read_caps_csv(const fs::path& path, const std::vector<int>& numbers) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open capacitance file '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("m,C_pF", 0) != 0)
    throw ParseError(path.string() + ": capacitance CSV must start with header 'm,C_pF,...'", 1);
  std::map<int, double> by_element;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    int m = 0;
    double c_pf = 0.0;
    if (std::sscanf(line.c_str(), "%d,%lf", &m, &c_pf) != 2 || !(c_pf > 0.0))
      throw ParseError(path.string() + ": expected '<m>,<C_pF>' with C > 0", line_no);
    by_element[m] = c_pf * 1e-12;
  }
  LoadVector caps;
  for (int m : numbers) {
    auto it = by_element.find(m);
    if (it == by_element.end()) throw ConfigError(path.string() + ": no capacitance for element " + std::to_string(m));
    caps.caps_f.push_back(it->second);
  }
  return caps;
}

fs::path cmd_optimize(const fs::path& config_path, const Overrides& overrides, std::ostream& log) {
  const std::string started = utc_now();
  const Pipeline p = prepare(config_path, overrides, log);
  if (!p.config.bounds) throw ConfigError("optimize needs bounds.c_min and bounds.c_max");
  const LoadBounds bounds = *p.config.bounds;
  const ScatterMatrix full = assemble_full_matrix(p.config.scenario, p.ris, p.patterns);
  const LoadVector seed = phase_gradient_seed(p.config.scenario, bounds, p.config.varactor, p.ris.z0_ohm());
  const OptimizeResult res = optimize(full, bounds, p.config.varactor, p.config.optimizer, seed);

  LoadVector uniform;
  uniform.caps_f.assign(full.element_count(), bounds.clamp(1e-12));
  const double uniform_obj = objective(full, uniform, bounds, p.config.varactor);

  const fs::path dir = output_dir(p);
  const fs::path csv = dir / "caps.csv";
  const auto numbers = p.ris.element_numbers();
  write_text(csv, format_caps_csv(numbers, res.caps, full.freq_hz(), full.z0_ohm(), p.config.varactor));

  ordered_json report;
  report["objective"] = res.objective;
  report["objective_db"] = res.objective > 0 ? lin_to_db(res.objective) : -std::numeric_limits<double>::infinity();
  report["uniform_1pF_objective"] = uniform_obj;
  report["best_start"] = res.best_start;
  report["evaluations"] = res.evaluations;
  ordered_json starts = ordered_json::array();
  for (const auto& s : res.starts)
    starts.push_back({{"initial_objective", s.initial_objective},
                      {"objective", s.objective},
                      {"evaluations", s.evaluations},
                      {"iterations", s.trace.size()}});
  report["starts"] = starts;
  const fs::path rep = dir / "optimize_report.json";
  write_text(rep, report.dump(2) + "\n");

  write_text(dir / "manifest_optimize.json", manifest("optimize", p, started, {csv, rep}).dump(2) + "\n");
  log << "objective " << fmt("%.6g", res.objective) << " (" << fmt("%.2f", lin_to_db(res.objective))
      << " dB), wrote " << csv.string() << "\n";
  return csv;
}

fs::path cmd_sweep(const fs::path& config_path, const std::optional<fs::path>& caps_csv, const Overrides& overrides,
                   std::ostream& log) {
  const std::string started = utc_now();
  Pipeline p = prepare(config_path, overrides, log);
  const auto& s = p.config.scenario;
  const auto alphas = p.config.sweep.alphas();
  if (!(s.board_width_m > 0.0) || !(s.board_height_m > 0.0))
    throw ConfigError("sweep needs board.width and board.height for the reflector reference");

  std::vector<BrcsCurve> curves;
  if (caps_csv) {
    p.inputs.push_back(*caps_csv);
    const LoadVector caps = read_caps_csv(*caps_csv, p.ris.element_numbers());
    curves.push_back(sweep_rx_angle(s, p.ris, p.patterns, caps, alphas, p.config.varactor, p.config.optimizer.threads));
  }
  curves.push_back(flat_reflector_reference(s.board_width_m, s.board_height_m, s.wavelength_m(), s.beta_rad, alphas));

  const fs::path dir = output_dir(p);
  const fs::path csv = dir / "brcs.csv";
  export_csv(curves, csv);
  write_text(dir / "manifest_sweep.json", manifest("sweep", p, started, {csv}).dump(2) + "\n");
  log << "wrote " << csv.string() << " (" << alphas.size() << " angles, " << curves.size() << " curve(s))\n";
  return csv;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RIS link synthesis, load optimization and BRCS sweeps", "rislink"};
  app.set_version_flag("--version", RISLINK_VERSION);
  app.require_subcommand(1);

  Overrides ov;
  std::string config;
  std::string caps;
  double alpha = 0, beta = 0;
  std::uint64_t seed = 0;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "scenario configuration file")->required();
    sub->add_option("--alpha", alpha, "Rx angle override in degrees");
    sub->add_option("--beta", beta, "Tx angle override in degrees");
    sub->add_option("--seed", seed, "optimizer seed override");
    sub->add_option("--out", out_dir, "output directory override");
  };
  auto* synth = app.add_subcommand("synthesize", "assemble the full link matrix as Touchstone");
  add_common(synth);
  auto* opt = app.add_subcommand("optimize", "optimize varactor capacitances for Tx->Rx power transfer");
  add_common(opt);
  auto* sweep = app.add_subcommand("sweep", "BRCS versus Rx angle plus flat-reflector reference");
  add_common(sweep);
  sweep->add_option("caps", caps, "capacitance CSV from 'optimize' (omit for reflector only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  if (active->count("--alpha")) ov.alpha_deg = alpha;
  if (active->count("--beta")) ov.beta_deg = beta;
  if (active->count("--seed")) ov.seed = seed;
  if (active->count("--out")) ov.out_dir = out_dir;

  try {
    if (active == synth)
      cmd_synthesize(config, ov, err);
    else if (active == opt)
      cmd_optimize(config, ov, err);
    else
      cmd_sweep(config, caps.empty() ? std::nullopt : std::optional<fs::path>(caps), ov, err);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GeometryError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InterpolationRangeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FrequencyNotFoundError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace rislink::cli
