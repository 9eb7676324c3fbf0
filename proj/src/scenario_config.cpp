#include "rislink/scenario_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rislink/error.hpp"

namespace rislink {

namespace {

enum class Dim { Frequency, Length, Angle, Gain, Capacitance, Inductance, Resistance };

struct UnitScale {
  const char* name;
  double scale;
};

const std::vector<UnitScale>& units_of(Dim d) {
  static const std::map<Dim, std::vector<UnitScale>> table = {
      {Dim::Frequency, {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}}},
      {Dim::Length, {{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}}},
      {Dim::Angle, {{"deg", kPi / 180.0}, {"rad", 1.0}}},
      {Dim::Gain, {{"dB", 1.0}, {"dBi", 1.0}}},
      {Dim::Capacitance, {{"F", 1.0}, {"nF", 1e-9}, {"pF", 1e-12}, {"fF", 1e-15}}},
      {Dim::Inductance, {{"H", 1.0}, {"nH", 1e-9}, {"pH", 1e-12}}},
      {Dim::Resistance, {{"ohm", 1.0}, {"Ohm", 1.0}, {"\xCE\xA9", 1.0}}},
  };
  return table.at(d);
}

std::string unit_list(Dim d) {
  std::string s;
  for (const auto& u : units_of(d)) s += (s.empty() ? "" : ", ") + std::string(u.name);
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

class Reader {
 public:
  Reader(std::map<std::string, std::pair<std::string, std::size_t>> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string raw(const std::string& key) {
    used_.push_back(key);
    return kv_.at(key).first;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = kv_.find(key);
    const std::string where = it != kv_.end() ? "line " + std::to_string(it->second.second) + ": " : "";
    throw ConfigError(where + "'" + key + "': " + msg);
  }

  double number(const std::string& key, std::string_view tok) const {
    double v = 0.0;
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
      fail(key, "invalid number '" + std::string(tok) + "'");
    return v;
  }

  double unit_scale(const std::string& key, const std::string& unit, Dim d) const {
    for (const auto& u : units_of(d))
      if (unit == u.name) return u.scale;
    fail(key, "unknown unit '" + unit + "' (expected one of " + unit_list(d) + ")");
  }

  /// "value unit" converted to SI.
  double quantity(const std::string& key, Dim d) {
    const auto t = split_ws(raw(key));
    if (t.size() == 1) fail(key, "unit missing (expected one of " + unit_list(d) + ")");
    if (t.size() != 2) fail(key, "expected '<value> <unit>'");
    return number(key, t[0]) * unit_scale(key, t[1], d);
  }

  std::optional<double> opt_quantity(const std::string& key, Dim d) {
    if (!has(key)) return std::nullopt;
    return quantity(key, d);
  }

  double required(const std::string& key, Dim d) {
    if (!has(key)) throw ConfigError("missing mandatory key '" + key + "'");
    return quantity(key, d);
  }

  long long integer(const std::string& key) {
    const auto t = split_ws(raw(key));
    if (t.size() != 1) fail(key, "expected a single integer without unit");
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t[0].data(), t[0].data() + t[0].size(), v);
    if (ec != std::errc() || ptr != t[0].data() + t[0].size()) fail(key, "invalid integer '" + t[0] + "'");
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const auto t = split_ws(raw(key));
    if (t.size() != 1) fail(key, "expected a single non-negative integer");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(t[0].data(), t[0].data() + t[0].size(), v);
    if (ec != std::errc() || ptr != t[0].data() + t[0].size()) fail(key, "invalid integer '" + t[0] + "'");
    return v;
  }

  double plain(const std::string& key) {
    const auto t = split_ws(raw(key));
    if (t.size() != 1) fail(key, "expected a single dimensionless number");
    return number(key, t[0]);
  }

  bool flag(const std::string& key) {
    const std::string v = std::string(trim(raw(key)));
    if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
    if (v == "off" || v == "false" || v == "no" || v == "0") return false;
    fail(key, "expected on/off");
  }

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, _] : kv_)
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
  }

  void reject_unused() const {
    for (const auto& [k, v] : kv_)
      if (std::find(used_.begin(), used_.end(), k) == used_.end())
        throw ConfigError("line " + std::to_string(v.second) + ": unknown key '" + k + "'");
  }

 private:
  std::map<std::string, std::pair<std::string, std::size_t>> kv_;
  std::vector<std::string> used_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(std::string(trim(p)));
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::vector<double> SweepGrid::alphas() const {
  if (!(alpha_step_rad > 0.0) || !(alpha_max_rad >= alpha_min_rad))
    throw ConfigError("empty alpha grid: need step > 0 and alpha_max >= alpha_min");
  const auto count = static_cast<std::size_t>(std::floor((alpha_max_rad - alpha_min_rad) / alpha_step_rad + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(alpha_min_rad + static_cast<double>(k) * alpha_step_rad);
  return out;
}

ScenarioConfig load_scenario(std::string_view text, const std::filesystem::path& base_dir, bool check_files) {
  ScenarioConfig cfg;
  std::map<std::string, std::pair<std::string, std::size_t>> kv;

  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    // '#' starts a comment at line start or after whitespace.
    for (std::size_t i = 0; i < line.size(); ++i)
      if (line[i] == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
        line = line.substr(0, i);
        break;
      }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value unit'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    if (!kv.emplace(key, std::make_pair(value, line_no)).second)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    cfg.entries.emplace_back(key, value);
  }

  Reader r(std::move(kv));
  Scenario& scn = cfg.scenario;
  scn.freq_hz = r.required("freq", Dim::Frequency);
  scn.range_m = r.required("range", Dim::Length);
  scn.alpha_rad = r.required("alpha", Dim::Angle);
  scn.beta_rad = r.required("beta", Dim::Angle);
  scn.gain_tx_lin = db_to_lin(r.required("gain_tx_db", Dim::Gain));
  scn.gain_rx_lin = db_to_lin(r.required("gain_rx_db", Dim::Gain));
  scn.board_width_m = r.opt_quantity("board.width", Dim::Length).value_or(0.0);
  scn.board_height_m = r.opt_quantity("board.height", Dim::Length).value_or(0.0);

  // Element layout: grid generator or explicit element.<m> = x z unit.
  const auto grid_keys = r.keys_with_prefix("grid.");
  const auto element_keys = r.keys_with_prefix("element.");
  if (!grid_keys.empty() && !element_keys.empty())
    throw ConfigError("element layout given both as grid.* and element.* keys");
  if (!grid_keys.empty()) {
    GridSpec g;
    if (!r.has("grid.rows") || !r.has("grid.cols") || !r.has("grid.pitch_x"))
      throw ConfigError("grid layout needs grid.rows, grid.cols and grid.pitch_x");
    g.rows = static_cast<int>(r.integer("grid.rows"));
    g.cols = static_cast<int>(r.integer("grid.cols"));
    if (g.rows < 1 || g.cols < 1) throw ConfigError("grid.rows and grid.cols must be >= 1 (empty element layout)");
    g.pitch_x_m = r.quantity("grid.pitch_x", Dim::Length);
    if (g.rows > 1 && !r.has("grid.pitch_z")) throw ConfigError("missing mandatory key 'grid.pitch_z'");
    g.pitch_z_m = r.opt_quantity("grid.pitch_z", Dim::Length).value_or(0.0);
    g.offset_x_m = r.opt_quantity("grid.offset_x", Dim::Length).value_or(0.0);
    g.offset_z_m = r.opt_quantity("grid.offset_z", Dim::Length).value_or(0.0);
    scn.elements = grid_layout(g);
  } else {
    std::vector<std::pair<int, ElementGeometry>> list;
    for (const auto& key : element_keys) {
      const std::string idx = key.substr(8);
      int m = 0;
      auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), m);
      if (ec != std::errc() || ptr != idx.data() + idx.size()) r.fail(key, "element key must be element.<number>");
      const auto t = split_ws(r.raw(key));
      if (t.size() == 2) r.fail(key, "unit missing (expected '<x> <z> <unit>')");
      if (t.size() != 3) r.fail(key, "expected '<x> <z> <unit>'");
      const double s = r.unit_scale(key, t[2], Dim::Length);
      list.push_back({m, {m, r.number(key, t[0]) * s, r.number(key, t[1]) * s}});
    }
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [_, e] : list) scn.elements.push_back(e);
  }
  if (scn.elements.empty()) throw ConfigError("no RIS elements: give grid.* or element.<m> keys");

  try {
    scn.validate();
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }

  if (r.has("bounds.c_min") || r.has("bounds.c_max")) {
    LoadBounds b;
    if (!r.has("bounds.c_min") || !r.has("bounds.c_max"))
      throw ConfigError("bounds.c_min and bounds.c_max must be given together");
    b.c_min_f = r.quantity("bounds.c_min", Dim::Capacitance);
    b.c_max_f = r.quantity("bounds.c_max", Dim::Capacitance);
    b.validate();
    cfg.bounds = b;
  }
  cfg.varactor.series_resistance_ohm = r.opt_quantity("varactor.rs", Dim::Resistance).value_or(0.0);
  cfg.varactor.series_inductance_h = r.opt_quantity("varactor.ls", Dim::Inductance).value_or(0.0);
  if (cfg.varactor.series_resistance_ohm < 0.0 || cfg.varactor.series_inductance_h < 0.0)
    throw ConfigError("varactor parasitics must be non-negative");
  cfg.z0_ohm = r.opt_quantity("z0", Dim::Resistance).value_or(50.0);
  if (!(cfg.z0_ohm > 0.0)) throw ConfigError("z0 must be positive");

  if (r.has("ris.touchstone") && r.has("ris.synth"))
    throw ConfigError("give either ris.touchstone or ris.synth, not both");
  if (r.has("ris.touchstone")) {
    cfg.ris.touchstone = resolve(base_dir, r.raw("ris.touchstone"));
  } else if (r.has("ris.synth")) {
    const std::string model(trim(r.raw("ris.synth")));
    Complex s_mm{};
    if (r.has("ris.s_mm")) {
      const auto t = split_ws(r.raw("ris.s_mm"));
      if (t.size() != 2) r.fail("ris.s_mm", "expected '<re> <im>'");
      s_mm = {r.number("ris.s_mm", t[0]), r.number("ris.s_mm", t[1])};
    }
    if (model == "isolated") {
      cfg.ris.synth = CouplingModel::isolated(s_mm);
    } else if (model == "exp_decay") {
      if (!r.has("ris.c0") || !r.has("ris.rolloff"))
        throw ConfigError("ris.synth = exp_decay needs ris.c0 and ris.rolloff");
      const double c0 = r.plain("ris.c0");
      const double rolloff = r.quantity("ris.rolloff", Dim::Length);
      if (!(rolloff > 0.0) || c0 < 0.0) throw ConfigError("ris.c0 must be >= 0 and ris.rolloff > 0");
      cfg.ris.synth = CouplingModel::exp_decay(s_mm, c0, rolloff);
    } else {
      r.fail("ris.synth", "unknown model '" + model + "' (expected isolated or exp_decay)");
    }
    if (std::abs(s_mm) > 1.0) r.fail("ris.s_mm", "|s_mm| must not exceed 1");
  } else {
    throw ConfigError("missing mandatory key 'ris.touchstone' (or 'ris.synth')");
  }

  if (!r.has("patterns")) throw ConfigError("missing mandatory key 'patterns'");
  cfg.patterns = resolve(base_dir, r.raw("patterns"));

  if (r.has("opt.starts")) cfg.optimizer.starts = static_cast<int>(r.integer("opt.starts"));
  if (r.has("opt.max_evals")) cfg.optimizer.max_evals = static_cast<int>(r.integer("opt.max_evals"));
  if (r.has("opt.seed")) cfg.optimizer.seed = r.unsigned_integer("opt.seed");
  if (r.has("opt.polish")) cfg.optimizer.polish = r.flag("opt.polish");
  if (r.has("opt.gradient")) cfg.optimizer.gradient_refine = r.flag("opt.gradient");
  if (cfg.optimizer.starts < 1 || cfg.optimizer.max_evals < 1)
    throw ConfigError("opt.starts and opt.max_evals must be >= 1");

  if (auto v = r.opt_quantity("sweep.alpha_min", Dim::Angle)) cfg.sweep.alpha_min_rad = *v;
  if (auto v = r.opt_quantity("sweep.alpha_max", Dim::Angle)) cfg.sweep.alpha_max_rad = *v;
  if (auto v = r.opt_quantity("sweep.alpha_step", Dim::Angle)) cfg.sweep.alpha_step_rad = *v;

  if (r.has("output.dir")) cfg.output_dir = resolve(base_dir, r.raw("output.dir"));

  r.reject_unused();

  if (check_files) {
    for (const auto* p : {cfg.ris.touchstone ? &*cfg.ris.touchstone : nullptr, &*cfg.patterns})
      if (p && !std::filesystem::is_regular_file(*p)) throw ConfigError("referenced file not found: " + p->string());
  }
  return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  try {
    return load_scenario(ss.str(), base, true);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace rislink
