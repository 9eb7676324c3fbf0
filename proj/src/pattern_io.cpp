#include "rislink/pattern_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rislink/error.hpp"
#include "rislink/units.hpp"

namespace rislink {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double number(std::string_view tok, std::size_t line, bool allow_neg_inf = false) {
  if (allow_neg_inf && (tok == "-inf" || tok == "-Inf" || tok == "-INF")) return -HUGE_VAL;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError("invalid number '" + std::string(tok) + "'", line);
  return v;
}

int element_number(std::string_view tok, std::size_t line) {
  int m = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), m);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("invalid element number '" + std::string(tok) + "'", line);
  return m;
}

std::string join(const std::vector<std::string_view>& f) {
  std::string s;
  for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + std::string(f[i]);
  return s;
}

}  // namespace

std::vector<ElementPattern> parse_pattern_table(std::string_view text) {
  enum class Section { None, Gain, Smm } section = Section::None;
  std::map<int, std::vector<std::pair<double, double>>> gains;  // azimuth_deg -> gain_lin
  std::map<int, Complex> smm;
  std::map<int, std::size_t> first_line;

  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto f = split_csv(line);
    const std::string header = join(f);
    if (header == "m,azimuth_deg,gain_dbi") {
      section = Section::Gain;
      continue;
    }
    if (header == "m,smm_re,smm_im") {
      section = Section::Smm;
      continue;
    }
    if (section == Section::None) throw ParseError("data row before a section header", line_no);
    if (f.size() != 3) throw ParseError("expected 3 comma-separated fields", line_no);

    const int m = element_number(f[0], line_no);
    first_line.try_emplace(m, line_no);
    if (section == Section::Gain) {
      const double az = number(f[1], line_no);
      const double g_db = number(f[2], line_no, true);
      gains[m].emplace_back(az, std::isinf(g_db) ? 0.0 : db_to_lin(g_db));
    } else {
      if (smm.count(m)) throw ParseError("duplicate s_mm row for element " + std::to_string(m), line_no);
      smm[m] = Complex(number(f[1], line_no), number(f[2], line_no));
    }
  }

  for (const auto& [m, _] : smm)
    if (!gains.count(m)) throw ParseError("s_mm given for element " + std::to_string(m) + " without gain rows", 0);

  std::vector<ElementPattern> out;
  for (auto& [m, rows] : gains) {
    std::sort(rows.begin(), rows.end());
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (rows[k].first == rows[k - 1].first)
        throw ParseError("duplicate azimuth " + std::to_string(rows[k].first) + " deg for element " +
                             std::to_string(m),
                         first_line[m]);
    if (rows.front().first > -90.0 + 1e-9 || rows.back().first < 90.0 - 1e-9)
      throw ParseError("pattern of element " + std::to_string(m) + " does not cover [-90, 90] deg (coverage gap)",
                       first_line[m]);
    if (!smm.count(m)) throw ParseError("missing s_mm for element " + std::to_string(m), first_line[m]);
    std::vector<double> az, g;
    for (const auto& [a, lin] : rows) {
      az.push_back(deg_to_rad(a));
      g.push_back(lin);
    }
    try {
      out.emplace_back(m, std::move(az), std::move(g), smm[m]);
    } catch (const GeometryError& e) {
      throw ParseError(e.what(), first_line[m]);
    }
  }
  if (out.empty()) throw ParseError("pattern table contains no elements", 0);
  return out;
}

std::vector<ElementPattern> load_pattern_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open pattern file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_pattern_table(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

std::string write_pattern_table(const std::vector<ElementPattern>& patterns) {
  std::string out = "m,azimuth_deg,gain_dbi\n";
  char buf[96];
  for (const auto& p : patterns) {
    for (std::size_t k = 0; k < p.azimuth_rad().size(); ++k) {
      const double g = p.gain_lin()[k];
      if (g > 0.0)
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g\n", p.index(), rad_to_deg(p.azimuth_rad()[k]), lin_to_db(g));
      else
        std::snprintf(buf, sizeof buf, "%d,%.10g,-inf\n", p.index(), rad_to_deg(p.azimuth_rad()[k]));
      out += buf;
    }
  }
  out += "m,smm_re,smm_im\n";
  for (const auto& p : patterns) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", p.index(), p.s_mm().real(), p.s_mm().imag());
    out += buf;
  }
  return out;
}

}  // namespace rislink
