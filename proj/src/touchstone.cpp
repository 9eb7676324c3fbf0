#include "rislink/touchstone.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rislink/error.hpp"
#include "rislink/units.hpp"

namespace rislink {

namespace {

struct Token {
  double value;
  std::size_t line;
  bool line_start;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

TouchstoneOptions parse_option_line(std::string_view line, std::size_t line_no) {
  TouchstoneOptions opt;
  auto toks = split_ws(line.substr(1));
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string t = upper(toks[i]);
    if (t == "HZ" || t == "KHZ" || t == "MHZ" || t == "GHZ") {
      opt.freq_unit = t;
      opt.freq_scale = t == "HZ" ? 1.0 : t == "KHZ" ? 1e3 : t == "MHZ" ? 1e6 : 1e9;
    } else if (t == "S" || t == "Y" || t == "Z" || t == "H" || t == "G") {
      if (t != "S") throw ParseError("only S-parameter files are supported (got " + t + ")", line_no);
      opt.parameter = 'S';
    } else if (t == "RI") {
      opt.format = TouchstoneFormat::RI;
    } else if (t == "MA") {
      opt.format = TouchstoneFormat::MA;
    } else if (t == "DB") {
      opt.format = TouchstoneFormat::DB;
    } else if (t == "R") {
      if (i + 1 >= toks.size() || !parse_double(toks[i + 1], opt.z0_ohm) || !(opt.z0_ohm > 0.0))
        throw ParseError("malformed option line: 'R' must be followed by a positive impedance", line_no);
      ++i;
    } else {
      throw ParseError("malformed option line: unexpected token '" + std::string(toks[i]) + "'", line_no);
    }
  }
  return opt;
}

Complex decode_pair(TouchstoneFormat fmt, double a, double b) {
  switch (fmt) {
    case TouchstoneFormat::RI:
      return {a, b};
    case TouchstoneFormat::MA:
      return std::polar(a, deg_to_rad(b));
    case TouchstoneFormat::DB:
      return std::polar(db20_to_lin(a), deg_to_rad(b));
  }
  return {};
}

// Port count from the layout of the first point: a point starts on a line
// with an odd token count (frequency + pairs) and continuation lines carry
// whole pairs.
std::size_t infer_ports(const std::vector<Token>& toks) {
  if (toks.empty()) return 0;
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t j = i + 1;
    while (j < toks.size() && !toks[j].line_start) ++j;
    const std::size_t on_line = j - i;
    if (i > 0 && on_line % 2 == 1) break;
    count += on_line;
    i = j;
  }
  const double n = std::sqrt((static_cast<double>(count) - 1.0) / 2.0);
  const auto rounded = static_cast<std::size_t>(std::lround(n));
  if (rounded == 0 || 1 + 2 * rounded * rounded != count)
    throw ParseError("cannot infer the port count: first data point has " + std::to_string(count) + " values",
                     toks.front().line);
  return rounded;
}

void write_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

bool TouchstoneDocument::same_data(const TouchstoneDocument& other) const {
  if (n_ports != other.n_ports || options.z0_ohm != other.options.z0_ohm || points.size() != other.points.size())
    return false;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].freq_hz != other.points[k].freq_hz) return false;
    if (points[k].s != other.points[k].s) return false;
  }
  return true;
}

TouchstoneDocument parse_touchstone(std::string_view text, std::size_t n_ports) {
  TouchstoneDocument doc;
  bool have_options = false;
  std::vector<Token> toks;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (auto bang = line.find('!'); bang != std::string_view::npos) line = line.substr(0, bang);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (line.empty()) continue;

    if (line.front() == '[')
      throw ParseError("Touchstone v2 keyword '" + std::string(line) + "' found; only Touchstone v1 is supported",
                       line_no);
    if (line.front() == '#') {
      if (!toks.empty()) throw ParseError("option line after network data", line_no);
      if (!have_options) doc.options = parse_option_line(line, line_no);
      have_options = true;  // later option lines are ignored per v1
      continue;
    }
    bool first = true;
    for (auto t : split_ws(line)) {
      double v;
      if (!parse_double(t, v)) throw ParseError("invalid number '" + std::string(t) + "'", line_no);
      toks.push_back({v, line_no, first});
      first = false;
    }
  }

  if (toks.empty()) throw ParseError("no network data", 0);
  doc.n_ports = n_ports ? n_ports : infer_ports(toks);
  const std::size_t n = doc.n_ports;
  const std::size_t per_point = 1 + 2 * n * n;

  std::size_t i = 0;
  while (i < toks.size()) {
    if (!toks[i].line_start)
      throw ParseError("wrong value count for " + std::to_string(n) + "-port data: point does not start a line",
                       toks[i].line);
    if (toks.size() - i < per_point)
      throw ParseError("wrong value count for " + std::to_string(n) + "-port data: expected " +
                           std::to_string(per_point) + " values, found " + std::to_string(toks.size() - i),
                       toks[i].line);
    for (std::size_t k = i + 1; k < i + per_point; ++k)
      if (toks[k].line_start && (k - i - 1) % 2 == 1)
        throw ParseError("wrong value count for " + std::to_string(n) + "-port data: pair split across lines",
                         toks[k].line);
    if (i + per_point < toks.size() && !toks[i + per_point].line_start)
      throw ParseError("wrong value count for " + std::to_string(n) + "-port data: extra values",
                       toks[i + per_point].line);

    TouchstonePoint pt;
    pt.freq_hz = toks[i].value * doc.options.freq_scale;
    if (!doc.points.empty() && !(pt.freq_hz > doc.points.back().freq_hz))
      throw ParseError("frequencies must be strictly increasing", toks[i].line);
    pt.s.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t e = 0; e < n * n; ++e) {
      const double a = toks[i + 1 + 2 * e].value;
      const double b = toks[i + 2 + 2 * e].value;
      std::size_t row = e / n, col = e % n;
      if (n == 2) std::swap(row, col);  // v1 two-port order: S11 S21 S12 S22
      pt.s(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = decode_pair(doc.options.format, a, b);
    }
    doc.points.push_back(std::move(pt));
    i += per_point;
  }
  return doc;
}

std::size_t ports_from_extension(const std::filesystem::path& path) {
  const std::string ext = upper(path.extension().string());
  if (ext.size() < 4 || ext[1] != 'S' || ext.back() != 'P') return 0;
  const std::string digits = ext.substr(2, ext.size() - 3);
  std::size_t n = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return 0;
  return n;
}

TouchstoneDocument load_touchstone(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open Touchstone file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::size_t n_ext = ports_from_extension(path);
  try {
    return parse_touchstone(text, n_ext);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

std::string write_touchstone(const TouchstoneDocument& doc, const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "! " + c + "\n";
  out += "# Hz S RI R ";
  write_number(out, doc.options.z0_ohm);
  out += "\n";
  const std::size_t n = doc.n_ports;
  for (const auto& pt : doc.points) {
    write_number(out, pt.freq_hz);
    std::size_t on_line = 0;
    for (std::size_t e = 0; e < n * n; ++e) {
      std::size_t row = e / n, col = e % n;
      if (n == 2) std::swap(row, col);
      if (n > 2 && (col == 0 || on_line == 4) && e > 0) {
        out += "\n";
        on_line = 0;
      }
      const Complex v = pt.s(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
      out += ' ';
      write_number(out, v.real());
      out += ' ';
      write_number(out, v.imag());
      ++on_line;
    }
    out += "\n";
  }
  return out;
}

void save_touchstone(const std::filesystem::path& path, const TouchstoneDocument& doc,
                     const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write Touchstone file '" + path.string() + "'");
  out << write_touchstone(doc, comments);
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

TouchstoneDocument document_from_matrix(const ScatterMatrix& s) {
  TouchstoneDocument doc;
  doc.n_ports = static_cast<std::size_t>(s.size());
  doc.options.freq_unit = "HZ";
  doc.options.freq_scale = 1.0;
  doc.options.format = TouchstoneFormat::RI;
  doc.options.z0_ohm = s.z0_ohm();
  doc.points.push_back({s.freq_hz(), s.entries()});
  return doc;
}

ScatterMatrix matrix_at_frequency(const TouchstoneDocument& doc, double f_hz, double tol_hz,
                                  const std::vector<int>& element_numbers) {
  if (doc.points.empty()) throw FrequencyNotFoundError("Touchstone document has no data points");
  const TouchstonePoint* best = nullptr;
  for (const auto& pt : doc.points)
    if (std::abs(pt.freq_hz - f_hz) <= tol_hz && (!best || std::abs(pt.freq_hz - f_hz) < std::abs(best->freq_hz - f_hz)))
      best = &pt;
  if (!best) {
    std::ostringstream os;
    os << "no point within " << tol_hz << " Hz of " << f_hz << " Hz; available:";
    for (const auto& pt : doc.points) os << ' ' << pt.freq_hz;
    throw FrequencyNotFoundError(os.str());
  }
  std::vector<int> numbers = element_numbers;
  if (numbers.empty())
    for (std::size_t k = 0; k < doc.n_ports; ++k) numbers.push_back(static_cast<int>(k) + 1);
  if (numbers.size() != doc.n_ports)
    throw DimensionError("Touchstone file has " + std::to_string(doc.n_ports) + " ports but " +
                         std::to_string(numbers.size()) + " elements were given");
  return ScatterMatrix::ris_only(best->s, best->freq_hz, doc.options.z0_ohm, numbers);
}

std::vector<std::string> port_role_comments(const ScatterMatrix& s) {
  std::vector<std::string> out;
  const auto& roles = s.roles();
  for (std::size_t k = 0; k < roles.size(); ++k) {
    std::string r = roles[k].kind == PortKind::Tx   ? "Tx"
                     : roles[k].kind == PortKind::Rx ? "Rx"
                                                     : "RIS element " + std::to_string(roles[k].element);
    out.push_back("port " + std::to_string(k + 1) + ": " + r);
  }
  return out;
}

}  // namespace rislink
