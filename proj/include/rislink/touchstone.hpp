#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rislink/network.hpp"

namespace rislink {

enum class TouchstoneFormat { RI, MA, DB };

/// Contents of the `#` option line, with Touchstone v1 defaults.
struct TouchstoneOptions {
  std::string freq_unit = "GHZ";
  double freq_scale = 1e9;
  char parameter = 'S';
  TouchstoneFormat format = TouchstoneFormat::MA;
  double z0_ohm = 50.0;
};

struct TouchstonePoint {
  double freq_hz = 0.0;
  CMatrix s;
};

struct TouchstoneDocument {
  std::size_t n_ports = 0;
  TouchstoneOptions options;  // as read; the writer always emits Hz / RI
  std::vector<TouchstonePoint> points;

  /// Same port count, reference impedance, frequencies and matrices (exact).
  bool same_data(const TouchstoneDocument& other) const;
};

/// Parse Touchstone v1 text. `n_ports` = 0 infers the port count from the
/// line layout of the first data point. Throws ParseError with the line
/// number of the offending input.
TouchstoneDocument parse_touchstone(std::string_view text, std::size_t n_ports = 0);

/// Port count encoded in a `.sNp` extension, or 0 when there is none.
std::size_t ports_from_extension(const std::filesystem::path& path);

/// Read and parse a file; the port count comes from the extension when present.
TouchstoneDocument load_touchstone(const std::filesystem::path& path);

/// Serialize as `# Hz S RI R <z0>` with round-trip exact decimals.
/// `comments` are emitted as leading `!` lines.
std::string write_touchstone(const TouchstoneDocument& doc, const std::vector<std::string>& comments = {});

void save_touchstone(const std::filesystem::path& path, const TouchstoneDocument& doc,
                     const std::vector<std::string>& comments = {});

/// Single-point document holding `s`.
TouchstoneDocument document_from_matrix(const ScatterMatrix& s);

/// RIS-only matrix at the point within `tol_hz` of `f_hz`. Ports are
/// numbered 1..n unless `element_numbers` is given. No interpolation.
ScatterMatrix matrix_at_frequency(const TouchstoneDocument& doc, double f_hz, double tol_hz,
                                  const std::vector<int>& element_numbers = {});

/// Port role comments ("port k: Tx" ...) for a full-link matrix.
std::vector<std::string> port_role_comments(const ScatterMatrix& s);

}  // namespace rislink
