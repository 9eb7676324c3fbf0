#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rislink/geometry.hpp"

namespace rislink {

/// Embedded-element pattern table, CSV with two sections:
///
///     m,azimuth_deg,gain_dbi
///     1,-90,-inf
///     1,0,5
///     ...
///     m,smm_re,smm_im
///     1,0.1667,0.8333
///
/// Blank lines and lines starting with '#' are ignored. Row order within a
/// section is free; each element must cover [-90, 90] deg and carry exactly
/// one s_mm row. Result is sorted by element number.
std::vector<ElementPattern> parse_pattern_table(std::string_view text);
std::vector<ElementPattern> load_pattern_table(const std::filesystem::path& path);

std::string write_pattern_table(const std::vector<ElementPattern>& patterns);

}  // namespace rislink
