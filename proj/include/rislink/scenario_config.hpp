#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rislink/geometry.hpp"
#include "rislink/optimizer.hpp"
#include "rislink/units.hpp"

namespace rislink {

/// Where the RIS-only matrix comes from: a Touchstone export or the
/// synthetic coupling model.
struct RisSource {
  std::optional<std::filesystem::path> touchstone;
  std::optional<CouplingModel> synth;
};

struct SweepGrid {
  double alpha_min_rad = deg_to_rad(-89.0);
  double alpha_max_rad = deg_to_rad(89.0);
  double alpha_step_rad = deg_to_rad(1.0);

  /// Inclusive grid alpha_min, alpha_min + step, ... <= alpha_max.
  /// Throws ConfigError when empty.
  std::vector<double> alphas() const;
};

/// Parsed scenario configuration. Paths are resolved against the directory
/// of the configuration file.
struct ScenarioConfig {
  Scenario scenario;
  std::optional<LoadBounds> bounds;
  VaractorModel varactor;
  double z0_ohm = 50.0;
  RisSource ris;
  std::optional<std::filesystem::path> patterns;
  OptimizerOptions optimizer;
  SweepGrid sweep;
  std::filesystem::path output_dir = ".";
  /// Key/value pairs exactly as read, in file order.
  std::vector<std::pair<std::string, std::string>> entries;
};

/// Parse `key = value unit` lines. `base_dir` resolves relative paths;
/// `check_files` verifies referenced files exist.
ScenarioConfig load_scenario(std::string_view config_text, const std::filesystem::path& base_dir = ".",
                             bool check_files = true);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

}  // namespace rislink
