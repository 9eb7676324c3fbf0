#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rislink/brcs.hpp"
#include "rislink/geometry.hpp"
#include "rislink/optimizer.hpp"
#include "rislink/scenario_config.hpp"

namespace rislink::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Command-line overrides applied on top of the configuration file.
struct Overrides {
  std::optional<double> alpha_deg;
  std::optional<double> beta_deg;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

/// Everything a command needs after ingestion.
struct Pipeline {
  std::filesystem::path config_path;
  ScenarioConfig config;
  ScatterMatrix ris;
  std::vector<ElementPattern> patterns;  // in RIS port order
  std::vector<std::filesystem::path> inputs;
};

Pipeline prepare(const std::filesystem::path& config_path, const Overrides& overrides, std::ostream& log);

/// Writes link.s<N+2>p and manifest_synthesize.json; returns the Touchstone path.
std::filesystem::path cmd_synthesize(const std::filesystem::path& config_path, const Overrides& overrides,
                                     std::ostream& log);

/// Writes caps.csv, optimize_report.json and manifest_optimize.json; returns the CSV path.
std::filesystem::path cmd_optimize(const std::filesystem::path& config_path, const Overrides& overrides,
                                   std::ostream& log);

/// Writes brcs.csv (RIS curve when caps are given, plus the reflector
/// reference) and manifest_sweep.json; returns the CSV path.
std::filesystem::path cmd_sweep(const std::filesystem::path& config_path,
                                const std::optional<std::filesystem::path>& caps_csv, const Overrides& overrides,
                                std::ostream& log);

/// caps.csv content: header m,C_pF,gamma_re,gamma_im.
std::string format_caps_csv(const std::vector<int>& element_numbers, const LoadVector& caps, double freq_hz,
                            double z0_ohm, const VaractorModel& model);
/// Capacitances from a caps CSV, ordered as `element_numbers`.
LoadVector read_caps_csv(const std::filesystem::path& path, const std::vector<int>& element_numbers);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rislink::cli
