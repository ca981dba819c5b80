#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "hfvrom/cases.hpp"
#include "hfvrom/pipeline.hpp"

namespace hfvrom {

/// Everything a command needs besides its input artifacts. Unset optionals
/// take the case preset.
struct RunConfig {
  std::string case_name;
  int n = 0;                       // cube subdivisions; ignored when mesh_path is set
  std::filesystem::path mesh_path;  // optional mesh file
  std::filesystem::path output = "out";

  std::optional<double> rho, mu, diffusivity;
  std::optional<double> cfl, t_end, snapshot_interval;
  std::optional<double> kappa_wu, kappa_pi, kappa_wy;
  BasisCounts counts;
  RomRunSettings rom;
  double tolerance = 1e-10;

  /// Case preset with the overrides applied and validated.
  CaseDefinition make_case() const;
};

/// INI text with [case], [fluid], [time], [pod], [rom] and [solver] sections.
/// Unknown sections or keys, bad values and missing required keys raise
/// config-error naming the key and line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Human-readable key list with defaults, for --help.
std::string config_reference();

}  // namespace hfvrom
