#ifndef ROWNAV_TRIAL_CONFIG_H_
#define ROWNAV_TRIAL_CONFIG_H_

// TOML trial definitions and mission plan files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rownav/simulator.h"

namespace rownav {

struct TrialConfig {
  std::string name = "trial";
  std::optional<std::uint64_t> seed;
  LayoutSpec layout;
  std::vector<RowLine> explicit_rows;  // overrides the generated rows
  std::vector<int> lanes;              // empty: every layout row in order
  bool first_forward = true;
  double end_threshold = 12.0;
  std::optional<std::filesystem::path> plan_file;
  NoiseSpec noise;
  NavigatorConfig navigator;
  TrialScript script;
  InitialCondition initial;
  double time_limit = 3600.0;
  bool abort_on_fault = false;
  int max_interventions = 20;
  DepthOptions depth;
  SyntheticOptions synthetic;
  std::string source_text;  // the config file as read
};

// Throws ConfigError for syntax errors, unknown keys, wrong value types or
// missing referenced files. Relative paths resolve against `base_dir`.
TrialConfig ParseTrialConfig(std::string_view text,
                             const std::filesystem::path& base_dir = {});
TrialConfig LoadTrialConfig(const std::filesystem::path& file);

VineyardLayout MakeLayout(const TrialConfig& config);
MissionPlan MakePlan(const TrialConfig& config, const VineyardLayout& layout);
// Complete simulation setup; `seed` overrides the configured seed.
TrialSetup MakeSetup(const TrialConfig& config,
                     std::optional<std::uint64_t> seed = std::nullopt);

std::string PlanToToml(const MissionPlan& plan);
MissionPlan ParsePlanToml(std::string_view text);
MissionPlan LoadPlan(const std::filesystem::path& file);

}  // namespace rownav

#endif  // ROWNAV_TRIAL_CONFIG_H_
