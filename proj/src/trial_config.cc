#include "rownav/trial_config.h"

#include <fmt/format.h>

#include <set>

#include "rownav/errors.h"
#include "rownav/io.h"
#include "toml.hpp"

namespace rownav {
namespace {

// Typed access to one TOML table that remembers which keys were read, so
// that misspelled keys can be rejected.
class Section {
 public:
  Section(const toml::table* table, std::string name)
      : table_(table), name_(std::move(name)) {}

  bool present() const { return table_ != nullptr; }

  template <typename T>
  void Get(std::string_view key, T& out) {
    const toml::node* node = Node(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      const auto v = node->value_exact<bool>();
      if (!v) Fail(key, "a boolean");
      out = *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      const auto v = node->value_exact<std::string>();
      if (!v) Fail(key, "a string");
      out = *v;
    } else if constexpr (std::is_integral_v<T>) {
      const auto v = node->value_exact<std::int64_t>();
      if (!v) Fail(key, "an integer");
      out = static_cast<T>(*v);
    } else {
      const auto v = node->value<double>();
      if (!v || node->is_boolean()) Fail(key, "a number");
      out = *v;
    }
  }

  std::vector<double> Numbers(std::string_view key) {
    std::vector<double> out;
    const toml::node* node = Node(key);
    if (!node) return out;
    const toml::array* arr = node->as_array();
    if (!arr) Fail(key, "an array of numbers");
    for (const auto& el : *arr) {
      const auto v = el.value<double>();
      if (!v || el.is_boolean()) Fail(key, "an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<Section> Tables(std::string_view key) {
    std::vector<Section> out;
    const toml::node* node = Node(key);
    if (!node) return out;
    const toml::array* arr = node->as_array();
    if (!arr || !arr->is_array_of_tables()) Fail(key, "an array of tables");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      out.emplace_back(arr->get(i)->as_table(),
                       fmt::format("{}.{}[{}]", name_, key, i));
    }
    return out;
  }

  Section Sub(std::string_view key) {
    const toml::node* node = Node(key);
    if (!node) return {nullptr, ""};
    if (!node->is_table()) Fail(key, "a table");
    return {node->as_table(), name_.empty() ? std::string(key)
                                            : fmt::format("{}.{}", name_, key)};
  }

  void CheckUnknown() const {
    if (!table_) return;
    for (const auto& [key, node] : *table_) {
      if (!used_.count(std::string(key.str()))) {
        throw ConfigError(fmt::format("unknown key '{}' in [{}]", key.str(),
                                      name_.empty() ? "root" : name_));
      }
    }
  }

 private:
  const toml::node* Node(std::string_view key) {
    if (!table_) return nullptr;
    used_.insert(std::string(key));
    return table_->get(key);
  }

  [[noreturn]] void Fail(std::string_view key, std::string_view what) const {
    throw ConfigError(fmt::format("'{}' in [{}] must be {}", key,
                                  name_.empty() ? "root" : name_, what));
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

WorldPoint PointFrom(const std::vector<double>& v, std::string_view what) {
  if (v.size() != 2 && v.size() != 3) {
    throw ConfigError(fmt::format("{} must have 2 or 3 coordinates", what));
  }
  return {v[0], v[1], v.size() == 3 ? v[2] : 0.0};
}

toml::table Parse(std::string_view text) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(fmt::format("TOML syntax error at line {}: {}",
                                  e.source().begin.line, e.description()));
  }
}

void ReadLayout(Section s, TrialConfig& c) {
  if (!s.present()) return;
  std::string preset;
  s.Get("preset", preset);
  if (!preset.empty()) c.layout = PresetLayout(preset);
  s.Get("name", c.layout.name);
  s.Get("row_length", c.layout.row_length);
  s.Get("row_count", c.layout.row_count);
  s.Get("row_spacing", c.layout.row_spacing);
  s.Get("slope_deg", c.layout.slope_deg);
  s.Get("orientation_deg", c.layout.orientation_deg);
  const auto origin = s.Numbers("origin");
  if (!origin.empty()) {
    if (origin.size() != 2) throw ConfigError("layout.origin must be [east, north]");
    c.layout.origin_east = origin[0];
    c.layout.origin_north = origin[1];
  }
  for (auto& row : s.Tables("rows")) {
    c.explicit_rows.push_back({PointFrom(row.Numbers("start"), "row start"),
                               PointFrom(row.Numbers("end"), "row end")});
    row.CheckUnknown();
  }
  s.CheckUnknown();
}

void ReadPlan(Section s, const std::filesystem::path& base, TrialConfig& c) {
  if (!s.present()) return;
  for (double v : s.Numbers("lanes")) {
    if (v != std::floor(v)) throw ConfigError("plan.lanes must be integers");
    c.lanes.push_back(static_cast<int>(v));
  }
  s.Get("first_forward", c.first_forward);
  s.Get("end_threshold", c.end_threshold);
  std::string file;
  s.Get("file", file);
  if (!file.empty()) {
    c.plan_file = base / file;
    if (!std::filesystem::exists(*c.plan_file)) {
      throw ConfigError(fmt::format("plan file {} not found", c.plan_file->string()));
    }
  }
  s.CheckUnknown();
}

void ReadNoise(Section s, NoiseSpec& n) {
  if (!s.present()) return;
  s.Get("rtk_std", n.rtk_std);
  s.Get("coarse_std", n.coarse_std);
  s.Get("coarse_accuracy", n.coarse_accuracy);
  const auto bins = s.Numbers("heading_bin_stds_deg");
  if (!bins.empty()) {
    if (bins.size() != n.heading_bin_stds_deg.size()) {
      throw ConfigError("noise.heading_bin_stds_deg needs 5 values");
    }
    std::copy(bins.begin(), bins.end(), n.heading_bin_stds_deg.begin());
  }
  s.Get("lateral_std", n.lateral_std);
  s.Get("depth_std", n.depth_std);
  s.Get("depth_dropout_prob", n.depth_dropout_prob);
  s.Get("dropout_prob", n.dropout_prob);
  s.CheckUnknown();
}

void ReadController(Section s, NavigatorConfig& nav) {
  if (!s.present()) return;
  ControllerGains& g = nav.gains;
  s.Get("kp", g.kp);
  s.Get("kd", g.kd);
  s.Get("lookahead_d", g.lookahead_d);
  s.Get("v_nominal", g.v_nominal);
  s.Get("v_max", g.v_max);
  s.Get("omega_max", g.omega_max);
  s.Get("hold_timeout", nav.hold_timeout);
  s.CheckUnknown();
}

void ReadNavigator(Section s, NavigatorConfig& n) {
  if (!s.present()) return;
  s.Get("detection_timeout", n.detection_timeout);
  s.Get("stale_gps_age", n.stale_gps_age);
  s.Get("bev_max_range", n.bev_max_range);
  s.Get("side_max_range", n.side_max_range);
  s.Get("min_confidence", n.min_confidence);
  s.Get("min_rows", n.min_rows);
  s.Get("row_end_jump_ratio", n.row_end.jump_ratio);
  s.Get("row_end_min_valid", n.row_end.min_valid);
  s.Get("row_end_baseline_window", n.row_end.baseline_window);
  s.Get("row_end_min_baseline_frames", n.row_end.min_baseline_frames);
  s.Get("row_end_overrun", n.row_end_overrun);
  s.Get("omega_turn", n.omega_turn);
  s.Get("omega_fine", n.omega_fine);
  s.Get("center_band", n.center_band);
  s.Get("settle_frames", n.settle_frames);
  s.Get("align_tolerance_deg", n.align_tolerance_deg);
  s.Get("turn_angle_guard", n.turn_angle_guard);
  s.Get("turn_time_guard", n.turn_time_guard);
  s.Get("v_traverse", n.v_traverse);
  s.Get("traverse_stop_m", n.traverse_stop_m);
  s.Get("wrong_row_tolerance", n.wrong_row_tolerance);
  s.Get("traverse_overrun", n.traverse_overrun);
  s.CheckUnknown();
}

void ReadScript(Section s, TrialScript& script) {
  if (!s.present()) return;
  for (auto& t : s.Tables("heading_override")) {
    HeadingOverride o;
    t.Get("start", o.start);
    t.Get("duration", o.duration);
    t.Get("omega", o.omega);
    t.CheckUnknown();
    script.heading_overrides.push_back(o);
  }
  for (auto& t : s.Tables("dropout")) {
    PerceptionDropout d;
    t.Get("start", d.start);
    t.Get("duration", d.duration);
    t.CheckUnknown();
    script.dropouts.push_back(d);
  }
  for (auto& t : s.Tables("noise_boost")) {
    NoiseBoost b;
    t.Get("lane", b.lane);
    t.Get("from_m", b.from_m);
    t.Get("to_m", b.to_m);
    t.Get("scale", b.scale);
    t.CheckUnknown();
    script.noise_boosts.push_back(b);
  }
  for (double v : s.Numbers("misdetect_next_row")) {
    script.misdetect_next_row.push_back(static_cast<int>(v));
  }
  for (double v : s.Numbers("suppress_row_end")) {
    script.suppress_row_end.push_back(static_cast<int>(v));
  }
  s.CheckUnknown();
}

}  // namespace

TrialConfig ParseTrialConfig(std::string_view text,
                             const std::filesystem::path& base_dir) {
  const toml::table root_table = Parse(text);
  Section root(&root_table, "");
  TrialConfig c;
  c.source_text = std::string(text);

  Section trial = root.Sub("trial");
  if (trial.present()) {
    trial.Get("name", c.name);
    std::int64_t seed = -1;
    trial.Get("seed", seed);
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
    trial.Get("time_limit", c.time_limit);
    trial.Get("abort_on_fault", c.abort_on_fault);
    trial.Get("max_interventions", c.max_interventions);
    trial.CheckUnknown();
  }
  ReadLayout(root.Sub("layout"), c);
  ReadPlan(root.Sub("plan"), base_dir, c);
  ReadNoise(root.Sub("noise"), c.noise);
  ReadController(root.Sub("controller"), c.navigator);
  ReadNavigator(root.Sub("navigator"), c.navigator);
  Section initial = root.Sub("initial");
  if (initial.present()) {
    initial.Get("along", c.initial.along);
    initial.Get("lateral", c.initial.lateral);
    initial.Get("heading_deg", c.initial.heading_deg);
    initial.CheckUnknown();
  }
  Section sensors = root.Sub("sensors");
  if (sensors.present()) {
    sensors.Get("depth_rays", c.depth.rays);
    sensors.Get("depth_max_range", c.depth.max_range);
    sensors.Get("render_range", c.synthetic.render_range);
    sensors.Get("sigma_px", c.synthetic.sigma_px);
    sensors.CheckUnknown();
  }
  ReadScript(root.Sub("script"), c.script);
  root.CheckUnknown();

  c.noise.Validate();
  c.navigator.Validate();
  return c;
}

TrialConfig LoadTrialConfig(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) {
    throw ConfigError(fmt::format("config file {} not found", file.string()));
  }
  return ParseTrialConfig(ReadTextFile(file), file.parent_path());
}

VineyardLayout MakeLayout(const TrialConfig& config) {
  if (config.explicit_rows.empty()) return BuildLayout(config.layout);
  VineyardLayout layout;
  layout.name = config.layout.name;
  layout.rows = config.explicit_rows;
  layout.row_spacing = config.layout.row_spacing;
  layout.slope = DegToRad(config.layout.slope_deg);
  layout.Validate();
  return layout;
}

MissionPlan MakePlan(const TrialConfig& config, const VineyardLayout& layout) {
  if (config.plan_file) return LoadPlan(*config.plan_file);
  std::vector<int> lanes = config.lanes;
  if (lanes.empty()) {
    for (std::size_t i = 0; i < layout.rows.size(); ++i) {
      lanes.push_back(static_cast<int>(i));
    }
  }
  return SerpentinePlan(layout, lanes, config.first_forward,
                        config.end_threshold);
}

TrialSetup MakeSetup(const TrialConfig& config,
                     std::optional<std::uint64_t> seed) {
  TrialSetup setup;
  setup.layout = MakeLayout(config);
  setup.plan = MakePlan(config, setup.layout);
  setup.noise = config.noise;
  setup.navigator = config.navigator;
  setup.script = config.script;
  setup.initial = config.initial;
  const auto chosen = seed ? seed : config.seed;
  if (!chosen) throw ConfigError("a seed is required (config or --seed)");
  setup.seed = *chosen;
  setup.noise.seed = *chosen;
  setup.time_limit = config.time_limit;
  setup.abort_on_fault = config.abort_on_fault;
  setup.max_interventions = config.max_interventions;
  setup.depth = config.depth;
  setup.synthetic = config.synthetic;
  setup.Validate();
  return setup;
}

namespace {

// Shortest round-trip text for a TOML float; whole numbers keep a ".0".
std::string TomlFloat(double x) {
  std::string s = fmt::format("{}", x);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string PlanToToml(const MissionPlan& plan) {
  std::string out = "# rownav mission plan, ENU meters\n";
  out += fmt::format("row_spacing = {}\nend_threshold = {}\n",
                     TomlFloat(plan.row_spacing), TomlFloat(plan.end_threshold));
  for (const auto& row : plan.rows) {
    out += fmt::format(
        "\n[[rows]]\nlane = {}\nstart = [{}, {}, {}]\n"
        "end = [{}, {}, {}]\nturn = \"{}\"\n",
        row.lane, TomlFloat(row.start.east), TomlFloat(row.start.north),
        TomlFloat(row.start.up), TomlFloat(row.end.east), TomlFloat(row.end.north),
        TomlFloat(row.end.up), TurnDirectionName(row.turn));
  }
  return out;
}

MissionPlan ParsePlanToml(std::string_view text) {
  const toml::table table = Parse(text);
  Section root(&table, "");
  MissionPlan plan;
  root.Get("row_spacing", plan.row_spacing);
  root.Get("end_threshold", plan.end_threshold);
  for (auto& t : root.Tables("rows")) {
    MissionRow row;
    t.Get("lane", row.lane);
    row.start = PointFrom(t.Numbers("start"), "plan row start");
    row.end = PointFrom(t.Numbers("end"), "plan row end");
    std::string turn = "left";
    t.Get("turn", turn);
    row.turn = TurnDirectionFromName(turn);
    t.CheckUnknown();
    plan.rows.push_back(row);
  }
  root.CheckUnknown();
  plan.Validate();
  return plan;
}

MissionPlan LoadPlan(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) {
    throw ConfigError(fmt::format("plan file {} not found", file.string()));
  }
  return ParsePlanToml(ReadTextFile(file));
}

}  // namespace rownav
