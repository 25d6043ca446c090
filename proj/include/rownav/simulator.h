#ifndef ROWNAV_SIMULATOR_H_
#define ROWNAV_SIMULATOR_H_

// Deterministic kinematic vineyard: planar sloped terrain, straight rows,
// unicycle robot, synthetic GPS, side depth and heatmap sensors.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rownav/annotation.h"
#include "rownav/control.h"
#include "rownav/navigator.h"
#include "rownav/perception.h"

namespace rownav {

struct LayoutSpec {
  std::string name = "custom";
  double row_length = 120.0;   // m
  int row_count = 4;
  double row_spacing = 2.7;    // m
  double slope_deg = 0.0;      // terrain grade along the rows
  double orientation_deg = 0.0;  // row direction, CCW from east
  double origin_east = 0.0;
  double origin_north = 0.0;
};

// CRT (120 m, 10 deg slope, east-west), VG3 (90 m, 10 deg slope,
// east-west), RN (70 m, flat, north-south). All with 4 rows 2.7 m apart.
LayoutSpec PresetLayout(std::string_view name);

struct VineyardLayout {
  std::string name;
  std::vector<RowLine> rows;  // driving lanes between vine rows
  double row_spacing = 2.7;
  double slope = 0.0;         // rad, grade along the row direction

  // Throws ConfigError unless rows are near-parallel (within 5 deg), evenly
  // spaced by more than the robot width, and lie on the terrain.
  void Validate() const;
  Eigen::Vector2d RowDirection() const;  // unit, start to end of rows[0]
  double Height(double east, double north) const;
  TerrainHeight Terrain() const;
  // Vine rows, modeled as vertical walls, on both sides of every lane.
  std::vector<RowLine> VineWalls() const;
  std::optional<RowLine> Lane(int index) const;
};

VineyardLayout BuildLayout(const LayoutSpec& spec);

// Serpentine plan over `lanes` (consecutive, adjacent), starting at the
// row start of the first lane when `first_forward`, else at its end.
MissionPlan SerpentinePlan(const VineyardLayout& layout,
                           const std::vector<int>& lanes, bool first_forward,
                           double end_threshold = 12.0);

struct RobotState {
  WorldPose pose;
  double v = 0.0;
  double omega = 0.0;
  double time = 0.0;
};

// Exact unicycle integration in the horizontal plane (arc for omega != 0).
// Height, pitch and roll are left unchanged. Throws ConfigError unless dt
// is in (0, 0.2].
RobotState Integrate(const RobotState& state, const VelocityCommand& cmd,
                     double dt);

// Places a horizontal pose on the terrain: sets height and the pitch and
// roll of a robot standing on the plane.
WorldPose SettleOnTerrain(const VineyardLayout& layout, WorldPose pose);

// True position plus Gaussian noise: RTK noise on all three axes, coarse
// noise on east and north only. Coarse fixes report the configured accuracy.
GpsFix SampleGps(const RobotState& state, GpsKind kind, const NoiseSpec& noise,
                 Rng& rng);

struct DepthOptions {
  int rays = 64;
  double max_range = 10.0;   // m, reported where no wall is hit
  bool extend_walls = false; // walls without ends (suppressed row end)
};

// Horizontal ray cast from the camera across its field of view against the
// vine walls. Depth is measured along the optical axis.
DepthProfile SampleSideDepth(const RobotState& state,
                             const VineyardLayout& layout,
                             const CameraModel& cam, const NoiseSpec& noise,
                             Rng& rng, const DepthOptions& options = {});

struct HeadingOverride {
  double start = 0.0;     // s
  double duration = 0.0;  // s
  double omega = 0.0;     // rad/s, replaces the commanded rate
};

struct PerceptionDropout {
  double start = 0.0;
  double duration = 0.0;
};

// Detection noise multiplied by `scale` while the robot is within
// [from_m, to_m] of the start of layout lane `lane` (distance along it).
struct NoiseBoost {
  int lane = 0;
  double from_m = 0.0;
  double to_m = 0.0;
  double scale = 1.0;
};

struct TrialScript {
  std::vector<HeadingOverride> heading_overrides;
  std::vector<PerceptionDropout> dropouts;
  std::vector<NoiseBoost> noise_boosts;
  std::vector<int> misdetect_next_row;  // plan row indices
  std::vector<int> suppress_row_end;    // plan row indices
};

struct InitialCondition {
  double along = 0.0;        // m from the first row start
  double lateral = 0.0;      // m, left of the row positive
  double heading_deg = 0.0;  // relative to the row direction
};

struct TrialSetup {
  VineyardLayout layout;
  MissionPlan plan;
  NoiseSpec noise;
  NavigatorConfig navigator;
  TrialScript script;
  InitialCondition initial;
  std::uint64_t seed = 1;
  double time_limit = 3600.0;  // s of simulated time
  bool abort_on_fault = false;
  int max_interventions = 20;
  DepthOptions depth;
  SyntheticOptions synthetic;

  void Validate() const;
};

// Simulation rates: base step 1/30 s, control and perception every second
// step (15 Hz), GPS every third step (10 Hz).
inline constexpr int kTicksPerSecond = 30;
inline constexpr int kControlEvery = 2;
inline constexpr int kGpsEvery = 3;

struct TrajectorySample {
  double time = 0.0;
  WorldPose pose;
  VelocityCommand command;
  NavPhase phase = NavPhase::kRowTracking;
  int row_index = 0;
};

struct CommandSample {
  double time = 0.0;
  VelocityCommand command;
  std::optional<ReferenceErrors> errors;
};

// Ground-truth alignment at the end of a turn.
struct TransitionCheck {
  double time = 0.0;
  int row_index = 0;
  NavPhase from = NavPhase::kTurnOut;
  NavPhase to = NavPhase::kTraverse;
  double error_deg = 0.0;  // absolute
};

struct TrialLog {
  std::vector<TrajectorySample> trajectory;  // 15 Hz
  std::vector<GpsFix> gps;                   // 10 Hz, RTK then coarse per tick
  std::vector<CommandSample> commands;
  std::vector<NavEvent> events;
  std::vector<TransitionCheck> transitions;
  int interventions = 0;
  int rows_completed = 0;
  bool completed = false;
  bool aborted = false;
  double sim_time = 0.0;
};

TrialLog RunTrial(const TrialSetup& setup);

// Turns a trial into an annotation input: the camera pose stream and frame
// stamps of the first `max_frames` control steps, plus the RTK track as the
// recorded path.
struct Recording {
  RecordingLog log;
  PathPolyline path;
};
Recording MakeRecording(const TrialLog& log, const CameraModel& camera,
                        int max_frames);

}  // namespace rownav

#endif  // ROWNAV_SIMULATOR_H_
