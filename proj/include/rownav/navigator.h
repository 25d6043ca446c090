#ifndef ROWNAV_NAVIGATOR_H_
#define ROWNAV_NAVIGATOR_H_

// Field-level state machine: row tracking, end-of-row approach with the back
// camera, two in-place turns around a straight cross-row traverse, repeated
// over a serpentine mission plan.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rownav/control.h"
#include "rownav/geometry.h"
#include "rownav/perception.h"

namespace rownav {

enum class NavPhase {
  kRowTracking = 0,
  kEndApproach = 1,
  kTurnOut = 2,
  kTraverse = 3,
  kTurnIn = 4,
  kFault = 5,
  kCompleted = 6,
};
std::string_view NavPhaseName(NavPhase phase);

enum class TurnDirection { kLeft, kRight };
std::string_view TurnDirectionName(TurnDirection turn);
TurnDirection TurnDirectionFromName(std::string_view name);
// Side camera facing the turn direction.
CameraId TurnCamera(TurnDirection turn);

struct MissionRow {
  int lane = 0;           // row index in the layout
  WorldPoint start;       // where the robot enters the row
  WorldPoint end;         // pre-surveyed far endpoint
  TurnDirection turn = TurnDirection::kLeft;  // turn taken at `end`
};

struct MissionPlan {
  std::vector<MissionRow> rows;
  double row_spacing = 2.7;     // m
  double end_threshold = 12.0;  // m, coarse-GPS distance to the row end

  // Throws ConfigError when the plan is empty, consecutive lanes are not
  // adjacent, travel directions do not alternate, or a turn does not lead
  // towards the next row.
  void Validate() const;
};

enum class GpsKind { kRtk, kCoarse };
std::string_view GpsKindName(GpsKind kind);

struct GpsFix {
  double time = 0.0;
  GpsKind kind = GpsKind::kCoarse;
  WorldPoint position;
  double accuracy = 5.0;  // m, > 0
};

enum class EndTrigger { kFar, kReached, kStaleFix };

// kReached when the fix lies within `threshold` of the row's far endpoint
// (horizontal distance); kStaleFix when the fix is older than `max_age`.
EndTrigger CheckEndTrigger(const GpsFix& fix, const MissionRow& row,
                           double threshold, double now, double max_age = 2.0);

struct NavigatorConfig {
  ControllerGains gains;
  double hold_timeout = 0.5;        // s of command hold after a lost detection
  double detection_timeout = 5.0;   // s without detection before a fault
  double stale_gps_age = 2.0;       // s
  double bev_max_range = 15.0;      // m, row tracking
  double side_max_range = 20.0;     // m, turns and traverse
  double min_confidence = kDefaultMinConfidence;
  int min_rows = kDefaultMinRows;
  RowEndConfig row_end;
  double row_end_overrun = 30.0;    // m of travel in state 1 before a fault
  double omega_turn = 0.5;          // rad/s
  double omega_fine = 0.1;          // rad/s, alignment corrections
  double center_band = 0.05;        // normalized centering offset
  int settle_frames = 12;
  double align_tolerance_deg = 0.6;
  double turn_angle_guard = 1.5;    // multiple of the nominal 90 degrees
  double turn_time_guard = 3.0;     // multiple of the nominal turn duration
  double v_traverse = 0.4;          // m/s
  double traverse_stop_m = 0.04;
  double wrong_row_tolerance = 0.4; // fraction of the row spacing
  double traverse_overrun = 2.0;    // multiple of the row spacing
  double control_period = 1.0 / 15.0;
  std::array<CameraModel, 4> cameras = {
      DefaultCamera(CameraId::kFront), DefaultCamera(CameraId::kBack),
      DefaultCamera(CameraId::kLeft), DefaultCamera(CameraId::kRight)};

  void Validate() const;
};

// Sensor inputs for one control step. Missing streams are nullopt.
struct SensorFrame {
  double time = 0.0;
  std::optional<GpsFix> coarse_fix;  // latest available
  WorldPose odometry;                // relative motion only is used
  std::array<std::optional<HeatmapResult>, 4> heatmaps;  // by CameraId
  std::array<std::optional<DepthProfile>, 4> depth;      // by CameraId
};

// Streams the navigator needs for its next step.
struct Requirements {
  std::vector<CameraId> heatmap_cameras;
  std::optional<CameraId> depth_camera;
  int target_lane = 0;
};

struct NavEvent {
  double time = 0.0;
  NavPhase phase = NavPhase::kRowTracking;  // phase after the event
  std::string event;
  std::string reason;
};

struct StepResult {
  VelocityCommand command;
  NavPhase phase = NavPhase::kRowTracking;
  std::vector<NavEvent> events;
  // Tracking errors used for the command, when a reference was available.
  std::optional<ReferenceErrors> errors;
};

class Navigator {
 public:
  Navigator(MissionPlan plan, NavigatorConfig config = {});

  StepResult Step(const SensorFrame& frame);
  Requirements requirements() const;

  // Restarts row tracking on plan row `row_index` (after an intervention).
  void ResumeAt(int row_index, double time, std::vector<NavEvent>* events);

  NavPhase phase() const { return phase_; }
  int row_index() const { return row_index_; }
  const MissionPlan& plan() const { return plan_; }
  const NavigatorConfig& config() const { return config_; }
  bool last_row() const;

 private:
  enum class TurnStage { kRotating, kSettling, kCorrecting };

  struct TurnState {
    TurnStage stage = TurnStage::kRotating;
    double rotated = 0.0;        // rad, absolute accumulated rotation
    double started = 0.0;        // s
    int settle_count = 0;
    std::vector<double> headings;
    double correction_left = 0.0;  // rad, signed
  };

  void Enter(NavPhase next, double time, std::string event, std::string reason,
             std::vector<NavEvent>* events);
  void Fail(double time, std::string reason, std::vector<NavEvent>* events);

  StepResult TrackRow(const SensorFrame& frame, bool use_back);
  StepResult Turn(const SensorFrame& frame, CameraId camera, NavPhase next);
  StepResult Traverse(const SensorFrame& frame);

  std::optional<ImagePath> Extract(const SensorFrame& frame, CameraId id) const;
  // Line fitted to the path of `id` in the ground frame below the camera,
  // with x along the camera's viewing direction.
  std::optional<LineFit> CameraLine(const ImagePath& path, CameraId id) const;
  VelocityCommand HandleLoss(double time, std::vector<NavEvent>* events);
  void UpdateOdometry(const WorldPose& odom);
  TurnDirection current_turn() const;

  MissionPlan plan_;
  NavigatorConfig config_;
  std::vector<GroundHomography> robot_ground_;   // by CameraId
  std::vector<GroundHomography> camera_ground_;  // by CameraId
  PathFollower follower_;
  RowEndDetector row_end_;

  NavPhase phase_ = NavPhase::kRowTracking;
  int row_index_ = 0;
  double phase_start_time_ = 0.0;
  std::optional<WorldPose> last_odom_;
  double phase_travel_ = 0.0;
  double last_rotation_ = 0.0;   // signed heading change of the last step
  std::optional<double> last_valid_time_;
  bool hold_reported_ = false;
  bool stale_reported_ = false;
  TurnState turn_;
  std::optional<double> traverse_initial_sign_;
};

}  // namespace rownav

#endif  // ROWNAV_NAVIGATOR_H_
