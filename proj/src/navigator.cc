#include "rownav/navigator.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rownav/errors.h"

namespace rownav {
namespace {

constexpr double kQuarterTurn = kPi / 2.0;

double Horizontal(const WorldPoint& a, const WorldPoint& b) {
  return std::hypot(b.east - a.east, b.north - a.north);
}

Eigen::Vector2d Direction(const MissionRow& row) {
  return Eigen::Vector2d(row.end.east - row.start.east,
                         row.end.north - row.start.north)
      .normalized();
}

double Sign(TurnDirection turn) {
  return turn == TurnDirection::kLeft ? 1.0 : -1.0;
}

std::size_t Index(CameraId id) { return static_cast<std::size_t>(id); }

// Camera pose over a ground frame centered below the camera and aligned
// with its viewing direction.
WorldPose CameraOverGround(const CameraMount& mount) {
  WorldPose pose;
  pose.position.up = mount.offset.z();
  pose.pitch = mount.pitch;
  pose.roll = mount.roll;
  return pose;
}

}  // namespace

std::string_view NavPhaseName(NavPhase phase) {
  switch (phase) {
    case NavPhase::kRowTracking:
      return "row_tracking";
    case NavPhase::kEndApproach:
      return "end_approach";
    case NavPhase::kTurnOut:
      return "turn_out";
    case NavPhase::kTraverse:
      return "traverse";
    case NavPhase::kTurnIn:
      return "turn_in";
    case NavPhase::kFault:
      return "fault";
    case NavPhase::kCompleted:
      return "completed";
  }
  return "unknown";
}

std::string_view TurnDirectionName(TurnDirection turn) {
  return turn == TurnDirection::kLeft ? "left" : "right";
}

TurnDirection TurnDirectionFromName(std::string_view name) {
  if (name == "left") return TurnDirection::kLeft;
  if (name == "right") return TurnDirection::kRight;
  throw ConfigError(fmt::format("unknown turn direction '{}'", name));
}

CameraId TurnCamera(TurnDirection turn) {
  return turn == TurnDirection::kLeft ? CameraId::kLeft : CameraId::kRight;
}

std::string_view GpsKindName(GpsKind kind) {
  return kind == GpsKind::kRtk ? "rtk" : "coarse";
}

void MissionPlan::Validate() const {
  if (rows.empty()) throw ConfigError("mission plan has no rows");
  if (!(row_spacing > 0.0) || !(end_threshold > 0.0)) {
    throw ConfigError("row spacing and end threshold must be positive");
  }
  for (const auto& row : rows) {
    if (Horizontal(row.start, row.end) <= end_threshold) {
      throw ConfigError(fmt::format("row {} is shorter than the end threshold",
                                    row.lane));
    }
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const MissionRow& prev = rows[i - 1];
    const MissionRow& next = rows[i];
    if (std::abs(next.lane - prev.lane) != 1) {
      throw ConfigError(fmt::format("rows {} and {} are not adjacent",
                                    prev.lane, next.lane));
    }
    const Eigen::Vector2d d0 = Direction(prev);
    if (d0.dot(Direction(next)) > -std::cos(DegToRad(5.0))) {
      throw ConfigError("consecutive rows must be traversed in opposite directions");
    }
    const Eigen::Vector2d step(next.start.east - prev.end.east,
                               next.start.north - prev.end.north);
    const double side = d0.x() * step.y() - d0.y() * step.x();
    if (side * Sign(prev.turn) <= 0.0) {
      throw ConfigError(fmt::format("turn after row {} does not lead to row {}",
                                    prev.lane, next.lane));
    }
  }
}

EndTrigger CheckEndTrigger(const GpsFix& fix, const MissionRow& row,
                           double threshold, double now, double max_age) {
  if (now - fix.time > max_age) return EndTrigger::kStaleFix;
  return Horizontal(fix.position, row.end) < threshold ? EndTrigger::kReached
                                                       : EndTrigger::kFar;
}

void NavigatorConfig::Validate() const {
  gains.Validate();
  const bool ok = hold_timeout >= 0 && detection_timeout > hold_timeout &&
                  stale_gps_age > 0 && bev_max_range > 0 && side_max_range > 0 &&
                  row_end_overrun > 0 && omega_turn > 0 && omega_fine > 0 &&
                  center_band > 0 && settle_frames > 0 &&
                  align_tolerance_deg > 0 && turn_angle_guard > 1 &&
                  turn_time_guard > 1 && v_traverse > 0 &&
                  traverse_stop_m > 0 && wrong_row_tolerance > 0 &&
                  wrong_row_tolerance < 1 && traverse_overrun > 1 &&
                  control_period > 0;
  if (!ok) throw ConfigError("navigator configuration out of range");
  for (const auto& cam : cameras) cam.Validate();
}

Navigator::Navigator(MissionPlan plan, NavigatorConfig config)
    : plan_(std::move(plan)),
      config_(std::move(config)),
      follower_(config_.gains, config_.hold_timeout),
      row_end_(config_.row_end) {
  plan_.Validate();
  config_.Validate();
  for (std::size_t i = 0; i < config_.cameras.size(); ++i) {
    CameraModel& cam = config_.cameras[i];
    if (Index(cam.id) != i) throw ConfigError("cameras must be ordered by id");
    robot_ground_.emplace_back(cam, MountPose(cam.mount));
    camera_ground_.emplace_back(cam, CameraOverGround(cam.mount));
  }
}

bool Navigator::last_row() const {
  return row_index_ + 1 == static_cast<int>(plan_.rows.size());
}

TurnDirection Navigator::current_turn() const {
  return plan_.rows[row_index_].turn;
}

Requirements Navigator::requirements() const {
  Requirements req;
  const int lane = plan_.rows[row_index_].lane;
  const int next_lane = last_row() ? lane : plan_.rows[row_index_ + 1].lane;
  const CameraId side = TurnCamera(current_turn());
  req.target_lane = lane;
  switch (phase_) {
    case NavPhase::kRowTracking:
      req.heatmap_cameras = {CameraId::kFront};
      break;
    case NavPhase::kEndApproach:
      req.heatmap_cameras = {CameraId::kBack};
      req.depth_camera = side;
      break;
    case NavPhase::kTurnOut:
      req.heatmap_cameras = {side};
      break;
    case NavPhase::kTraverse:
      req.heatmap_cameras = {side};
      req.target_lane = next_lane;
      break;
    case NavPhase::kTurnIn:
      req.heatmap_cameras = {CameraId::kFront};
      req.target_lane = next_lane;
      break;
    case NavPhase::kFault:
    case NavPhase::kCompleted:
      break;
  }
  return req;
}

void Navigator::Enter(NavPhase next, double time, std::string event,
                      std::string reason, std::vector<NavEvent>* events) {
  phase_ = next;
  phase_start_time_ = time;
  phase_travel_ = 0.0;
  turn_ = TurnState{};
  turn_.started = time;
  traverse_initial_sign_.reset();
  last_valid_time_.reset();
  hold_reported_ = false;
  stale_reported_ = false;
  follower_.Reset();
  if (next == NavPhase::kEndApproach) row_end_.Reset();
  events->push_back({time, next, std::move(event), std::move(reason)});
}

void Navigator::Fail(double time, std::string reason,
                     std::vector<NavEvent>* events) {
  const std::string from(NavPhaseName(phase_));
  Enter(NavPhase::kFault, time, "fault", std::move(reason), events);
  events->back().reason += fmt::format(" (in {})", from);
}

void Navigator::ResumeAt(int row_index, double time,
                         std::vector<NavEvent>* events) {
  if (row_index < 0 || row_index >= static_cast<int>(plan_.rows.size())) {
    throw ConfigError(fmt::format("row index {} outside the plan", row_index));
  }
  row_index_ = row_index;
  last_odom_.reset();
  Enter(NavPhase::kRowTracking, time, "resumed",
        fmt::format("row {}", plan_.rows[row_index].lane), events);
}

void Navigator::UpdateOdometry(const WorldPose& odom) {
  last_rotation_ = 0.0;
  if (last_odom_) {
    phase_travel_ += Horizontal(last_odom_->position, odom.position);
    last_rotation_ = NormalizeAngle(odom.heading - last_odom_->heading);
    turn_.rotated += std::abs(last_rotation_);
  }
  last_odom_ = odom;
}

std::optional<ImagePath> Navigator::Extract(const SensorFrame& frame,
                                            CameraId id) const {
  const auto& result = frame.heatmaps[Index(id)];
  if (!result || result->status != DetectionStatus::kOk) return std::nullopt;
  return ExtractPath(result->heatmap, config_.min_confidence, config_.min_rows,
                     id);
}

std::optional<LineFit> Navigator::CameraLine(const ImagePath& path,
                                             CameraId id) const {
  try {
    const BevPath bev =
        ImagePathToBev(path, camera_ground_[Index(id)], config_.side_max_range);
    return FitLine(bev.points);
  } catch (const EmptyPathError&) {
  } catch (const DegenerateFitError&) {
  }
  return std::nullopt;
}

VelocityCommand Navigator::HandleLoss(double time,
                                      std::vector<NavEvent>* events) {
  const VelocityCommand cmd = follower_.Lost(time);
  if (!hold_reported_ && follower_.holding_expired(time)) {
    hold_reported_ = true;
    events->push_back({time, phase_, "detection_hold_expired",
                       fmt::format("no path for {:.2f} s", config_.hold_timeout)});
  }
  const double since = time - last_valid_time_.value_or(phase_start_time_);
  if (since > config_.detection_timeout) {
    Fail(time, "DetectionLost", events);
    return {};
  }
  return cmd;
}

StepResult Navigator::TrackRow(const SensorFrame& frame, bool use_back) {
  StepResult out;
  const CameraId cam = use_back ? CameraId::kBack : CameraId::kFront;
  const double L = config_.gains.lookahead_d;
  if (const auto path = Extract(frame, cam)) {
    try {
      const BevPath bev = ImagePathToBev(*path, robot_ground_[Index(cam)],
                                         config_.bev_max_range);
      if (use_back) {
        const ExtendedPath ext = ExtendBackPath(bev, L);
        out.errors = FitReference(ext.path, L);
        out.errors->confidence = ext.confidence;
      } else {
        out.errors = FitReference(bev, L);
      }
    } catch (const EmptyPathError&) {
    } catch (const DegenerateFitError&) {
    }
  }
  if (out.errors) {
    out.command = follower_.Update(frame.time, *out.errors);
    last_valid_time_ = frame.time;
    hold_reported_ = false;
  } else {
    out.command = HandleLoss(frame.time, &out.events);
  }
  return out;
}

StepResult Navigator::Turn(const SensorFrame& frame, CameraId camera,
                           NavPhase next) {
  StepResult out;
  const double s = Sign(current_turn());
  const double nominal = kQuarterTurn / config_.omega_turn;
  if (turn_.rotated > config_.turn_angle_guard * kQuarterTurn ||
      frame.time - turn_.started > config_.turn_time_guard * nominal) {
    Fail(frame.time, "TurnTimeout", &out.events);
    return out;
  }
  const auto path = Extract(frame, camera);
  switch (turn_.stage) {
    case TurnStage::kRotating: {
      if (path) {
        const double offset = PathCenteringOffset(
            *path, frame.heatmaps[Index(camera)]->heatmap.width());
        // Rotating left sweeps the path from the left half of the image
        // towards the right half.
        if (offset * s > -config_.center_band) {
          turn_.stage = TurnStage::kSettling;
          turn_.settle_count = 0;
          turn_.headings.clear();
          return out;
        }
      }
      out.command.omega = s * config_.omega_turn;
      return out;
    }
    case TurnStage::kSettling: {
      ++turn_.settle_count;
      if (path) {
        if (const auto line = CameraLine(*path, camera)) {
          turn_.headings.push_back(line->Heading());
        }
      }
      if (turn_.settle_count < config_.settle_frames) return out;
      if (static_cast<int>(turn_.headings.size()) * 2 < config_.settle_frames) {
        turn_.stage = TurnStage::kRotating;
        return out;
      }
      const double mean =
          std::accumulate(turn_.headings.begin(), turn_.headings.end(), 0.0) /
          static_cast<double>(turn_.headings.size());
      if (std::abs(mean) < DegToRad(config_.align_tolerance_deg)) {
        const bool out_turn = next == NavPhase::kTraverse;
        Enter(next, frame.time, out_turn ? "turn_out_aligned" : "turn_in_aligned",
              fmt::format("residual {:.2f} deg", RadToDeg(mean)), &out.events);
        if (!out_turn) ++row_index_;
        return out;
      }
      turn_.stage = TurnStage::kCorrecting;
      turn_.correction_left = mean;
      return out;
    }
    case TurnStage::kCorrecting: {
      turn_.correction_left -= last_rotation_;
      const double left = turn_.correction_left;
      if (std::abs(left) < 1e-4) {
        turn_.stage = TurnStage::kSettling;
        turn_.settle_count = 0;
        turn_.headings.clear();
        return out;
      }
      const double rate = std::min(config_.omega_fine,
                                   std::abs(left) / config_.control_period);
      out.command.omega = std::copysign(rate, left);
      return out;
    }
  }
  return out;
}

StepResult Navigator::Traverse(const SensorFrame& frame) {
  StepResult out;
  const double spacing = plan_.row_spacing;
  if (phase_travel_ > config_.traverse_overrun * spacing) {
    Fail(frame.time, "TraverseOverrun", &out.events);
    return out;
  }
  const CameraId camera = TurnCamera(current_turn());
  std::optional<double> lateral;
  if (const auto path = Extract(frame, camera)) {
    if (const auto line = CameraLine(*path, camera)) lateral = line->YAt(0.0);
  }
  out.command.v = config_.v_traverse;
  if (!lateral) return out;
  if (!traverse_initial_sign_) {
    traverse_initial_sign_ = *lateral < 0.0 ? -1.0 : 1.0;
  }
  if (std::abs(*lateral) < config_.traverse_stop_m ||
      *lateral * *traverse_initial_sign_ < 0.0) {
    const double travel = phase_travel_;
    const double tol = config_.wrong_row_tolerance;
    if (travel < (1.0 - tol) * spacing || travel > (1.0 + tol) * spacing) {
      Fail(frame.time,
           fmt::format("WrongRow: traversed {:.2f} m for {:.2f} m spacing",
                       travel, spacing),
           &out.events);
      return out;
    }
    Enter(NavPhase::kTurnIn, frame.time, "next_row_centered",
          fmt::format("traversed {:.2f} m", travel), &out.events);
    out.command = {};
    return out;
  }
  // Slow down for the final approach.
  out.command.v = std::clamp(std::abs(*lateral), 0.1, config_.v_traverse);
  return out;
}

StepResult Navigator::Step(const SensorFrame& frame) {
  UpdateOdometry(frame.odometry);
  StepResult out;
  switch (phase_) {
    case NavPhase::kRowTracking: {
      out = TrackRow(frame, false);
      if (phase_ != NavPhase::kRowTracking || !frame.coarse_fix) break;
      const MissionRow& row = plan_.rows[row_index_];
      switch (CheckEndTrigger(*frame.coarse_fix, row, plan_.end_threshold,
                              frame.time, config_.stale_gps_age)) {
        case EndTrigger::kReached:
          Enter(NavPhase::kEndApproach, frame.time, "end_trigger",
                fmt::format("coarse fix {:.2f} m from row end",
                            Horizontal(frame.coarse_fix->position, row.end)),
                &out.events);
          break;
        case EndTrigger::kStaleFix:
          if (!stale_reported_) {
            stale_reported_ = true;
            out.events.push_back({frame.time, phase_, "stale_gps",
                                  "StaleGps"});
          }
          break;
        case EndTrigger::kFar:
          stale_reported_ = false;
          break;
      }
      break;
    }
    case NavPhase::kEndApproach: {
      out = TrackRow(frame, true);
      if (phase_ != NavPhase::kEndApproach) break;
      if (phase_travel_ > config_.row_end_overrun) {
        Fail(frame.time, "RowEndTimeout", &out.events);
        out.command = {};
        break;
      }
      const auto& depth = frame.depth[Index(TurnCamera(current_turn()))];
      if (!depth) break;
      const auto fired = row_end_.Update(*depth);
      if (fired && *fired) {
        const std::string reason = fmt::format(
            "side depth above {:.2f} m baseline", row_end_.baseline().value_or(0));
        out.command = {};
        if (last_row()) {
          Enter(NavPhase::kCompleted, frame.time, "completed", reason, &out.events);
        } else {
          Enter(NavPhase::kTurnOut, frame.time, "row_end", reason, &out.events);
        }
      }
      break;
    }
    case NavPhase::kTurnOut:
      out = Turn(frame, TurnCamera(current_turn()), NavPhase::kTraverse);
      break;
    case NavPhase::kTraverse:
      out = Traverse(frame);
      break;
    case NavPhase::kTurnIn:
      out = Turn(frame, CameraId::kFront, NavPhase::kRowTracking);
      break;
    case NavPhase::kFault:
    case NavPhase::kCompleted:
      break;
  }
  if (phase_ == NavPhase::kFault || phase_ == NavPhase::kCompleted) {
    out.command = {};
  }
  out.phase = phase_;
  return out;
}

}  // namespace rownav
