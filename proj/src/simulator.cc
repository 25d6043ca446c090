#include "rownav/simulator.h"

#include <Eigen/Geometry>
#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <random>

#include "rownav/errors.h"

namespace rownav {
namespace {

constexpr double kMinRowSpacing = 1.0;  // m, bound on the robot width
constexpr double kParallelToleranceDeg = 5.0;
constexpr double kTick = 1.0 / kTicksPerSecond;

Eigen::Vector2d Xy(const WorldPoint& p) { return {p.east, p.north}; }

Eigen::Vector2d Dir(const RowLine& row) {
  return (Xy(row.end) - Xy(row.start)).normalized();
}

double StandardNormal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

std::uint64_t DeriveSeed(std::uint64_t master, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master),
                    static_cast<std::uint32_t>(master >> 32), stream};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

bool Contains(const std::vector<int>& values, int v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

// Ray-segment intersection; distance along the unit ray or nullopt.
std::optional<double> RayHit(const Eigen::Vector2d& origin,
                             const Eigen::Vector2d& ray,
                             const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                             bool infinite) {
  const Eigen::Vector2d seg = b - a;
  const double denom = ray.x() * seg.y() - ray.y() * seg.x();
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const Eigen::Vector2d w = a - origin;
  const double t = (w.x() * seg.y() - w.y() * seg.x()) / denom;
  const double s = (w.x() * ray.y() - w.y() * ray.x()) / denom;
  if (t <= 0.0) return std::nullopt;
  if (!infinite && (s < 0.0 || s > 1.0)) return std::nullopt;
  return t;
}

WorldPose PoseOnRow(const VineyardLayout& layout, const MissionRow& row,
                    double along, double lateral, double heading_offset) {
  const Eigen::Vector2d d = (Xy(row.end) - Xy(row.start)).normalized();
  const Eigen::Vector2d left(-d.y(), d.x());
  const Eigen::Vector2d p = Xy(row.start) + along * d + lateral * left;
  WorldPose pose;
  pose.position = {p.x(), p.y(), 0.0};
  pose.heading = NormalizeAngle(std::atan2(d.y(), d.x()) + heading_offset);
  return SettleOnTerrain(layout, pose);
}

double RowHeading(const WorldPoint& from, const WorldPoint& to) {
  return std::atan2(to.north - from.north, to.east - from.east);
}

}  // namespace

LayoutSpec PresetLayout(std::string_view name) {
  LayoutSpec spec;
  spec.name = std::string(name);
  if (name == "CRT") {
    spec.row_length = 120.0;
    spec.slope_deg = 10.0;
  } else if (name == "VG3") {
    spec.row_length = 90.0;
    spec.slope_deg = 10.0;
  } else if (name == "RN") {
    spec.row_length = 70.0;
    spec.slope_deg = 0.0;
    spec.orientation_deg = 90.0;
  } else {
    throw ConfigError(fmt::format("unknown layout preset '{}'", name));
  }
  return spec;
}

VineyardLayout BuildLayout(const LayoutSpec& spec) {
  if (spec.row_count < 1 || !(spec.row_length > 0.0)) {
    throw ConfigError("layout needs at least one row of positive length");
  }
  VineyardLayout layout;
  layout.name = spec.name;
  layout.row_spacing = spec.row_spacing;
  layout.slope = DegToRad(spec.slope_deg);
  const double o = DegToRad(spec.orientation_deg);
  const Eigen::Vector2d d(std::cos(o), std::sin(o));
  const Eigen::Vector2d left(-d.y(), d.x());
  const Eigen::Vector2d origin(spec.origin_east, spec.origin_north);
  const double grade = std::tan(layout.slope);
  for (int k = 0; k < spec.row_count; ++k) {
    const Eigen::Vector2d s = origin + k * spec.row_spacing * left;
    const Eigen::Vector2d e = s + spec.row_length * d;
    layout.rows.push_back({{s.x(), s.y(), 0.0},
                           {e.x(), e.y(), grade * spec.row_length}});
  }
  layout.Validate();
  return layout;
}

void VineyardLayout::Validate() const {
  if (rows.empty()) throw ConfigError("layout has no rows");
  if (!(row_spacing > kMinRowSpacing)) {
    throw ConfigError("row spacing must exceed the robot width");
  }
  if (!(std::abs(slope) < DegToRad(45.0))) throw ConfigError("slope too steep");
  const Eigen::Vector2d d0 = RowDirection();
  const Eigen::Vector2d left(-d0.y(), d0.x());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Vector2d di = Dir(rows[i]);
    if (di.dot(d0) < std::cos(DegToRad(kParallelToleranceDeg))) {
      throw ConfigError(fmt::format("row {} is not parallel to row 0", i));
    }
    const double offset = (Xy(rows[i].start) - Xy(rows[0].start)).dot(left);
    if (std::abs(offset - row_spacing * static_cast<double>(i)) >
        0.05 * row_spacing) {
      throw ConfigError(fmt::format("row {} is not at the row spacing", i));
    }
    for (const WorldPoint& p : {rows[i].start, rows[i].end}) {
      if (std::abs(p.up - Height(p.east, p.north)) > 1e-6) {
        throw ConfigError(fmt::format("row {} does not lie on the terrain", i));
      }
    }
  }
}

Eigen::Vector2d VineyardLayout::RowDirection() const { return Dir(rows.front()); }

double VineyardLayout::Height(double east, double north) const {
  const Eigen::Vector2d rel = Eigen::Vector2d(east, north) - Xy(rows.front().start);
  return rows.front().start.up + std::tan(slope) * rel.dot(RowDirection());
}

TerrainHeight VineyardLayout::Terrain() const {
  return [layout = *this](double e, double n) { return layout.Height(e, n); };
}

std::vector<RowLine> VineyardLayout::VineWalls() const {
  const Eigen::Vector2d d = RowDirection();
  const Eigen::Vector2d half = 0.5 * row_spacing * Eigen::Vector2d(-d.y(), d.x());
  auto shifted = [&](const RowLine& row, double sign) {
    const Eigen::Vector2d s = Xy(row.start) + sign * half;
    const Eigen::Vector2d e = Xy(row.end) + sign * half;
    return RowLine{{s.x(), s.y(), Height(s.x(), s.y())},
                   {e.x(), e.y(), Height(e.x(), e.y())}};
  };
  std::vector<RowLine> walls;
  walls.push_back(shifted(rows.front(), -1.0));
  for (const auto& row : rows) walls.push_back(shifted(row, 1.0));
  return walls;
}

std::optional<RowLine> VineyardLayout::Lane(int index) const {
  if (index < 0 || index >= static_cast<int>(rows.size())) return std::nullopt;
  return rows[index];
}

MissionPlan SerpentinePlan(const VineyardLayout& layout,
                           const std::vector<int>& lanes, bool first_forward,
                           double end_threshold) {
  if (lanes.empty()) throw ConfigError("serpentine plan needs lanes");
  MissionPlan plan;
  plan.row_spacing = layout.row_spacing;
  plan.end_threshold = end_threshold;
  bool forward = first_forward;
  for (int lane : lanes) {
    const auto line = layout.Lane(lane);
    if (!line) throw ConfigError(fmt::format("lane {} not in layout", lane));
    MissionRow row;
    row.lane = lane;
    row.start = forward ? line->start : line->end;
    row.end = forward ? line->end : line->start;
    plan.rows.push_back(row);
    forward = !forward;
  }
  // Turn towards the next lane; the last row keeps alternating.
  for (std::size_t i = 0; i < plan.rows.size(); ++i) {
    MissionRow& row = plan.rows[i];
    if (i + 1 < plan.rows.size()) {
      const Eigen::Vector2d d = (Xy(row.end) - Xy(row.start)).normalized();
      const Eigen::Vector2d step = Xy(plan.rows[i + 1].start) - Xy(row.end);
      row.turn = d.x() * step.y() - d.y() * step.x() > 0.0 ? TurnDirection::kLeft
                                                           : TurnDirection::kRight;
    } else if (i > 0) {
      row.turn = plan.rows[i - 1].turn == TurnDirection::kLeft
                     ? TurnDirection::kRight
                     : TurnDirection::kLeft;
    }
  }
  plan.Validate();
  return plan;
}

RobotState Integrate(const RobotState& state, const VelocityCommand& cmd,
                     double dt) {
  if (!(dt > 0.0 && dt <= 0.2)) throw ConfigError("integration step outside (0, 0.2]");
  RobotState next = state;
  const double h = state.pose.heading;
  const double dh = cmd.omega * dt;
  if (std::abs(dh) < 1e-12) {
    next.pose.position.east += cmd.v * dt * std::cos(h);
    next.pose.position.north += cmd.v * dt * std::sin(h);
  } else {
    const double r = cmd.v / cmd.omega;
    next.pose.position.east += r * (std::sin(h + dh) - std::sin(h));
    next.pose.position.north += r * (std::cos(h) - std::cos(h + dh));
  }
  next.pose.heading = NormalizeAngle(h + dh);
  next.v = cmd.v;
  next.omega = cmd.omega;
  next.time = state.time + dt;
  return next;
}

WorldPose SettleOnTerrain(const VineyardLayout& layout, WorldPose pose) {
  const Eigen::Vector2d g = std::tan(layout.slope) * layout.RowDirection();
  const Eigen::Vector3d normal = Eigen::Vector3d(-g.x(), -g.y(), 1.0).normalized();
  const Eigen::Vector2d h(std::cos(pose.heading), std::sin(pose.heading));
  const Eigen::Vector3d x = Eigen::Vector3d(h.x(), h.y(), g.dot(h)).normalized();
  const Eigen::Vector3d y = normal.cross(x);
  Eigen::Matrix3d rotation;
  rotation << x, y, normal;
  const Eigen::Vector3d position(pose.position.east, pose.position.north,
                                 layout.Height(pose.position.east,
                                               pose.position.north));
  return PoseFromRotation(position, rotation);
}

GpsFix SampleGps(const RobotState& state, GpsKind kind, const NoiseSpec& noise,
                 Rng& rng) {
  GpsFix fix;
  fix.time = state.time;
  fix.kind = kind;
  fix.position = state.pose.position;
  const double de = StandardNormal(rng);
  const double dn = StandardNormal(rng);
  if (kind == GpsKind::kRtk) {
    const double du = StandardNormal(rng);
    fix.position.east += noise.rtk_std * de;
    fix.position.north += noise.rtk_std * dn;
    fix.position.up += noise.rtk_std * du;
    fix.accuracy = std::max(noise.rtk_std, 0.01);
  } else {
    fix.position.east += noise.coarse_std * de;
    fix.position.north += noise.coarse_std * dn;
    fix.accuracy = noise.coarse_accuracy;
  }
  return fix;
}

DepthProfile SampleSideDepth(const RobotState& state,
                             const VineyardLayout& layout,
                             const CameraModel& cam, const NoiseSpec& noise,
                             Rng& rng, const DepthOptions& options) {
  const WorldPose camera = ComposeCameraPose(state.pose, cam.mount);
  const Eigen::Vector2d origin = Xy(camera.position);
  const double left_edge = std::atan(cam.cx / cam.fx);
  const double right_edge = std::atan((cam.width - cam.cx) / cam.fx);
  const std::vector<RowLine> walls = layout.VineWalls();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  DepthProfile profile;
  profile.camera = cam.id;
  for (int i = 0; i < options.rays; ++i) {
    const double bearing =
        left_edge - (left_edge + right_edge) * (i + 0.5) / options.rays;
    const double angle = camera.heading + bearing;
    const Eigen::Vector2d ray(std::cos(angle), std::sin(angle));
    double depth = options.max_range;
    for (const auto& wall : walls) {
      const auto t = RayHit(origin, ray, Xy(wall.start), Xy(wall.end),
                            options.extend_walls);
      if (t) depth = std::min(depth, *t * std::cos(bearing));
    }
    const double n = StandardNormal(rng);
    const double u = uniform(rng);
    DepthSample s;
    s.bearing = bearing;
    s.depth = std::max(depth + noise.depth_std * n, 0.0);
    s.valid = u >= noise.depth_dropout_prob && s.depth > 0.0;
    profile.samples.push_back(s);
  }
  return profile;
}

void TrialSetup::Validate() const {
  layout.Validate();
  plan.Validate();
  noise.Validate();
  navigator.Validate();
  for (const auto& row : plan.rows) {
    if (!layout.Lane(row.lane)) {
      throw ConfigError(fmt::format("plan lane {} not in layout", row.lane));
    }
  }
  if (!(time_limit > 0.0)) throw ConfigError("time limit must be positive");
  if (depth.rays < 1 || !(depth.max_range > 0.0)) {
    throw ConfigError("depth sensor settings out of range");
  }
}

TrialLog RunTrial(const TrialSetup& setup) {
  setup.Validate();
  const VineyardLayout& layout = setup.layout;
  const MissionPlan& plan = setup.plan;
  const TrialScript& script = setup.script;
  Navigator nav(plan, setup.navigator);
  const auto& cameras = setup.navigator.cameras;

  Rng rtk_rng(DeriveSeed(setup.seed, 1));
  Rng coarse_rng(DeriveSeed(setup.seed, 2));
  Rng depth_rng(DeriveSeed(setup.seed, 3));
  // While a row end is suppressed the rendered row runs on past its end,
  // matching the extended walls seen by the depth cameras.
  bool extend_lanes = false;
  auto lane_lookup = [&layout, &extend_lanes](int lane) {
    auto line = layout.Lane(lane);
    if (line && extend_lanes) {
      constexpr double kExtension = 200.0;
      const double de = line->end.east - line->start.east;
      const double dn = line->end.north - line->start.north;
      const double len = std::hypot(de, dn);
      line->start.east -= kExtension * de / len;
      line->start.north -= kExtension * dn / len;
      line->end.east += kExtension * de / len;
      line->end.north += kExtension * dn / len;
    }
    return line;
  };
  std::vector<std::unique_ptr<SyntheticHeatmapProvider>> providers;
  for (const auto& cam : cameras) {
    providers.push_back(std::make_unique<SyntheticHeatmapProvider>(
        cam, setup.noise, lane_lookup,
        layout.Terrain(),
        DeriveSeed(setup.seed, 10 + static_cast<std::uint32_t>(cam.id)),
        setup.synthetic));
  }

  TrialLog log;
  RobotState state;
  state.pose = PoseOnRow(layout, plan.rows.front(), setup.initial.along,
                         setup.initial.lateral,
                         DegToRad(setup.initial.heading_deg));
  VelocityCommand cmd;
  std::optional<GpsFix> last_coarse;
  NavPhase prev_phase = nav.phase();
  const long max_ticks = std::lround(setup.time_limit * kTicksPerSecond);

  auto noise_scale = [&](int lane, const WorldPose& pose) {
    double scale = 1.0;
    const auto line = layout.Lane(lane);
    const double along = (Xy(pose.position) - Xy(line->start)).dot(Dir(*line));
    for (const auto& b : script.noise_boosts) {
      if (b.lane == lane && along >= b.from_m && along <= b.to_m) scale *= b.scale;
    }
    return scale;
  };

  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) / kTicksPerSecond;
    state.time = t;
    if (k % kGpsEvery == 0) {
      log.gps.push_back(SampleGps(state, GpsKind::kRtk, setup.noise, rtk_rng));
      last_coarse = SampleGps(state, GpsKind::kCoarse, setup.noise, coarse_rng);
      log.gps.push_back(*last_coarse);
    }
    if (k % kControlEvery == 0) {
      const Requirements req = nav.requirements();
      const int row = nav.row_index();
      SensorFrame frame;
      frame.time = t;
      frame.coarse_fix = last_coarse;
      frame.odometry = state.pose;
      int target = req.target_lane;
      if (nav.phase() == NavPhase::kTraverse &&
          Contains(script.misdetect_next_row, row)) {
        target = plan.rows[row].lane;
      }
      const bool dropout = std::any_of(
          script.dropouts.begin(), script.dropouts.end(),
          [t](const PerceptionDropout& d) {
            return t >= d.start && t < d.start + d.duration;
          });
      extend_lanes = Contains(script.suppress_row_end, row);
      for (CameraId id : req.heatmap_cameras) {
        Observation obs;
        obs.time = t;
        obs.robot_pose = state.pose;
        obs.target_lane = target;
        obs.noise_scale = noise_scale(plan.rows[row].lane, state.pose);
        obs.force_dropout = dropout;
        frame.heatmaps[static_cast<std::size_t>(id)] =
            providers[static_cast<std::size_t>(id)]->Provide(obs);
      }
      if (req.depth_camera) {
        DepthOptions options = setup.depth;
        options.extend_walls = Contains(script.suppress_row_end, row);
        frame.depth[static_cast<std::size_t>(*req.depth_camera)] =
            SampleSideDepth(state, layout,
                            cameras[static_cast<std::size_t>(*req.depth_camera)],
                            setup.noise, depth_rng, options);
      }

      const StepResult result = nav.Step(frame);
      cmd = result.command;
      for (const auto& o : script.heading_overrides) {
        if (t >= o.start && t < o.start + o.duration) cmd.omega = o.omega;
      }
      log.events.insert(log.events.end(), result.events.begin(),
                        result.events.end());

      if (result.phase != prev_phase) {
        if (prev_phase == NavPhase::kEndApproach) ++log.rows_completed;
        if (prev_phase == NavPhase::kTurnOut &&
            result.phase == NavPhase::kTraverse) {
          const MissionRow& done = plan.rows[nav.row_index()];
          const CameraId side = TurnCamera(done.turn);
          const double axis =
              ComposeCameraPose(state.pose,
                                cameras[static_cast<std::size_t>(side)].mount)
                  .heading;
          const double err = NormalizeAngle(axis - RowHeading(done.end, done.start));
          log.transitions.push_back({t, nav.row_index(), prev_phase,
                                     result.phase, std::abs(RadToDeg(err))});
        }
        if (prev_phase == NavPhase::kTurnIn &&
            result.phase == NavPhase::kRowTracking) {
          const MissionRow& next = plan.rows[nav.row_index()];
          const double err = NormalizeAngle(state.pose.heading -
                                            RowHeading(next.start, next.end));
          log.transitions.push_back({t, nav.row_index(), prev_phase,
                                     result.phase, std::abs(RadToDeg(err))});
        }
      }

      log.trajectory.push_back({t, state.pose, cmd, result.phase, nav.row_index()});
      log.commands.push_back({t, cmd, result.errors});

      if (result.phase == NavPhase::kCompleted) {
        log.completed = true;
        log.sim_time = t;
        break;
      }
      if (result.phase == NavPhase::kFault) {
        ++log.interventions;
        if (setup.abort_on_fault || log.interventions > setup.max_interventions) {
          log.events.push_back({t, NavPhase::kFault, "aborted", "unrecovered fault"});
          log.aborted = true;
          log.sim_time = t;
          break;
        }
        const int r = nav.row_index();
        cmd = {};
        if (prev_phase == NavPhase::kRowTracking) {
          // Put the robot back on the current row, aligned with it.
          const MissionRow& cur = plan.rows[r];
          const Eigen::Vector2d d = (Xy(cur.end) - Xy(cur.start)).normalized();
          const double along = (Xy(state.pose.position) - Xy(cur.start)).dot(d);
          state.pose = PoseOnRow(layout, cur, along, 0.0, 0.0);
          log.events.push_back({t, NavPhase::kRowTracking, "intervention",
                                "recentered on current row"});
          nav.ResumeAt(r, t, &log.events);
        } else if (r + 1 < static_cast<int>(plan.rows.size())) {
          ++log.rows_completed;
          state.pose = PoseOnRow(layout, plan.rows[r + 1], 0.0, 0.0, 0.0);
          log.events.push_back({t, NavPhase::kRowTracking, "intervention",
                                "moved to next row start"});
          nav.ResumeAt(r + 1, t, &log.events);
        } else {
          ++log.rows_completed;
          log.events.push_back({t, NavPhase::kCompleted, "intervention",
                                "finished last row manually"});
          log.completed = true;
          log.sim_time = t;
          break;
        }
      }
      prev_phase = nav.phase();
    }
    if (k >= max_ticks) {
      log.events.push_back({t, nav.phase(), "aborted", "time limit reached"});
      log.aborted = true;
      log.sim_time = t;
      break;
    }
    state = Integrate(state, cmd, kTick);
    state.pose = SettleOnTerrain(layout, state.pose);
  }
  return log;
}

Recording MakeRecording(const TrialLog& log, const CameraModel& camera,
                        int max_frames) {
  Recording rec;
  rec.log.camera = camera;
  for (const auto& s : log.trajectory) rec.log.poses.push_back({s.time, s.pose});
  const int n = std::min<int>(max_frames, static_cast<int>(log.trajectory.size()));
  for (int i = 0; i < n; ++i) {
    rec.log.frames.push_back({i, log.trajectory[i].time});
  }
  for (const auto& fix : log.gps) {
    if (fix.kind != GpsKind::kRtk) continue;
    rec.path.points.push_back(fix.position);
    rec.path.timestamps.push_back(fix.time);
  }
  return rec;
}

}  // namespace rownav
