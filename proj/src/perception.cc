#include "rownav/perception.h"

#include <algorithm>
#include <cmath>

#include "rownav/annotation.h"
#include "rownav/errors.h"

namespace rownav {
namespace {

bool IsValidDepth(const DepthSample& s) {
  return s.valid && s.depth > 0.0 && std::isfinite(s.depth);
}

int CountValid(const DepthProfile& profile) {
  return static_cast<int>(std::count_if(profile.samples.begin(),
                                        profile.samples.end(), IsValidDepth));
}

double Median(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  if (values.size() % 2 == 1) return values[mid];
  const double upper = values[mid];
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace

std::optional<ImagePath> ExtractPath(const Heatmap& heatmap,
                                     double min_confidence, int min_rows,
                                     CameraId camera) {
  ImagePath path;
  path.scale = 0.5;
  path.source_camera = camera;
  for (int r = 0; r < heatmap.height(); ++r) {
    const auto row = heatmap.row(r);
    // max_element returns the first maximum, i.e. the smallest column.
    const auto it = std::max_element(row.begin(), row.end());
    if (it == row.end() || *it < min_confidence) continue;
    path.entries.push_back(
        {r, static_cast<double>(it - row.begin()), *it});
  }
  if (static_cast<int>(path.entries.size()) < min_rows) return std::nullopt;
  return path;
}

double PathCenteringOffset(const ImagePath& path, double image_width) {
  if (path.entries.empty()) return 0.0;
  const int top = path.entries.front().row;
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& e : path.entries) {
    const double w = e.confidence * (e.row - top + 1);
    weighted += w * e.col;
    total += w;
  }
  const double half = 0.5 * image_width;
  if (!(total > 0.0)) return 0.0;
  return std::clamp((weighted / total - half) / half, -1.0, 1.0);
}

void NoiseSpec::Validate() const {
  const bool stds_ok =
      rtk_std >= 0 && coarse_std >= 0 && coarse_accuracy > 0 &&
      lateral_std >= 0 && depth_std >= 0 &&
      std::all_of(heading_bin_stds_deg.begin(), heading_bin_stds_deg.end(),
                  [](double s) { return s >= 0; });
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!stds_ok || !prob(dropout_prob) || !prob(depth_dropout_prob)) {
    throw ConfigError("noise spec out of range");
  }
}

NoiseSpec NoiseSpec::Noiseless() {
  NoiseSpec n;
  n.rtk_std = 0.0;
  n.coarse_std = 0.0;
  n.heading_bin_stds_deg = {0, 0, 0, 0, 0};
  n.lateral_std = 0.0;
  n.depth_std = 0.0;
  n.depth_dropout_prob = 0.0;
  n.dropout_prob = 0.0;
  return n;
}

std::optional<int> HeadingBin(double heading_error_deg) {
  const double e = heading_error_deg;
  if (!(std::abs(e) <= kDetectionValidityDeg)) return std::nullopt;
  if (e < -15.0) return 0;
  if (e < -5.0) return 1;
  if (e < 5.0) return 2;
  if (e < 15.0) return 3;
  return 4;
}

std::string_view DetectionStatusName(DetectionStatus status) {
  switch (status) {
    case DetectionStatus::kOk:
      return "ok";
    case DetectionStatus::kInvalidHeading:
      return "invalid_heading";
    case DetectionStatus::kDropout:
      return "dropout";
    case DetectionStatus::kNotVisible:
      return "not_visible";
  }
  return "unknown";
}

double SampleAngularError(const NoiseSpec& noise, double heading_error_deg,
                          Rng& rng) {
  const auto bin = HeadingBin(heading_error_deg);
  if (!bin) return 0.0;
  const double std_deg = noise.heading_bin_stds_deg[*bin];
  if (std_deg == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, std_deg)(rng);
}

SyntheticDetection SyntheticHeatmap(const WorldPoint& path_start,
                                    const WorldPoint& path_end,
                                    const TerrainHeight& terrain,
                                    const WorldPose& robot_pose,
                                    const CameraModel& cam,
                                    const NoiseSpec& noise, Rng& rng,
                                    const SyntheticOptions& options) {
  SyntheticDetection out;
  const WorldPose camera_pose = ComposeCameraPose(robot_pose, cam.mount);
  const Eigen::Vector2d cam_xy(camera_pose.position.east,
                               camera_pose.position.north);
  const Eigen::Vector2d fwd(std::cos(camera_pose.heading),
                            std::sin(camera_pose.heading));
  Eigen::Vector2d a(path_start.east, path_start.north);
  Eigen::Vector2d b(path_end.east, path_end.north);
  if ((b - a).dot(fwd) < 0.0) std::swap(a, b);
  const Eigen::Vector2d dir = (b - a).normalized();
  const double path_heading = std::atan2(dir.y(), dir.x());
  out.heading_error_deg =
      RadToDeg(NormalizeAngle(camera_pose.heading - path_heading));

  if (!HeadingBin(out.heading_error_deg)) {
    out.status = DetectionStatus::kInvalidHeading;
    return out;
  }
  if (noise.dropout_prob > 0.0 &&
      std::uniform_real_distribution<double>(0.0, 1.0)(rng) <
          noise.dropout_prob) {
    out.status = DetectionStatus::kDropout;
    return out;
  }
  out.injected_angle_deg =
      options.noise_scale * SampleAngularError(noise, out.heading_error_deg, rng);
  if (noise.lateral_std > 0.0) {
    out.injected_lateral_m =
        options.noise_scale *
        std::normal_distribution<double>(0.0, noise.lateral_std)(rng);
  }

  // Perturb about the point of the path line closest to the camera.
  const double s_pivot = (cam_xy - a).dot(dir);
  const Eigen::Vector2d pivot = a + s_pivot * dir;
  const double rotated = path_heading + DegToRad(out.injected_angle_deg);
  const Eigen::Vector2d new_dir(std::cos(rotated), std::sin(rotated));
  const Eigen::Vector2d normal(-new_dir.y(), new_dir.x());
  const Eigen::Vector2d origin = pivot + out.injected_lateral_m * normal;

  const double s0 = std::max(-s_pivot, -options.render_range);
  const double s1 = std::min((b - a).norm() - s_pivot, options.render_range);
  if (!(s1 > s0)) {
    out.status = DetectionStatus::kNotVisible;
    return out;
  }
  constexpr double kVertexSpacing = 5.0;
  const int n = std::max(1, static_cast<int>(std::ceil((s1 - s0) / kVertexSpacing)));
  std::vector<WorldPoint> world;
  world.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const Eigen::Vector2d p = origin + (s0 + (s1 - s0) * k / n) * new_dir;
    world.push_back({p.x(), p.y(), terrain ? terrain(p.x(), p.y()) : 0.0});
  }
  const ImagePolyline projected =
      ProjectWorldPolyline(cam, camera_pose, world);
  if (projected.points.empty()) {
    out.status = DetectionStatus::kNotVisible;
    return out;
  }
  out.heatmap = RenderAnnotation(projected, cam, options.sigma_px);
  out.status = DetectionStatus::kOk;
  return out;
}

SyntheticHeatmapProvider::SyntheticHeatmapProvider(CameraModel cam,
                                                   NoiseSpec noise,
                                                   LaneLookup lanes,
                                                   TerrainHeight terrain,
                                                   std::uint64_t seed,
                                                   SyntheticOptions options)
    : cam_(std::move(cam)),
      noise_(noise),
      lanes_(std::move(lanes)),
      terrain_(std::move(terrain)),
      options_(options),
      rng_(seed) {
  cam_.Validate();
  noise_.Validate();
}

HeatmapProvider::Capability SyntheticHeatmapProvider::capability() const {
  return {cam_.id, HalfResolution(cam_.width), HalfResolution(cam_.height)};
}

HeatmapResult SyntheticHeatmapProvider::Provide(const Observation& obs) {
  last_ = SyntheticDetection{};
  const auto lane = lanes_ ? lanes_(obs.target_lane) : std::nullopt;
  if (!lane) {
    last_.status = DetectionStatus::kNotVisible;
    return {last_.status, {}};
  }
  if (obs.force_dropout) {
    last_.status = DetectionStatus::kDropout;
    return {last_.status, {}};
  }
  SyntheticOptions opts = options_;
  opts.noise_scale *= obs.noise_scale;
  last_ = SyntheticHeatmap(lane->start, lane->end, terrain_, obs.robot_pose,
                           cam_, noise_, rng_, opts);
  return {last_.status, last_.heatmap};
}

std::optional<double> RobustDepth(const DepthProfile& profile) {
  std::vector<double> depths;
  depths.reserve(profile.samples.size());
  for (const auto& s : profile.samples) {
    if (IsValidDepth(s)) depths.push_back(s.depth);
  }
  if (depths.empty()) return std::nullopt;
  return Median(std::move(depths));
}

std::optional<bool> DetectRowEnd(const DepthProfile& profile, double baseline,
                                 double jump_ratio, int min_valid) {
  if (CountValid(profile) < min_valid) return std::nullopt;
  return *RobustDepth(profile) > baseline * jump_ratio;
}

RowEndDetector::RowEndDetector(RowEndConfig config) : config_(config) {}

std::optional<bool> RowEndDetector::Update(const DepthProfile& profile) {
  const auto depth = RobustDepth(profile);
  const auto base = baseline();
  if (!base || static_cast<int>(history_.size()) < config_.min_baseline_frames) {
    if (depth && CountValid(profile) >= config_.min_valid) {
      history_.push_back(*depth);
    }
    return std::nullopt;
  }
  const auto fired =
      DetectRowEnd(profile, *base, config_.jump_ratio, config_.min_valid);
  if (!fired) return std::nullopt;
  if (!*fired) {
    history_.push_back(*depth);
    while (static_cast<int>(history_.size()) > config_.baseline_window) {
      history_.pop_front();
    }
  }
  return fired;
}

void RowEndDetector::Reset() { history_.clear(); }

std::optional<double> RowEndDetector::baseline() const {
  if (history_.empty()) return std::nullopt;
  return Median({history_.begin(), history_.end()});
}

}  // namespace rownav
