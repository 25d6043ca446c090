#ifndef ROWNAV_PERCEPTION_H_
#define ROWNAV_PERCEPTION_H_

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "rownav/geometry.h"
#include "rownav/heatmap.h"

namespace rownav {

using Rng = std::mt19937_64;

inline constexpr double kDefaultMinConfidence = 0.2;
inline constexpr int kDefaultMinRows = 40;
inline constexpr double kDetectionValidityDeg = 25.0;
// Average heading deviation of the path detector per robot-heading bin
// [-25,-15), [-15,-5), [-5,5), [5,15), [15,25] degrees.
inline constexpr std::array<double, 5> kHeadingBinStdsDeg = {2.36, 2.22, 1.10,
                                                             1.57, 8.05};

// Per-row argmax of a heatmap. Rows whose maximum is below `min_confidence`
// are dropped; ties go to the smallest column. nullopt (NoPath) when fewer
// than `min_rows` rows survive.
std::optional<ImagePath> ExtractPath(const Heatmap& heatmap,
                                     double min_confidence = kDefaultMinConfidence,
                                     int min_rows = kDefaultMinRows,
                                     CameraId camera = CameraId::kFront);

// Signed offset of the path from the image center, normalized by half the
// width and clamped to [-1, 1]. Entries are weighted by confidence and by
// nearness: the weight grows linearly with the row index, so the bottom of
// the image (closest ground) dominates. `image_width` is in the path's own
// pixel units.
double PathCenteringOffset(const ImagePath& path, double image_width);

struct NoiseSpec {
  double rtk_std = 0.02;          // m
  double coarse_std = 2.0;        // m per horizontal axis
  double coarse_accuracy = 5.0;   // m, reported with every coarse fix
  std::array<double, 5> heading_bin_stds_deg = kHeadingBinStdsDeg;
  double lateral_std = 0.05;      // m, detected path offset
  double depth_std = 0.05;        // m
  double depth_dropout_prob = 0.02;
  double dropout_prob = 0.0;      // whole heatmap frames
  std::uint64_t seed = 1;

  // Throws ConfigError for negative deviations or probabilities outside [0,1].
  void Validate() const;
  static NoiseSpec Noiseless();
};

// Heading bin index 0..4, or nullopt outside the +-25 degree validity window.
std::optional<int> HeadingBin(double heading_error_deg);

enum class DetectionStatus { kOk, kInvalidHeading, kDropout, kNotVisible };
std::string_view DetectionStatusName(DetectionStatus status);

// Height of the terrain at a horizontal position.
using TerrainHeight = std::function<double(double east, double north)>;

struct SyntheticDetection {
  DetectionStatus status = DetectionStatus::kNotVisible;
  Heatmap heatmap;
  double heading_error_deg = 0.0;   // camera heading minus path direction
  double injected_angle_deg = 0.0;  // rotation applied to the rendered path
  double injected_lateral_m = 0.0;  // lateral shift applied to the path
};

struct SyntheticOptions {
  double render_range = 30.0;  // m of path rendered around the camera
  double noise_scale = 1.0;    // multiplies angular and lateral noise
  double sigma_px = 15.0;
};

// Stand-in for the trained detector. Renders the straight row path
// start-end (direction taken pointing away from the camera) as seen by
// `cam` on a robot at `robot_pose`, after rotating it about the point
// nearest the camera by a heading-bin dependent Gaussian angle and shifting
// it sideways. Returns kInvalidHeading when the camera is more than 25
// degrees off the path direction.
SyntheticDetection SyntheticHeatmap(const WorldPoint& path_start,
                                    const WorldPoint& path_end,
                                    const TerrainHeight& terrain,
                                    const WorldPose& robot_pose,
                                    const CameraModel& cam,
                                    const NoiseSpec& noise, Rng& rng,
                                    const SyntheticOptions& options = {});

// Draws one angular detection error in degrees for the given heading error.
double SampleAngularError(const NoiseSpec& noise, double heading_error_deg,
                          Rng& rng);

// Input to a heatmap provider. A learned provider would read `rgbd`; the
// synthetic provider reads the ground-truth fields.
struct Observation {
  double time = 0.0;
  WorldPose robot_pose;
  int target_lane = 0;
  double noise_scale = 1.0;
  bool force_dropout = false;
  std::vector<std::uint8_t> rgbd;
};

struct HeatmapResult {
  DetectionStatus status = DetectionStatus::kNotVisible;
  Heatmap heatmap;  // half resolution
};

// Extension point for attaching a trained model. Implementations must be
// deterministic for identical observations (stochastic ones own a seeded
// generator) and are called from one thread at a time per camera.
class HeatmapProvider {
 public:
  struct Capability {
    CameraId camera = CameraId::kFront;
    int width = 0;  // heatmap resolution
    int height = 0;
  };
  // Per-frame budget at 15 FPS.
  static constexpr double kFrameBudgetMs = 66.0;

  virtual ~HeatmapProvider() = default;
  virtual Capability capability() const = 0;
  virtual HeatmapResult Provide(const Observation& obs) = 0;
};

struct RowLine {
  WorldPoint start;
  WorldPoint end;
};

class SyntheticHeatmapProvider : public HeatmapProvider {
 public:
  using LaneLookup = std::function<std::optional<RowLine>(int lane)>;

  SyntheticHeatmapProvider(CameraModel cam, NoiseSpec noise, LaneLookup lanes,
                           TerrainHeight terrain, std::uint64_t seed,
                           SyntheticOptions options = {});

  Capability capability() const override;
  HeatmapResult Provide(const Observation& obs) override;

  const SyntheticDetection& last_detection() const { return last_; }

 private:
  CameraModel cam_;
  NoiseSpec noise_;
  LaneLookup lanes_;
  TerrainHeight terrain_;
  SyntheticOptions options_;
  Rng rng_;
  SyntheticDetection last_;
};

struct DepthSample {
  double bearing = 0.0;  // rad, positive to the left of the optical axis
  double depth = 0.0;    // m along the optical axis
  bool valid = false;
};

struct DepthProfile {
  std::vector<DepthSample> samples;
  CameraId camera = CameraId::kLeft;
};

// Median of the valid depths; nullopt when there are none.
std::optional<double> RobustDepth(const DepthProfile& profile);

// True when the robust side depth exceeds baseline * jump_ratio. nullopt
// (InsufficientDepth) with fewer than `min_valid` valid samples.
std::optional<bool> DetectRowEnd(const DepthProfile& profile, double baseline,
                                 double jump_ratio = 1.8, int min_valid = 20);

struct RowEndConfig {
  double jump_ratio = 1.8;
  int min_valid = 20;
  int baseline_window = 45;  // frames of in-row depth in the running median
  int min_baseline_frames = 10;
};

// Side-view end-of-row detector with a running-median in-row baseline.
class RowEndDetector {
 public:
  explicit RowEndDetector(RowEndConfig config = {});

  // nullopt while the profile is unusable or the baseline is still warming
  // up; otherwise whether the end of the row has been reached. Frames that
  // do not fire feed the baseline.
  std::optional<bool> Update(const DepthProfile& profile);
  void Reset();
  std::optional<double> baseline() const;

 private:
  RowEndConfig config_;
  std::deque<double> history_;
};

}  // namespace rownav

#endif  // ROWNAV_PERCEPTION_H_
