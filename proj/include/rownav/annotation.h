#ifndef ROWNAV_ANNOTATION_H_
#define ROWNAV_ANNOTATION_H_

// Automatic ground-truth generation: a recorded RTK path is projected into
// each recorded camera frame and rendered as a Gaussian path heatmap.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rownav/geometry.h"
#include "rownav/heatmap.h"

namespace rownav {

inline constexpr double kDefaultSigmaPx = 15.0;  // full-resolution pixels
inline constexpr double kDefaultLookahead = 20.0;

// Recorded RTK path with strictly increasing timestamps.
struct PathPolyline {
  std::vector<WorldPoint> points;
  std::vector<double> timestamps;

  // Throws ConfigError unless there are >= 2 points with matching,
  // strictly increasing timestamps.
  void Validate() const;
};

// Timestamped robot pose from the GNSS-IMU stream.
struct PoseSample {
  double time = 0.0;
  WorldPose pose;
};

struct FrameStamp {
  int frame_id = 0;
  double timestamp = 0.0;
};

struct FrameRecord {
  int frame_id = 0;
  double timestamp = 0.0;
  WorldPose camera_pose;
  CameraModel camera;
};

// Full-resolution image polyline, near-to-far, consecutive points at most
// one pixel apart.
struct ImagePolyline {
  std::vector<ImagePoint> points;
};

// Projects the visible part of a world polyline. Segments are clipped
// against the camera plane and the image rectangle, then densified to
// `max_spacing_px`.
ImagePolyline ProjectWorldPolyline(const CameraModel& cam,
                                   const WorldPose& camera_pose,
                                   std::span<const WorldPoint> world,
                                   double max_spacing_px = 1.0);

// The part of `path` ahead of the point nearest to `from`, cut at
// `lookahead` meters of horizontal arc length.
std::vector<WorldPoint> PathAhead(const PathPolyline& path,
                                  const WorldPoint& from, double lookahead);

// nullopt (NoVisiblePath) when nothing ahead of the frame projects into the
// image.
std::optional<ImagePolyline> ProjectPath(const FrameRecord& frame,
                                         const PathPolyline& path,
                                         double lookahead = kDefaultLookahead);

// Gaussian path heatmap, value = exp(-d^2 / (2 sigma^2)) with d the distance
// from the pixel center to the polyline through `points`. Coordinates and
// sigma are in heatmap pixels. Contributions combine by max. Values below
// 1e-12 (d > 7.43 sigma) are stored as exactly zero.
Heatmap RenderHeatmap(std::span<const ImagePoint> points, int width,
                      int height, double sigma);

// Renders a full-resolution polyline at half resolution, with sigma given
// in full-resolution pixels.
Heatmap RenderAnnotation(const ImagePolyline& path, const CameraModel& cam,
                         double sigma_px = kDefaultSigmaPx);

// Linear pose interpolation (shortest-arc heading); nullopt when `t` is not
// bracketed by the samples.
std::optional<WorldPose> InterpolatePose(std::span<const PoseSample> poses,
                                         double t);

struct RecordingLog {
  CameraModel camera;
  std::vector<PoseSample> poses;
  std::vector<FrameStamp> frames;
};

enum class SkipReason { kNoVisiblePath, kClockSkew };
std::string_view SkipReasonName(SkipReason reason);

struct AnnotatedFrame {
  FrameRecord frame;
  std::optional<Heatmap> heatmap;
  std::optional<SkipReason> skip;
};

struct DatasetConfig {
  double lookahead = kDefaultLookahead;
  double sigma_px = kDefaultSigmaPx;
  int threads = 1;
};

struct Dataset {
  std::vector<AnnotatedFrame> frames;  // sorted by frame_id
  int annotated = 0;
  int no_visible_path = 0;
  int clock_skew = 0;
};

// Per-frame annotation; frames whose timestamp is not bracketed by both the
// pose stream and the path are reported with SkipReason::kClockSkew.
// Output is independent of `config.threads`.
Dataset BuildDataset(const RecordingLog& log, const PathPolyline& path,
                     const DatasetConfig& config);

// Writes manifest.jsonl, heatmaps/<frame>.png and skip_report.csv.
void WriteDataset(const Dataset& dataset, const DatasetConfig& config,
                  const std::filesystem::path& out_dir);

// On-disk recording layout: camera.json, poses.csv, frames.csv.
void WriteRecordingLog(const RecordingLog& log,
                       const std::filesystem::path& dir);
RecordingLog ReadRecordingLog(const std::filesystem::path& dir);

// CSV with columns time,east,north,up.
void WritePathCsv(const PathPolyline& path, const std::filesystem::path& file);
PathPolyline ReadPathCsv(const std::filesystem::path& file);

}  // namespace rownav

#endif  // ROWNAV_ANNOTATION_H_
