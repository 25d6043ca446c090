#ifndef ROWNAV_PATHS_H_
#define ROWNAV_PATHS_H_

#include <vector>

namespace rownav {

enum class CameraId { kFront = 0, kBack = 1, kLeft = 2, kRight = 3 };

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
};

// Robot-local ground plane point.
struct GroundPoint {
  double x_forward = 0.0;
  double y_left = 0.0;
};

// Path extracted from a heatmap: one entry per covered heatmap row.
struct ImagePathEntry {
  int row = 0;
  double col = 0.0;
  double confidence = 0.0;
};

struct ImagePath {
  std::vector<ImagePathEntry> entries;  // rows strictly increasing
  // Heatmap pixels per full-resolution image pixel (0.5 for half size).
  double scale = 0.5;
  CameraId source_camera{};
};

struct BevPath {
  std::vector<GroundPoint> points;  // ordered by increasing |x_forward|
};

// Affine map between full-resolution pixel coordinates and a grid scaled by
// `scale`, keeping pixel centers aligned (pixel k of the scaled grid covers
// full-resolution pixels [k/scale, (k+1)/scale)).
constexpr double FullToScaled(double full, double scale) {
  return (full + 0.5) * scale - 0.5;
}
constexpr double ScaledToFull(double scaled, double scale) {
  return (scaled + 0.5) / scale - 0.5;
}

}  // namespace rownav

#endif  // ROWNAV_PATHS_H_
