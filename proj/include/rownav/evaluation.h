#ifndef ROWNAV_EVALUATION_H_
#define ROWNAV_EVALUATION_H_

// Trajectory metrics against the planned rows: signed positional deviation,
// heading deviation from the 1 Hz GPS track, and per-region summaries.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rownav/navigator.h"
#include "rownav/simulator.h"

namespace rownav {

inline constexpr double kEndRegionRadius = 12.0;  // m
inline constexpr double kStationaryThreshold = 0.05;  // m

enum class Region { kRowTracking = 0, kExiting = 1, kEntering = 2 };
std::string_view RegionName(Region region);

// Signed distance from `p` to the segment start-end in the horizontal
// plane; positive to the left of the start-to-end direction.
double PositionalDeviation(const WorldPoint& p, const WorldPoint& start,
                           const WorldPoint& end);

// Angle in degrees, wrapped to [-180, 180], from the row direction to the
// displacement prev -> cur (counter-clockwise positive). nullopt for
// displacements shorter than `stationary` (StationarySegment).
std::optional<double> HeadingDeviation(const WorldPoint& prev,
                                       const WorldPoint& cur,
                                       double row_heading,
                                       double stationary = kStationaryThreshold);

// kExiting within `radius` of the row end, kEntering within `radius` of the
// row start (the nearer endpoint wins), kRowTracking otherwise.
Region ClassifyRegion(const WorldPoint& p, const MissionRow& row,
                      double radius = kEndRegionRadius);

// Plan row whose segment is nearest to `p`.
int NearestRow(const WorldPoint& p, const MissionPlan& plan);

// Keeps fixes whose timestamp is a whole multiple of 1/hz.
std::vector<GpsFix> Downsample(const std::vector<GpsFix>& fixes, double hz);

struct DeviationSample {
  double time = 0.0;
  WorldPoint position;
  int row = 0;  // plan row index
  Region region = Region::kRowTracking;
  double positional_dev = 0.0;          // m
  std::optional<double> heading_dev;    // deg
  bool maneuvering = false;  // taken during a turn or traverse
};

struct EvaluationOptions {
  double downsample_hz = 1.0;
  double region_radius = kEndRegionRadius;
  double stationary = kStationaryThreshold;
};

// Phase of the navigator over time, for excluding in-place turns and
// traverses (where no row is being followed).
struct PhaseSample {
  double time = 0.0;
  NavPhase phase = NavPhase::kRowTracking;
};

std::vector<DeviationSample> ComputeDeviations(
    const std::vector<GpsFix>& rtk, const MissionPlan& plan,
    const std::vector<PhaseSample>& phases, const EvaluationOptions& options = {});

struct Stats {
  int count = 0;
  double mean = 0.0;        // of absolute values
  double std = 0.0;         // of absolute values
  double signed_max = 0.0;  // sample with the largest magnitude
};

std::optional<Stats> ComputeStats(const std::vector<double>& values);

struct TrialSummary {
  std::array<std::optional<Stats>, 3> positional;  // by Region
  std::array<std::optional<Stats>, 3> heading;
  int interventions = 0;
  int samples = 0;
  int excluded = 0;
};

TrialSummary Summarize(const std::vector<DeviationSample>& samples,
                       int interventions);
TrialSummary Summarize(const TrialLog& log, const MissionPlan& plan,
                       const EvaluationOptions& options = {});

// "mean ± std, max" with `precision` decimals, or "-" when absent.
std::string FormatCell(const std::optional<Stats>& stats, int precision = 2);

// Text table with one line per trial, columns as in the field-trial report.
std::string RenderTable(const std::vector<std::string>& labels,
                        const std::vector<TrialSummary>& summaries);
// metric,region,count,mean,std,max
std::string SummaryCsv(const TrialSummary& summary);
// Per-sample plot data.
std::string DeviationCsv(const std::vector<DeviationSample>& samples);

}  // namespace rownav

#endif  // ROWNAV_EVALUATION_H_
