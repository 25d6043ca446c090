#include "rownav/evaluation.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rownav {
namespace {

Eigen::Vector2d Xy(const WorldPoint& p) { return {p.east, p.north}; }

double SegmentDistance(const WorldPoint& p, const WorldPoint& a,
                       const WorldPoint& b) {
  return std::abs(PositionalDeviation(p, a, b));
}

NavPhase PhaseAt(const std::vector<PhaseSample>& phases, double t) {
  // Last sample at or before t.
  auto it = std::upper_bound(
      phases.begin(), phases.end(), t + 1e-9,
      [](double time, const PhaseSample& s) { return time < s.time; });
  if (it == phases.begin()) return NavPhase::kRowTracking;
  return std::prev(it)->phase;
}

bool Maneuvering(NavPhase phase) {
  return phase == NavPhase::kTurnOut || phase == NavPhase::kTraverse ||
         phase == NavPhase::kTurnIn;
}

}  // namespace

std::string_view RegionName(Region region) {
  switch (region) {
    case Region::kRowTracking:
      return "row_tracking";
    case Region::kExiting:
      return "exiting";
    case Region::kEntering:
      return "entering";
  }
  return "unknown";
}

double PositionalDeviation(const WorldPoint& p, const WorldPoint& start,
                           const WorldPoint& end) {
  const Eigen::Vector2d a = Xy(start);
  const Eigen::Vector2d d = Xy(end) - a;
  const Eigen::Vector2d w = Xy(p) - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp(w.dot(d) / len2, 0.0, 1.0) : 0.0;
  const double dist = (w - t * d).norm();
  const double cross = d.x() * w.y() - d.y() * w.x();
  return cross < 0.0 ? -dist : dist;
}

std::optional<double> HeadingDeviation(const WorldPoint& prev,
                                       const WorldPoint& cur,
                                       double row_heading, double stationary) {
  const Eigen::Vector2d d = Xy(cur) - Xy(prev);
  if (d.norm() < stationary) return std::nullopt;
  const double dev = NormalizeAngle(std::atan2(d.y(), d.x()) - row_heading);
  return RadToDeg(dev);
}

Region ClassifyRegion(const WorldPoint& p, const MissionRow& row,
                      double radius) {
  const double to_end = (Xy(p) - Xy(row.end)).norm();
  const double to_start = (Xy(p) - Xy(row.start)).norm();
  if (to_end < radius && to_end <= to_start) return Region::kExiting;
  if (to_start < radius) return Region::kEntering;
  if (to_end < radius) return Region::kExiting;
  return Region::kRowTracking;
}

int NearestRow(const WorldPoint& p, const MissionPlan& plan) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < plan.rows.size(); ++i) {
    const double d = SegmentDistance(p, plan.rows[i].start, plan.rows[i].end);
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<GpsFix> Downsample(const std::vector<GpsFix>& fixes, double hz) {
  std::vector<GpsFix> out;
  for (const auto& f : fixes) {
    const double k = f.time * hz;
    if (std::abs(k - std::round(k)) < 1e-6) out.push_back(f);
  }
  return out;
}

std::vector<DeviationSample> ComputeDeviations(
    const std::vector<GpsFix>& rtk, const MissionPlan& plan,
    const std::vector<PhaseSample>& phases, const EvaluationOptions& options) {
  const std::vector<GpsFix> track = Downsample(rtk, options.downsample_hz);
  std::vector<DeviationSample> samples;
  samples.reserve(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) {
    const GpsFix& fix = track[i];
    DeviationSample s;
    s.time = fix.time;
    s.position = fix.position;
    s.row = NearestRow(fix.position, plan);
    const MissionRow& row = plan.rows[s.row];
    s.region = ClassifyRegion(fix.position, row, options.region_radius);
    s.positional_dev = PositionalDeviation(fix.position, row.start, row.end);
    if (i > 0) {
      const double heading =
          std::atan2(row.end.north - row.start.north, row.end.east - row.start.east);
      s.heading_dev = HeadingDeviation(track[i - 1].position, fix.position,
                                       heading, options.stationary);
    }
    s.maneuvering = Maneuvering(PhaseAt(phases, fix.time));
    samples.push_back(s);
  }
  return samples;
}

std::optional<Stats> ComputeStats(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  Stats s;
  s.count = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) {
    sum += std::abs(v);
    if (std::abs(v) > std::abs(s.signed_max)) s.signed_max = v;
  }
  s.mean = sum / s.count;
  double sq = 0.0;
  for (double v : values) sq += (std::abs(v) - s.mean) * (std::abs(v) - s.mean);
  s.std = s.count > 1 ? std::sqrt(sq / (s.count - 1)) : 0.0;
  return s;
}

TrialSummary Summarize(const std::vector<DeviationSample>& samples,
                       int interventions) {
  std::array<std::vector<double>, 3> pos;
  std::array<std::vector<double>, 3> head;
  TrialSummary summary;
  summary.interventions = interventions;
  for (const auto& s : samples) {
    if (s.maneuvering) {
      ++summary.excluded;
      continue;
    }
    ++summary.samples;
    const auto r = static_cast<std::size_t>(s.region);
    pos[r].push_back(s.positional_dev);
    if (s.heading_dev) head[r].push_back(*s.heading_dev);
  }
  for (std::size_t r = 0; r < 3; ++r) {
    summary.positional[r] = ComputeStats(pos[r]);
    summary.heading[r] = ComputeStats(head[r]);
  }
  return summary;
}

TrialSummary Summarize(const TrialLog& log, const MissionPlan& plan,
                       const EvaluationOptions& options) {
  std::vector<GpsFix> rtk;
  for (const auto& f : log.gps) {
    if (f.kind == GpsKind::kRtk) rtk.push_back(f);
  }
  std::vector<PhaseSample> phases;
  phases.reserve(log.trajectory.size());
  for (const auto& t : log.trajectory) phases.push_back({t.time, t.phase});
  return Summarize(ComputeDeviations(rtk, plan, phases, options),
                   log.interventions);
}

std::string FormatCell(const std::optional<Stats>& stats, int precision) {
  if (!stats) return "-";
  return fmt::format("{:.{}f} ± {:.{}f}, {:.{}f}", stats->mean, precision,
                     stats->std, precision, stats->signed_max, precision);
}

std::string RenderTable(const std::vector<std::string>& labels,
                        const std::vector<TrialSummary>& summaries) {
  constexpr int kCell = 22;
  auto pad = [](std::string_view text, int width) {
    // Pads by code points so the plus-minus sign counts as one column.
    int points = 0;
    for (unsigned char c : text) points += (c & 0xC0) != 0x80;
    return std::string(text) + std::string(std::max(0, width - points), ' ');
  };
  std::string out;
  out += pad("", 12) + pad("", 14) +
         pad("Positional deviation (mean ± std, max)(m)", 3 * kCell) +
         "Heading deviation (mean ± std, max)(deg)\n";
  out += pad("Trial", 12) + pad("#Intervention", 14);
  for (int m = 0; m < 2; ++m) {
    out += pad("Row tracking", kCell) + pad("Exiting", kCell) +
           pad("Entering", kCell);
  }
  out += "\n";
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const TrialSummary& s = summaries[i];
    std::string line = pad(i < labels.size() ? labels[i] : fmt::format("{}", i + 1), 12) +
                       pad(fmt::format("{}", s.interventions), 14);
    for (const auto& cell : s.positional) line += pad(FormatCell(cell), kCell);
    for (const auto& cell : s.heading) line += pad(FormatCell(cell), kCell);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string SummaryCsv(const TrialSummary& summary) {
  std::string out = "metric,region,count,mean,std,max\n";
  auto emit = [&](std::string_view metric,
                  const std::array<std::optional<Stats>, 3>& cells) {
    for (std::size_t r = 0; r < 3; ++r) {
      const auto region = RegionName(static_cast<Region>(r));
      if (!cells[r]) {
        out += fmt::format("{},{},0,,,\n", metric, region);
        continue;
      }
      out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f}\n", metric, region,
                         cells[r]->count, cells[r]->mean, cells[r]->std,
                         cells[r]->signed_max);
    }
  };
  emit("positional_m", summary.positional);
  emit("heading_deg", summary.heading);
  return out;
}

std::string DeviationCsv(const std::vector<DeviationSample>& samples) {
  std::string out =
      "time,east,north,row,region,positional_dev,heading_dev,maneuvering\n";
  for (const auto& s : samples) {
    out += fmt::format("{:.3f},{:.4f},{:.4f},{},{},{:.6f},{},{}\n", s.time,
                       s.position.east, s.position.north, s.row,
                       RegionName(s.region), s.positional_dev,
                       s.heading_dev ? fmt::format("{:.6f}", *s.heading_dev) : "",
                       s.maneuvering ? 1 : 0);
  }
  return out;
}

}  // namespace rownav
