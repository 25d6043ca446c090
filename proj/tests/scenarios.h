#ifndef ROWNAV_TESTS_SCENARIOS_H_
#define ROWNAV_TESTS_SCENARIOS_H_

// Closed-loop scenarios shared by the unit and acceptance suites.

#include <cmath>
#include <limits>
#include <string>

#include "rownav/evaluation.h"
#include "rownav/simulator.h"

namespace scenario {

struct Convergence {
  bool completed = false;
  double settle_distance = std::numeric_limits<double>::infinity();  // m
  double max_after_settle = std::numeric_limits<double>::infinity(); // m
  double heading_mean_deg = std::numeric_limits<double>::infinity();
};

// Noise-free single-row run starting `offset` meters left of the row.
inline Convergence RunConvergence(const std::string& preset, double offset) {
  using namespace rownav;
  TrialSetup s;
  s.layout = BuildLayout(PresetLayout(preset));
  s.plan = SerpentinePlan(s.layout, {0}, true);
  s.noise = NoiseSpec::Noiseless();
  s.initial.lateral = offset;
  s.abort_on_fault = true;
  const TrialLog log = RunTrial(s);

  Convergence out;
  out.completed = log.completed;
  const MissionRow& row = s.plan.rows[0];
  const double dx = row.end.east - row.start.east;
  const double dy = row.end.north - row.start.north;
  const double len = std::hypot(dx, dy);
  bool settled = false;
  double worst = 0.0;
  for (const auto& t : log.trajectory) {
    if (t.phase != NavPhase::kRowTracking && t.phase != NavPhase::kEndApproach) {
      continue;
    }
    const auto& p = t.pose.position;
    const double along =
        ((p.east - row.start.east) * dx + (p.north - row.start.north) * dy) / len;
    if (along > len) break;
    const double dev = std::abs(PositionalDeviation(p, row.start, row.end));
    if (!settled && dev < 0.05) {
      settled = true;
      out.settle_distance = along;
    }
    if (settled) worst = std::max(worst, dev);
  }
  if (settled) out.max_after_settle = worst;
  const TrialSummary summary = Summarize(log, s.plan);
  if (const auto& h = summary.heading[static_cast<int>(Region::kRowTracking)]) {
    out.heading_mean_deg = h->mean;
  }
  return out;
}

}  // namespace scenario

#endif  // ROWNAV_TESTS_SCENARIOS_H_
