#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rownav/errors.h"
#include "rownav/navigator.h"
#include "rownav/simulator.h"

namespace rownav {
namespace {

MissionRow EastRow() {
  MissionRow row;
  row.lane = 0;
  row.start = {0.0, 0.0, 0.0};
  row.end = {100.0, 0.0, 0.0};
  row.turn = TurnDirection::kLeft;
  return row;
}

GpsFix FixAt(double east, double north, double time) {
  GpsFix f;
  f.time = time;
  f.position = {east, north, 0.0};
  return f;
}

TEST(EndTrigger, FarNearAndStale) {
  const MissionRow row = EastRow();
  EXPECT_EQ(CheckEndTrigger(FixAt(70.0, 0.0, 1.0), row, 12.0, 1.0), EndTrigger::kFar);
  EXPECT_EQ(CheckEndTrigger(FixAt(90.0, 0.0, 1.0), row, 12.0, 1.0),
            EndTrigger::kReached);
  EXPECT_EQ(CheckEndTrigger(FixAt(92.0, 8.0, 1.0), row, 12.0, 1.0),
            EndTrigger::kReached);
  EXPECT_EQ(CheckEndTrigger(FixAt(90.0, 0.0, 1.0), row, 12.0, 3.5),
            EndTrigger::kStaleFix);
  EXPECT_EQ(CheckEndTrigger(FixAt(90.0, 0.0, 1.0), row, 12.0, 3.0),
            EndTrigger::kReached);
}

TEST(EndTrigger, UsesHorizontalDistanceOnly) {
  GpsFix f = FixAt(89.0, 0.0, 0.0);
  f.position.up = 50.0;
  EXPECT_EQ(CheckEndTrigger(f, EastRow(), 12.0, 0.0), EndTrigger::kReached);
}

MissionPlan TwoRowPlan() {
  MissionPlan plan;
  MissionRow a = EastRow();
  MissionRow b;
  b.lane = 1;
  b.start = {100.0, 2.7, 0.0};
  b.end = {0.0, 2.7, 0.0};
  b.turn = TurnDirection::kRight;
  plan.rows = {a, b};
  return plan;
}

TEST(MissionPlan, ValidPlanPasses) { EXPECT_NO_THROW(TwoRowPlan().Validate()); }

TEST(MissionPlan, RejectsBrokenPlans) {
  MissionPlan empty;
  EXPECT_THROW(empty.Validate(), ConfigError);

  MissionPlan gap = TwoRowPlan();
  gap.rows[1].lane = 2;
  EXPECT_THROW(gap.Validate(), ConfigError);

  MissionPlan same_dir = TwoRowPlan();
  std::swap(same_dir.rows[1].start, same_dir.rows[1].end);
  EXPECT_THROW(same_dir.Validate(), ConfigError);

  MissionPlan wrong_turn = TwoRowPlan();
  wrong_turn.rows[0].turn = TurnDirection::kRight;
  EXPECT_THROW(wrong_turn.Validate(), ConfigError);

  MissionPlan short_row = TwoRowPlan();
  short_row.rows[0].end = {10.0, 0.0, 0.0};
  short_row.rows[1].start = {10.0, 2.7, 0.0};
  EXPECT_THROW(short_row.Validate(), ConfigError);
}

TEST(Names, PhasesAndTurns) {
  EXPECT_EQ(NavPhaseName(NavPhase::kTurnOut), "turn_out");
  EXPECT_EQ(TurnDirectionFromName(TurnDirectionName(TurnDirection::kRight)),
            TurnDirection::kRight);
  EXPECT_THROW(TurnDirectionFromName("up"), ConfigError);
  EXPECT_EQ(TurnCamera(TurnDirection::kLeft), CameraId::kLeft);
  EXPECT_EQ(TurnCamera(TurnDirection::kRight), CameraId::kRight);
}

TEST(Navigator, StartsTrackingWithTheFrontCamera) {
  Navigator nav(TwoRowPlan());
  EXPECT_EQ(nav.phase(), NavPhase::kRowTracking);
  const Requirements req = nav.requirements();
  ASSERT_EQ(req.heatmap_cameras.size(), 1u);
  EXPECT_EQ(req.heatmap_cameras[0], CameraId::kFront);
  EXPECT_FALSE(req.depth_camera);
  EXPECT_EQ(req.target_lane, 0);
}

HeatmapResult RowHeatmap(double along) {
  WorldPose robot;
  robot.position = {along, 0.0, 0.0};
  Rng rng(1);
  const auto d = SyntheticHeatmap({0, 0, 0}, {100, 0, 0},
                                  [](double, double) { return 0.0; }, robot,
                                  DefaultCamera(CameraId::kFront),
                                  NoiseSpec::Noiseless(), rng);
  return {d.status, d.heatmap};
}

TEST(Navigator, EndTriggerLatches) {
  Navigator nav(TwoRowPlan());
  const HeatmapResult hm = RowHeatmap(85.0);
  int triggers = 0;
  for (int i = 0; i < 30; ++i) {
    SensorFrame f;
    f.time = i / 15.0;
    f.heatmaps[0] = hm;
    // Noisy fixes alternating around the 12 m circle.
    f.coarse_fix = FixAt(i % 2 == 0 ? 87.9 : 88.1, 0.0, f.time);
    const StepResult r = nav.Step(f);
    for (const auto& e : r.events) triggers += e.event == "end_trigger";
  }
  EXPECT_EQ(triggers, 1);
  EXPECT_EQ(nav.phase(), NavPhase::kEndApproach);
  const Requirements req = nav.requirements();
  EXPECT_EQ(req.heatmap_cameras[0], CameraId::kBack);
  EXPECT_EQ(req.depth_camera, CameraId::kLeft);
}

TEST(Navigator, FarFixKeepsTracking) {
  Navigator nav(TwoRowPlan());
  SensorFrame f;
  f.heatmaps[0] = RowHeatmap(20.0);
  f.coarse_fix = FixAt(20.0, 0.0, 0.0);
  const StepResult r = nav.Step(f);
  EXPECT_EQ(r.phase, NavPhase::kRowTracking);
  EXPECT_TRUE(r.errors);
  EXPECT_NEAR(r.command.v, 0.8, 1e-3);
  EXPECT_NEAR(r.command.omega, 0.0, 0.02);
}

TEST(Navigator, StaleFixDoesNotTrigger) {
  Navigator nav(TwoRowPlan());
  SensorFrame f;
  f.time = 10.0;
  f.heatmaps[0] = RowHeatmap(85.0);
  f.coarse_fix = FixAt(95.0, 0.0, 5.0);
  const StepResult r = nav.Step(f);
  EXPECT_EQ(r.phase, NavPhase::kRowTracking);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].event, "stale_gps");
}

TEST(Navigator, HoldsThenFaultsWithoutDetections) {
  Navigator nav(TwoRowPlan());
  SensorFrame f;
  f.heatmaps[0] = RowHeatmap(20.0);
  const VelocityCommand tracked = nav.Step(f).command;
  std::vector<std::string> events;
  VelocityCommand at_03{}, at_07{};
  for (int i = 1; i <= 90; ++i) {
    SensorFrame lost;
    lost.time = i / 15.0;
    const StepResult r = nav.Step(lost);
    if (i == 4) at_03 = r.command;
    if (i == 11) at_07 = r.command;
    for (const auto& e : r.events) events.push_back(e.event + ":" + e.reason);
  }
  EXPECT_EQ(at_03, tracked);
  EXPECT_EQ(at_07, VelocityCommand{});
  EXPECT_EQ(nav.phase(), NavPhase::kFault);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].rfind("detection_hold_expired", 0), 0u);
  EXPECT_EQ(events[1].rfind("fault:DetectionLost", 0), 0u);
}

TEST(Navigator, ResumeRestartsTracking) {
  Navigator nav(TwoRowPlan());
  std::vector<NavEvent> events;
  nav.ResumeAt(1, 3.0, &events);
  EXPECT_EQ(nav.row_index(), 1);
  EXPECT_EQ(nav.phase(), NavPhase::kRowTracking);
  EXPECT_TRUE(nav.last_row());
  EXPECT_EQ(nav.requirements().target_lane, 1);
  EXPECT_THROW(nav.ResumeAt(2, 3.0, &events), ConfigError);
}

// Closed-loop scenarios on the short flat preset.
TrialSetup ShortTrial(std::vector<int> lanes, bool noisy) {
  TrialSetup s;
  s.layout = BuildLayout(PresetLayout("RN"));
  s.plan = SerpentinePlan(s.layout, lanes, true);
  s.noise = noisy ? NoiseSpec{} : NoiseSpec::Noiseless();
  s.seed = 4;
  s.time_limit = 900.0;
  return s;
}

bool AllowedTransition(NavPhase a, NavPhase b) {
  using P = NavPhase;
  static const std::set<std::pair<P, P>> allowed = {
      {P::kRowTracking, P::kEndApproach}, {P::kEndApproach, P::kTurnOut},
      {P::kTurnOut, P::kTraverse},       {P::kTraverse, P::kTurnIn},
      {P::kTurnIn, P::kRowTracking},     {P::kEndApproach, P::kCompleted}};
  return a == b || allowed.count({a, b}) > 0;
}

TEST(Mission, TwoRowSwitchFollowsThePhaseCycle) {
  const TrialLog log = RunTrial(ShortTrial({0, 1}, true));
  ASSERT_TRUE(log.completed);
  EXPECT_EQ(log.interventions, 0);
  EXPECT_EQ(log.rows_completed, 2);
  std::vector<NavPhase> visited = {log.trajectory.front().phase};
  for (std::size_t i = 1; i < log.trajectory.size(); ++i) {
    const NavPhase a = log.trajectory[i - 1].phase;
    const NavPhase b = log.trajectory[i].phase;
    EXPECT_TRUE(AllowedTransition(a, b))
        << NavPhaseName(a) << " -> " << NavPhaseName(b);
    if (a != b) visited.push_back(b);
  }
  const std::vector<NavPhase> expected = {
      NavPhase::kRowTracking, NavPhase::kEndApproach, NavPhase::kTurnOut,
      NavPhase::kTraverse,    NavPhase::kTurnIn,      NavPhase::kRowTracking,
      NavPhase::kEndApproach, NavPhase::kCompleted};
  EXPECT_EQ(visited, expected);
}

TEST(Mission, TurnsHappenInPlace) {
  const TrialLog log = RunTrial(ShortTrial({0, 1}, true));
  int turning = 0;
  for (const auto& s : log.trajectory) {
    if (s.phase == NavPhase::kTurnOut || s.phase == NavPhase::kTurnIn) {
      EXPECT_EQ(s.command.v, 0.0);
      ++turning;
    }
  }
  EXPECT_GT(turning, 20);
}

TEST(Mission, TransitionsAreAligned) {
  const TrialLog log = RunTrial(ShortTrial({0, 1}, true));
  ASSERT_EQ(log.transitions.size(), 2u);
  for (const auto& t : log.transitions) {
    if (t.from == NavPhase::kTurnOut) {
      EXPECT_LE(t.error_deg, 2.0);
    } else {
      EXPECT_LE(t.error_deg, 5.0);
    }
  }
}

bool HasFault(const TrialLog& log, const std::string& reason) {
  return std::any_of(log.events.begin(), log.events.end(), [&](const NavEvent& e) {
    return e.event == "fault" && e.reason.rfind(reason, 0) == 0;
  });
}

TEST(Mission, SuppressedRowEndTimesOut) {
  TrialSetup s = ShortTrial({0, 1}, false);
  s.script.suppress_row_end = {0};
  s.abort_on_fault = true;
  const TrialLog log = RunTrial(s);
  EXPECT_TRUE(log.aborted);
  EXPECT_FALSE(log.completed);
  EXPECT_TRUE(HasFault(log, "RowEndTimeout"));
}

TEST(Mission, MisdetectedNextRowIsWrongRow) {
  TrialSetup s = ShortTrial({0, 1, 2}, false);
  s.script.misdetect_next_row = {0};
  s.abort_on_fault = true;
  const TrialLog log = RunTrial(s);
  EXPECT_TRUE(log.aborted);
  EXPECT_TRUE(HasFault(log, "WrongRow"));
}

TEST(Mission, FaultWithoutAbortCountsAnIntervention) {
  TrialSetup s = ShortTrial({0, 1}, false);
  s.script.suppress_row_end = {0};
  const TrialLog log = RunTrial(s);
  EXPECT_TRUE(log.completed);
  EXPECT_EQ(log.interventions, 1);
}

TEST(Mission, LongDropoutFaultsWithDetectionLost) {
  TrialSetup s = ShortTrial({0, 1}, false);
  s.script.dropouts.push_back({10.0, 8.0});
  s.abort_on_fault = true;
  const TrialLog log = RunTrial(s);
  EXPECT_TRUE(HasFault(log, "DetectionLost"));
  EXPECT_TRUE(std::any_of(log.events.begin(), log.events.end(), [](const NavEvent& e) {
    return e.event == "detection_hold_expired";
  }));
}

TEST(Mission, ShortDropoutIsBridged) {
  TrialSetup s = ShortTrial({0, 1}, false);
  s.script.dropouts.push_back({10.0, 0.4});
  const TrialLog log = RunTrial(s);
  EXPECT_TRUE(log.completed);
  EXPECT_EQ(log.interventions, 0);
}

}  // namespace
}  // namespace rownav
