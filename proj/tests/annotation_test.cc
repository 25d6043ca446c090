#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "keystone.h"
#include "oracles.h"
#include "rownav/annotation.h"
#include "rownav/errors.h"
#include "rownav/io.h"

namespace rownav {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rownav_annotation_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double PointSegmentDistance(double px, double py, const ImagePoint& a,
                            const ImagePoint& b) {
  return std::abs(oracle::SignedSegmentDistance(px, py, a.u, a.v, b.u, b.v));
}

TEST(RenderHeatmap, ValueAtOneSigmaOffsetIsExpMinusHalf) {
  // 15 full-resolution pixels are 7.5 heatmap pixels.
  const std::vector<ImagePoint> line = {{100.5, 0.0}, {100.5, 239.0}};
  const Heatmap h = RenderHeatmap(line, 320, 240, 7.5);
  EXPECT_NEAR(h.at(120, 108), std::exp(-0.5), 1e-9);
  EXPECT_NEAR(h.at(120, 93), std::exp(-0.5), 1e-9);
}

TEST(RenderHeatmap, AnnotationSigmaIsFifteenFullResolutionPixels) {
  ImagePolyline path;
  // Full-resolution column 201.5 is heatmap column 100.5.
  for (double v = 0.0; v <= 479.0; v += 1.0) path.points.push_back({201.5, v});
  const Heatmap h = RenderAnnotation(path, DefaultCamera(CameraId::kFront));
  ASSERT_EQ(h.width(), 320);
  ASSERT_EQ(h.height(), 240);
  EXPECT_NEAR(h.at(100, 108), std::exp(-0.5), 1e-9);
}

TEST(RenderHeatmap, MatchesAnalyticDistanceField) {
  const std::vector<ImagePoint> pts = {{10.3, 200.2}, {150.7, 20.9}};
  const double sigma = 7.5;
  const Heatmap h = RenderHeatmap(pts, 200, 220, sigma);
  for (int r = 0; r < h.height(); r += 7) {
    for (int c = 0; c < h.width(); c += 5) {
      const double d = PointSegmentDistance(c, r, pts[0], pts[1]);
      const double expected = std::exp(-d * d / (2 * sigma * sigma));
      if (expected < 1e-12) {
        EXPECT_EQ(h.at(r, c), 0.0);
      } else {
        EXPECT_NEAR(h.at(r, c), expected, 1e-9) << r << "," << c;
      }
    }
  }
}

TEST(RenderHeatmap, ValuesStayInUnitIntervalAndPeakOnThePath) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 319.0), v(0.0, 239.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ImagePoint> pts;
    for (int i = 0; i < 5; ++i) pts.push_back({u(rng), v(rng)});
    const Heatmap h = RenderHeatmap(pts, 320, 240, 7.5);
    for (double x : h.values()) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
  const std::vector<ImagePoint> exact = {{40.0, 10.0}, {40.0, 100.0}};
  EXPECT_EQ(RenderHeatmap(exact, 80, 120, 7.5).at(50, 40), 1.0);
}

TEST(RenderHeatmap, PolylineIsMaxOfItsSegments) {
  const ImagePoint a{20.0, 200.0}, b{150.0, 90.0}, c{60.0, 10.0};
  const std::vector<ImagePoint> poly = {a, b, c};
  const std::vector<ImagePoint> s1 = {a, b};
  const std::vector<ImagePoint> s2 = {b, c};
  const Heatmap h = RenderHeatmap(poly, 200, 220, 7.5);
  const Heatmap h1 = RenderHeatmap(s1, 200, 220, 7.5);
  const Heatmap h2 = RenderHeatmap(s2, 200, 220, 7.5);
  for (std::size_t i = 0; i < h.values().size(); ++i) {
    EXPECT_DOUBLE_EQ(h.values()[i], std::max(h1.values()[i], h2.values()[i]));
  }
}

TEST(RenderHeatmap, DensifiedPolylineRendersLikeItsEndpoints) {
  std::vector<ImagePoint> dense;
  for (int i = 0; i <= 300; ++i) {
    const double t = i / 300.0;
    dense.push_back({30.0 + 200.0 * t, 220.0 - 180.0 * t});
  }
  const std::vector<ImagePoint> ends = {dense.front(), dense.back()};
  const Heatmap a = RenderHeatmap(dense, 320, 240, 7.5);
  const Heatmap b = RenderHeatmap(ends, 320, 240, 7.5);
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    EXPECT_NEAR(a.values()[i], b.values()[i], 1e-9);
  }
}

TEST(RenderHeatmap, TranslationEquivariance) {
  const std::vector<ImagePoint> pts = {{100.2, 150.6}, {140.9, 60.1}, {120.0, 30.0}};
  std::vector<ImagePoint> moved;
  const int dx = 23, dy = -11;
  for (const auto& p : pts) moved.push_back({p.u + dx, p.v + dy});
  const Heatmap a = RenderHeatmap(pts, 320, 240, 7.5);
  const Heatmap b = RenderHeatmap(moved, 320, 240, 7.5);
  for (int r = 20; r < 200; ++r) {
    for (int c = 40; c < 280; ++c) {
      EXPECT_NEAR(b.at(r + dy, c + dx), a.at(r, c), 1e-12);
    }
  }
}

TEST(RenderHeatmap, EmptyPathThrows) {
  EXPECT_THROW(RenderHeatmap({}, 320, 240, 7.5), EmptyPathError);
}

TEST(RenderHeatmap, SinglePointGivesIsotropicBlob) {
  const std::vector<ImagePoint> pt = {{50.0, 60.0}};
  const Heatmap h = RenderHeatmap(pt, 100, 100, 5.0);
  EXPECT_EQ(h.at(60, 50), 1.0);
  EXPECT_NEAR(h.at(60, 55), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(h.at(65, 50), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(h.at(63, 54), std::exp(-0.5), 1e-12);
}

FrameRecord FrameOnRow(double lateral, double heading_deg) {
  FrameRecord f;
  f.camera = DefaultCamera(CameraId::kFront);
  WorldPose robot;
  robot.position = {0.0, lateral, 0.0};
  robot.heading = DegToRad(heading_deg);
  f.camera_pose = ComposeCameraPose(robot, f.camera.mount);
  return f;
}

PathPolyline StraightPath(double length) {
  PathPolyline path;
  path.points = {{-5.0, 0.0, 0.0}, {length, 0.0, 0.0}};
  path.timestamps = {0.0, 100.0};
  return path;
}

TEST(ProjectPath, PolylineRunsNearToFarWithUnitSpacing) {
  const auto projected = ProjectPath(FrameOnRow(0.3, 4.0), StraightPath(120.0));
  ASSERT_TRUE(projected);
  const auto& pts = projected->points;
  ASSERT_GT(pts.size(), 100u);
  EXPECT_GT(pts.front().v, pts.back().v);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_LE(std::hypot(pts[i].u - pts[i - 1].u, pts[i].v - pts[i - 1].v),
              1.0 + 1e-9);
  }
  for (const auto& p : pts) {
    EXPECT_TRUE(InImage(DefaultCamera(CameraId::kFront), p));
  }
}

TEST(ProjectPath, FarEndApproachesTheVanishingPoint) {
  const FrameRecord f = FrameOnRow(0.2, 3.0);
  const auto projected = ProjectPath(f, StraightPath(120.0), 200.0);
  ASSERT_TRUE(projected);
  WorldPoint far_away = f.camera_pose.position;
  far_away.east += 1e7;
  far_away.up = 0.0;
  const auto vp = oracle::Project(f.camera.fx, f.camera.fy, f.camera.cx,
                                  f.camera.cy, f.camera_pose, far_away);
  ASSERT_TRUE(vp);
  EXPECT_NEAR(projected->points.back().u, (*vp)[0], 2.0);
}

TEST(ProjectPath, PathBehindTheCameraIsNotVisible) {
  const FrameRecord f = FrameOnRow(0.0, 180.0);
  PathPolyline path;
  path.points = {{1.0, 0.0, 0.0}, {100.0, 0.0, 0.0}};
  path.timestamps = {0.0, 1.0};
  EXPECT_FALSE(ProjectPath(f, path));
}

TEST(ProjectPath, LookaheadLimitsTheProjectedLength) {
  const FrameRecord f = FrameOnRow(0.0, 0.0);
  const auto near = ProjectPath(f, StraightPath(120.0), 5.0);
  const auto far = ProjectPath(f, StraightPath(120.0), 20.0);
  ASSERT_TRUE(near && far);
  EXPECT_GT(near->points.back().v, far->points.back().v);
}

TEST(PathAhead, StartsAtNearestPointAndCutsAtLookahead) {
  PathPolyline path;
  path.points = {{0, 0, 0}, {10, 0, 0}, {10, 10, 0}};
  path.timestamps = {0, 1, 2};
  const auto ahead = PathAhead(path, {4.0, 1.0, 0.0}, 8.0);
  ASSERT_EQ(ahead.size(), 3u);
  EXPECT_NEAR(ahead[0].east, 4.0, 1e-12);
  EXPECT_NEAR(ahead[0].north, 0.0, 1e-12);
  EXPECT_NEAR(ahead[2].east, 10.0, 1e-12);
  EXPECT_NEAR(ahead[2].north, 2.0, 1e-12);
}

TEST(Keystone, ArgmaxMatchesProjectedColumnOnRandomFrames) {
  std::mt19937_64 rng(99);
  int visible = 0;
  for (int i = 0; i < 100; ++i) {
    const auto frame = keystone::RandomFrame(rng);
    const auto result = keystone::Check(frame);
    EXPECT_EQ(result.visible, result.oracle_visible) << "frame " << i;
    if (!result.visible) continue;
    ++visible;
    EXPECT_GT(result.covered_rows, 0);
    EXPECT_EQ(result.argmax_mismatches, 0)
        << "frame " << i << " max error " << result.max_error;
  }
  EXPECT_GT(visible, 80);
}

TEST(InterpolatePose, LinearInPositionShortestArcInHeading) {
  std::vector<PoseSample> poses(2);
  poses[0].time = 0.0;
  poses[0].pose.position = {0, 0, 0};
  poses[0].pose.heading = DegToRad(170);
  poses[1].time = 2.0;
  poses[1].pose.position = {2, 4, 1};
  poses[1].pose.heading = DegToRad(-170);
  const auto mid = InterpolatePose(poses, 1.0);
  ASSERT_TRUE(mid);
  EXPECT_NEAR(mid->position.east, 1.0, 1e-12);
  EXPECT_NEAR(mid->position.north, 2.0, 1e-12);
  EXPECT_NEAR(std::abs(mid->heading), kPi, 1e-12);
  EXPECT_FALSE(InterpolatePose(poses, -0.1));
  EXPECT_FALSE(InterpolatePose(poses, 2.1));
}

RecordingLog StraightRecording(int frames) {
  RecordingLog log;
  log.camera = DefaultCamera(CameraId::kFront);
  for (int i = 0; i <= 200; ++i) {
    PoseSample s;
    s.time = i * 0.1;
    s.pose.position = {0.08 * i, 0.05 * std::sin(0.1 * i), 0.0};
    s.pose.heading = 0.02 * std::cos(0.1 * i);
    log.poses.push_back(s);
  }
  for (int i = 0; i < frames; ++i) log.frames.push_back({i, i / 15.0});
  return log;
}

PathPolyline RecordedPath() {
  PathPolyline path;
  for (int i = 0; i <= 400; ++i) {
    path.timestamps.push_back(i * 0.1);
    path.points.push_back({0.08 * i, 0.0, 0.0});
  }
  return path;
}

TEST(BuildDataset, AnnotatesEveryBracketedFrame) {
  const Dataset d = BuildDataset(StraightRecording(100), RecordedPath(), {});
  EXPECT_EQ(d.annotated, 100);
  EXPECT_EQ(d.clock_skew, 0);
  for (std::size_t i = 0; i < d.frames.size(); ++i) {
    EXPECT_EQ(d.frames[i].frame.frame_id, static_cast<int>(i));
    ASSERT_TRUE(d.frames[i].heatmap);
    EXPECT_EQ(d.frames[i].heatmap->width(), 320);
  }
}

TEST(BuildDataset, FramesOutsideThePoseStreamAreClockSkew) {
  RecordingLog log = StraightRecording(10);
  log.frames.push_back({10, 25.0});
  log.frames.push_back({11, -1.0});
  const Dataset d = BuildDataset(log, RecordedPath(), {});
  EXPECT_EQ(d.annotated, 10);
  EXPECT_EQ(d.clock_skew, 2);
  EXPECT_EQ(d.frames[10].skip, SkipReason::kClockSkew);
}

TEST(BuildDataset, FramesLookingAwayHaveNoVisiblePath) {
  RecordingLog log = StraightRecording(5);
  for (auto& s : log.poses) s.pose.heading += kPi;
  const Dataset d = BuildDataset(log, RecordedPath(), {});
  EXPECT_EQ(d.no_visible_path, 5);
  EXPECT_EQ(d.annotated, 0);
}

TEST(BuildDataset, OutputDoesNotDependOnThreadCount) {
  const RecordingLog log = StraightRecording(40);
  DatasetConfig one;
  DatasetConfig four;
  four.threads = 4;
  const Dataset a = BuildDataset(log, RecordedPath(), one);
  const Dataset b = BuildDataset(log, RecordedPath(), four);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i].heatmap, b.frames[i].heatmap);
  }
}

TEST(BuildDataset, InvalidPathIsRejected) {
  PathPolyline path;
  path.points = {{0, 0, 0}};
  path.timestamps = {0};
  EXPECT_THROW(BuildDataset(StraightRecording(1), path, {}), ConfigError);
  path.points = {{0, 0, 0}, {1, 0, 0}};
  path.timestamps = {1, 1};
  EXPECT_THROW(BuildDataset(StraightRecording(1), path, {}), ConfigError);
}

TEST(WriteDataset, ManifestAndHeatmapsRoundTrip) {
  RecordingLog log = StraightRecording(6);
  log.frames.push_back({6, 99.0});
  const Dataset d = BuildDataset(log, RecordedPath(), {});
  const fs::path dir = TempDir("dataset");
  WriteDataset(d, {}, dir);
  std::ifstream manifest(dir / "manifest.jsonl");
  std::string line;
  int lines = 0;
  int skipped = 0;
  while (std::getline(manifest, line)) {
    const auto rec = nlohmann::json::parse(line);
    ++lines;
    if (rec["heatmap_file"].is_null()) {
      ++skipped;
      EXPECT_EQ(rec["skip_reason"], "clock_skew");
      continue;
    }
    const Heatmap png = ReadHeatmapPng(dir / rec["heatmap_file"].get<std::string>());
    const Heatmap& mem = *d.frames[rec["frame_id"].get<int>()].heatmap;
    ASSERT_EQ(png.width(), mem.width());
    for (std::size_t i = 0; i < png.values().size(); ++i) {
      EXPECT_EQ(png.values()[i], QuantizeHeatmapValue(mem.values()[i]));
    }
  }
  EXPECT_EQ(lines, 7);
  EXPECT_EQ(skipped, 1);
  const auto meta = nlohmann::json::parse(ReadTextFile(dir / "dataset.json"));
  EXPECT_EQ(meta["sigma_px"], 15.0);
}

TEST(RecordingLog, RoundTripsThroughDisk) {
  const RecordingLog log = StraightRecording(12);
  const fs::path dir = TempDir("recording");
  WriteRecordingLog(log, dir / "rec");
  WritePathCsv(RecordedPath(), dir / "path.csv");
  const RecordingLog back = ReadRecordingLog(dir / "rec");
  ASSERT_EQ(back.poses.size(), log.poses.size());
  ASSERT_EQ(back.frames.size(), log.frames.size());
  EXPECT_NEAR(back.poses[7].pose.heading, log.poses[7].pose.heading, 1e-9);
  EXPECT_NEAR(back.frames[5].timestamp, log.frames[5].timestamp, 1e-6);
  EXPECT_EQ(back.camera.id, CameraId::kFront);
  const PathPolyline path = ReadPathCsv(dir / "path.csv");
  EXPECT_EQ(path.points.size(), 401u);
}

}  // namespace
}  // namespace rownav
