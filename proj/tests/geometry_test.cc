#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "oracles.h"
#include "rownav/errors.h"
#include "rownav/geometry.h"

namespace rownav {
namespace {

WorldPose Identity() { return {}; }

TEST(NormalizeAngle, WrapsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(NormalizeAngle(kPi), kPi);
  EXPECT_DOUBLE_EQ(NormalizeAngle(-kPi), kPi);
  EXPECT_NEAR(NormalizeAngle(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> any(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = any(rng);
    const double w = NormalizeAngle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::remainder(a - w, 2 * kPi), 0.0, 1e-9);
  }
}

TEST(Projection, PointOnOpticalAxisHitsPrincipalPoint) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  const auto px = ProjectPoint(cam, Identity(), {5.0, 0.0, 0.0});
  ASSERT_TRUE(px);
  EXPECT_NEAR(px->u, cam.cx, 1e-12);
  EXPECT_NEAR(px->v, cam.cy, 1e-12);
}

TEST(Projection, KnownPoint) {
  // Half a meter right of the axis at 2 m depth.
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  const auto px = ProjectPoint(cam, Identity(), {2.0, -0.5, 0.0});
  ASSERT_TRUE(px);
  EXPECT_NEAR(px->u, 470.0, 1e-9);
  EXPECT_NEAR(px->v, 240.0, 1e-9);
}

TEST(Projection, PointsBehindOrOnCameraPlaneAreNotVisible) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  EXPECT_FALSE(ProjectPoint(cam, Identity(), {-1.0, 0.0, 0.0}));
  EXPECT_FALSE(ProjectPoint(cam, Identity(), {0.0, 0.3, 0.0}));
  EXPECT_FALSE(ProjectToImagePlane(cam, Identity(), {-2.0, 0.0, 0.0}));
}

TEST(Projection, OffImagePointsAreNotVisible) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  EXPECT_FALSE(ProjectPoint(cam, Identity(), {1.0, 5.0, 0.0}));
  const auto plane = ProjectToImagePlane(cam, Identity(), {1.0, 5.0, 0.0});
  ASSERT_TRUE(plane);
  EXPECT_LT(plane->u, 0.0);
}

TEST(Projection, MatchesIndependentOracleForRandomPoses) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-20.0, 20.0);
  std::uniform_real_distribution<double> ang(-0.6, 0.6);
  std::uniform_real_distribution<double> head(-kPi, kPi);
  CameraModel cam = DefaultCamera(CameraId::kFront);
  cam.fx = 580.0;
  cam.cx = 310.0;
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    WorldPose pose{{pos(rng), pos(rng), pos(rng) * 0.1}, head(rng), ang(rng),
                   ang(rng)};
    const WorldPoint p{pos(rng), pos(rng), pos(rng) * 0.1};
    const auto lib = ProjectToImagePlane(cam, pose, p);
    const auto ref = oracle::Project(cam.fx, cam.fy, cam.cx, cam.cy, pose, p);
    ASSERT_EQ(lib.has_value(), ref.has_value());
    if (!lib) continue;
    ++checked;
    const double tol = 1e-9 * (1.0 + std::abs((*ref)[0]) + std::abs((*ref)[1]));
    EXPECT_NEAR(lib->u, (*ref)[0], tol);
    EXPECT_NEAR(lib->v, (*ref)[1], tol);
  }
  EXPECT_GT(checked, 1000);
}

TEST(Projection, ProjectionMatrixIsScaleInvariant) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  const WorldPose pose{{1.0, 2.0, 1.0}, 0.3, 0.1, -0.05};
  const auto P = ProjectionMatrix(cam, pose);
  const Eigen::Vector4d x(8.0, 5.0, 0.2, 1.0);
  for (double lambda : {0.5, 3.0, -2.0}) {
    const Eigen::Vector3d a = P * x;
    const Eigen::Vector3d b = P * (lambda * x);
    EXPECT_NEAR(a.x() / a.z(), b.x() / b.z(), 1e-9);
    EXPECT_NEAR(a.y() / a.z(), b.y() / b.z(), 1e-9);
  }
}

TEST(Rotation, PoseFromRotationInvertsRotationMatrix) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> head(-3.0, 3.0);
  std::uniform_real_distribution<double> tilt(-1.2, 1.2);
  for (int i = 0; i < 500; ++i) {
    const double h = head(rng), p = tilt(rng), r = head(rng);
    const WorldPose pose =
        PoseFromRotation(Eigen::Vector3d::Zero(), RotationMatrix(h, p, r));
    EXPECT_NEAR(NormalizeAngle(pose.heading - h), 0.0, 1e-9);
    EXPECT_NEAR(pose.pitch, p, 1e-9);
    EXPECT_NEAR(NormalizeAngle(pose.roll - r), 0.0, 1e-9);
  }
}

TEST(Rotation, ColumnsMatchOracleBodyAxes) {
  const Eigen::Matrix3d R = RotationMatrix(0.7, 0.2, -0.3);
  const auto axes = oracle::BodyAxes(0.7, 0.2, -0.3);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(R(0, c), axes[c].x, 1e-12);
    EXPECT_NEAR(R(1, c), axes[c].y, 1e-12);
    EXPECT_NEAR(R(2, c), axes[c].z, 1e-12);
  }
}

TEST(CameraMount, ComposedPoseMatchesOracle) {
  const WorldPose robot{{10.0, -4.0, 2.0}, 1.1, 0.0, 0.0};
  struct Case {
    CameraId id;
    double fwd, left, yaw;
  };
  for (const Case c : {Case{CameraId::kFront, 0.3, 0.0, 0.0},
                       Case{CameraId::kBack, -0.3, 0.0, kPi},
                       Case{CameraId::kLeft, 0.0, 0.0, kPi / 2},
                       Case{CameraId::kRight, 0.0, 0.0, -kPi / 2}}) {
    const CameraModel cam = DefaultCamera(c.id);
    const WorldPose lib = ComposeCameraPose(robot, cam.mount);
    const WorldPose ref =
        oracle::MountedCamera(robot, c.fwd, c.left, 1.0, c.yaw, DegToRad(10.0));
    EXPECT_NEAR(lib.position.east, ref.position.east, 1e-12);
    EXPECT_NEAR(lib.position.north, ref.position.north, 1e-12);
    EXPECT_NEAR(lib.position.up, ref.position.up, 1e-12);
    EXPECT_NEAR(NormalizeAngle(lib.heading - ref.heading), 0.0, 1e-12);
    EXPECT_NEAR(lib.pitch, ref.pitch, 1e-12);
    EXPECT_NEAR(lib.roll, 0.0, 1e-12);
  }
}

TEST(CameraModel, ValidateRejectsBadIntrinsics) {
  CameraModel cam = DefaultCamera(CameraId::kFront);
  EXPECT_NO_THROW(cam.Validate());
  cam.fx = 0.0;
  EXPECT_THROW(cam.Validate(), ConfigError);
  cam = DefaultCamera(CameraId::kFront);
  cam.width = 0;
  EXPECT_THROW(cam.Validate(), ConfigError);
}

class HomographyTest : public ::testing::TestWithParam<CameraId> {};

TEST_P(HomographyTest, RoundTripRecoversGroundPoints) {
  const CameraModel cam = DefaultCamera(GetParam());
  const GroundHomography h(cam, MountPose(cam.mount));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-25.0, 25.0);
  int visible = 0;
  while (visible < 1000) {
    const GroundPoint g{coord(rng), coord(rng)};
    const auto px = h.ToImage(g);
    if (!px || !InImage(cam, *px)) continue;
    ++visible;
    const auto back = h.ToGround(*px, 1e9);
    ASSERT_TRUE(back);
    EXPECT_NEAR(back->x_forward, g.x_forward, 1e-6);
    EXPECT_NEAR(back->y_left, g.y_left, 1e-6);
  }
}

TEST_P(HomographyTest, ForwardAndInverseComposeToIdentity) {
  const CameraModel cam = DefaultCamera(GetParam());
  const GroundHomography h(cam, MountPose(cam.mount));
  const Eigen::Matrix3d prod = h.ground_to_image() * h.image_to_ground();
  EXPECT_TRUE(prod.isApprox(Eigen::Matrix3d::Identity(), 1e-9)) << prod;
}

TEST_P(HomographyTest, AgreesWithFullProjection) {
  const CameraModel cam = DefaultCamera(GetParam());
  const WorldPose camera_in_robot = MountPose(cam.mount);
  const GroundHomography h(cam, camera_in_robot);
  for (double x = -12.0; x <= 12.0; x += 1.5) {
    for (double y = -12.0; y <= 12.0; y += 1.5) {
      const auto a = h.ToImage({x, y});
      const auto b = oracle::Project(cam.fx, cam.fy, cam.cx, cam.cy,
                                     camera_in_robot, {x, y, 0.0});
      ASSERT_EQ(a.has_value(), b.has_value()) << x << "," << y;
      if (!a) continue;
      EXPECT_NEAR(a->u, (*b)[0], 1e-6);
      EXPECT_NEAR(a->v, (*b)[1], 1e-6);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllCameras, HomographyTest,
                         ::testing::Values(CameraId::kFront, CameraId::kBack,
                                           CameraId::kLeft, CameraId::kRight));

TEST(Homography, PrincipalPointMapsToOpticalAxisGroundHit) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  const GroundHomography h(cam, MountPose(cam.mount));
  const auto g = h.ToGround({cam.cx, cam.cy}, 100.0);
  ASSERT_TRUE(g);
  const double expected = cam.mount.offset.x() + 1.0 / std::tan(DegToRad(10.0));
  EXPECT_NEAR(g->x_forward, expected, 1e-9);
  EXPECT_NEAR(g->y_left, 0.0, 1e-9);
}

TEST(Homography, HorizonAndAboveHaveNoGroundPoint) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  const GroundHomography h(cam, MountPose(cam.mount));
  const double horizon_v = cam.cy - cam.fy * std::tan(DegToRad(10.0));
  EXPECT_FALSE(h.ToGround({cam.cx, horizon_v}, 1e9));
  EXPECT_FALSE(h.ToGround({cam.cx, horizon_v - 20.0}, 1e9));
  EXPECT_FALSE(h.ToGround({cam.cx, 0.0}, 1e9));
  // Just below the horizon the hit is far away and clipped by max range.
  EXPECT_FALSE(h.ToGround({cam.cx, horizon_v + 0.5}, 20.0));
  EXPECT_TRUE(h.ToGround({cam.cx, horizon_v + 0.5}, 1e9));
}

TEST(Homography, CameraOnTheGroundIsDegenerate) {
  CameraModel cam = DefaultCamera(CameraId::kFront);
  cam.mount.offset.z() = 0.0;
  EXPECT_THROW(GroundHomography(cam, MountPose(cam.mount)), DegenerateViewError);
}

ImagePath StraightImagePath(const GroundHomography& h, double y, double angle) {
  // A ground line images to a straight image line; take the column of that
  // line at every heatmap row between the projections of its two ends.
  const auto near = h.ToImage({1.5 * std::cos(angle), y + 1.5 * std::sin(angle)});
  const auto far = h.ToImage({30.0 * std::cos(angle), y + 30.0 * std::sin(angle)});
  ImagePath path;
  path.scale = 0.5;
  if (!near || !far) return path;
  const double v0 = FullToScaled(near->v, 0.5), u0 = FullToScaled(near->u, 0.5);
  const double v1 = FullToScaled(far->v, 0.5), u1 = FullToScaled(far->u, 0.5);
  for (int row = static_cast<int>(std::ceil(std::min(v0, v1)));
       row <= static_cast<int>(std::floor(std::max(v0, v1))) && row < 240; ++row) {
    if (row < 0) continue;
    const double col = u0 + (u1 - u0) * (row - v0) / (v1 - v0);
    if (col < 0 || col > 319) continue;
    path.entries.push_back({row, col, 1.0});
  }
  return path;
}

TEST(Bev, StraightImagePathMapsToCollinearGroundPoints) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  const GroundHomography h(cam, MountPose(cam.mount));
  const ImagePath path = StraightImagePath(h, 0.4, DegToRad(5.0));
  ASSERT_GT(path.entries.size(), 50u);
  const BevPath bev = ImagePathToBev(path, h, 40.0);
  ASSERT_EQ(bev.points.size(), path.entries.size());
  for (std::size_t i = 1; i < bev.points.size(); ++i) {
    EXPECT_LE(std::abs(bev.points[i - 1].x_forward),
              std::abs(bev.points[i].x_forward));
  }
  // Every point lies on the line through the first and last ground points.
  const auto& a = bev.points.front();
  const auto& b = bev.points.back();
  const double len = std::hypot(b.x_forward - a.x_forward, b.y_left - a.y_left);
  for (const auto& p : bev.points) {
    const double cross = (b.x_forward - a.x_forward) * (p.y_left - a.y_left) -
                         (b.y_left - a.y_left) * (p.x_forward - a.x_forward);
    EXPECT_LT(std::abs(cross / len), 1e-6);
  }
}

TEST(Bev, SinglePixelGivesSinglePoint) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  const GroundHomography h(cam, MountPose(cam.mount));
  ImagePath path;
  path.entries.push_back({200, 160.0, 1.0});
  const BevPath bev = ImagePathToBev(path, h, 40.0);
  ASSERT_EQ(bev.points.size(), 1u);
  const auto direct = h.ToGround({ScaledToFull(160.0, 0.5), ScaledToFull(200, 0.5)}, 40.0);
  ASSERT_TRUE(direct);
  EXPECT_NEAR(bev.points[0].x_forward, direct->x_forward, 1e-12);
}

TEST(Bev, PathAboveHorizonIsEmpty) {
  const CameraModel cam = DefaultCamera(CameraId::kFront);
  const GroundHomography h(cam, MountPose(cam.mount));
  ImagePath path;
  for (int r = 0; r < 10; ++r) path.entries.push_back({r, 160.0, 1.0});
  EXPECT_THROW(ImagePathToBev(path, h, 40.0), EmptyPathError);
}

TEST(Bev, RearCameraPointsAreBehindTheRobot) {
  const CameraModel cam = DefaultCamera(CameraId::kBack);
  const GroundHomography h(cam, MountPose(cam.mount));
  ImagePath path;
  for (int r = 150; r < 240; ++r) path.entries.push_back({r, 160.0, 1.0});
  const BevPath bev = ImagePathToBev(path, h, 40.0);
  for (const auto& p : bev.points) {
    EXPECT_LT(p.x_forward, 0.0);
    EXPECT_NEAR(p.y_left, 0.0, 0.01);
  }
}

}  // namespace
}  // namespace rownav
