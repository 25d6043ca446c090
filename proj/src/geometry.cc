#include "rownav/geometry.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "rownav/errors.h"

namespace rownav {
namespace {

// Camera body frame (x forward, y left, z up) to optical frame
// (x right, y down, z forward).
Eigen::Matrix3d BodyToOptical() {
  Eigen::Matrix3d m;
  m << 0, -1, 0,  //
      0, 0, -1,   //
      1, 0, 0;
  return m;
}

}  // namespace

double NormalizeAngle(double angle) {
  double a = std::fmod(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

std::string_view CameraName(CameraId id) {
  switch (id) {
    case CameraId::kFront:
      return "front";
    case CameraId::kBack:
      return "back";
    case CameraId::kLeft:
      return "left";
    case CameraId::kRight:
      return "right";
  }
  return "unknown";
}

void CameraModel::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ConfigError("camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw ConfigError("camera resolution must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ConfigError("principal point must lie inside the image");
  }
}

Eigen::Matrix3d CameraModel::Intrinsics() const {
  Eigen::Matrix3d k;
  k << fx, 0, cx,  //
      0, fy, cy,   //
      0, 0, 1;
  return k;
}

double CameraModel::HorizontalFov() const {
  return std::atan(cx / fx) + std::atan((width - cx) / fx);
}

CameraModel DefaultCamera(CameraId id) {
  CameraModel cam;
  cam.id = id;
  cam.mount.pitch = DegToRad(10.0);
  switch (id) {
    case CameraId::kFront:
      cam.mount.offset = {0.3, 0.0, 1.0};
      cam.mount.yaw = 0.0;
      break;
    case CameraId::kBack:
      cam.mount.offset = {-0.3, 0.0, 1.0};
      cam.mount.yaw = kPi;
      break;
    case CameraId::kLeft:
      cam.mount.offset = {0.0, 0.0, 1.0};
      cam.mount.yaw = kPi / 2.0;
      break;
    case CameraId::kRight:
      cam.mount.offset = {0.0, 0.0, 1.0};
      cam.mount.yaw = -kPi / 2.0;
      break;
  }
  return cam;
}

Eigen::Matrix3d RotationMatrix(double heading, double pitch, double roll) {
  const Eigen::Matrix3d rz =
      Eigen::AngleAxisd(heading, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3d ry =
      Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rx =
      Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()).toRotationMatrix();
  return rz * ry * rx;
}

Eigen::Matrix3d RotationMatrix(const WorldPose& pose) {
  return RotationMatrix(pose.heading, pose.pitch, pose.roll);
}

WorldPose PoseFromRotation(const Eigen::Vector3d& position,
                           const Eigen::Matrix3d& rotation) {
  WorldPose pose;
  pose.position = ToWorldPoint(position);
  pose.heading = NormalizeAngle(std::atan2(rotation(1, 0), rotation(0, 0)));
  pose.pitch = std::asin(std::clamp(-rotation(2, 0), -1.0, 1.0));
  pose.roll = std::atan2(rotation(2, 1), rotation(2, 2));
  return pose;
}

Eigen::Vector3d ToVector(const WorldPoint& p) {
  return {p.east, p.north, p.up};
}

WorldPoint ToWorldPoint(const Eigen::Vector3d& v) {
  return {v.x(), v.y(), v.z()};
}

WorldPose ComposeCameraPose(const WorldPose& robot, const CameraMount& mount) {
  const Eigen::Matrix3d r_robot = RotationMatrix(robot);
  const Eigen::Matrix3d r_mount =
      RotationMatrix(mount.yaw, mount.pitch, mount.roll);
  const Eigen::Vector3d position =
      ToVector(robot.position) + r_robot * mount.offset;
  return PoseFromRotation(position, r_robot * r_mount);
}

WorldPose MountPose(const CameraMount& mount) {
  WorldPose pose;
  pose.position = ToWorldPoint(mount.offset);
  pose.heading = NormalizeAngle(mount.yaw);
  pose.pitch = mount.pitch;
  pose.roll = mount.roll;
  return pose;
}

Eigen::Matrix<double, 3, 4> ProjectionMatrix(const CameraModel& cam,
                                             const WorldPose& camera_pose) {
  const Eigen::Matrix3d world_to_body = RotationMatrix(camera_pose).transpose();
  Eigen::Matrix<double, 3, 4> extrinsics;
  extrinsics.leftCols<3>() = BodyToOptical() * world_to_body;
  extrinsics.col(3) =
      -BodyToOptical() * world_to_body * ToVector(camera_pose.position);
  return cam.Intrinsics() * extrinsics;
}

Eigen::Vector3d ToOpticalFrame(const WorldPose& camera_pose,
                               const WorldPoint& p) {
  const Eigen::Matrix3d world_to_body = RotationMatrix(camera_pose).transpose();
  return BodyToOptical() * world_to_body *
         (ToVector(p) - ToVector(camera_pose.position));
}

std::optional<ImagePoint> ProjectToImagePlane(const CameraModel& cam,
                                              const WorldPose& camera_pose,
                                              const WorldPoint& p) {
  const Eigen::Vector4d xw(p.east, p.north, p.up, 1.0);
  const Eigen::Vector3d xc = ProjectionMatrix(cam, camera_pose) * xw;
  // K has [0 0 1] as its last row, so the third component is the depth.
  if (!(xc.z() > kMinProjectionDepth)) return std::nullopt;
  return ImagePoint{xc.x() / xc.z(), xc.y() / xc.z()};
}

bool InImage(const CameraModel& cam, const ImagePoint& px) {
  return px.u >= 0.0 && px.u < cam.width && px.v >= 0.0 && px.v < cam.height;
}

std::optional<ImagePoint> ProjectPoint(const CameraModel& cam,
                                       const WorldPose& camera_pose,
                                       const WorldPoint& p) {
  auto px = ProjectToImagePlane(cam, camera_pose, p);
  if (!px || !InImage(cam, *px)) return std::nullopt;
  return px;
}

GroundHomography::GroundHomography(const CameraModel& cam,
                                   const WorldPose& camera_in_robot,
                                   double max_condition) {
  cam.Validate();
  const Eigen::Matrix3d robot_to_body =
      RotationMatrix(camera_in_robot).transpose();
  robot_to_optical_ = BodyToOptical() * robot_to_body;
  camera_position_ = ToVector(camera_in_robot.position);

  Eigen::Matrix3d plane;
  plane.col(0) = robot_to_optical_.col(0);
  plane.col(1) = robot_to_optical_.col(1);
  plane.col(2) = -robot_to_optical_ * camera_position_;
  ground_to_image_ = cam.Intrinsics() * plane;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(ground_to_image_);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(2) > 0.0) || sv(0) / sv(2) > max_condition) {
    throw DegenerateViewError(
        "ground-plane homography is singular for this camera pose");
  }
  image_to_ground_ = ground_to_image_.inverse();
}

std::optional<ImagePoint> GroundHomography::ToImage(
    const GroundPoint& g) const {
  const Eigen::Vector3d optical =
      robot_to_optical_ * (Eigen::Vector3d(g.x_forward, g.y_left, 0.0) -
                           camera_position_);
  if (!(optical.z() > kMinProjectionDepth)) return std::nullopt;
  const Eigen::Vector3d h =
      ground_to_image_ * Eigen::Vector3d(g.x_forward, g.y_left, 1.0);
  return ImagePoint{h.x() / h.z(), h.y() / h.z()};
}

std::optional<GroundPoint> GroundHomography::ToGround(const ImagePoint& px,
                                                      double max_range) const {
  const Eigen::Vector3d h = image_to_ground_ * Eigen::Vector3d(px.u, px.v, 1.0);
  if (std::abs(h.z()) < 1e-15) return std::nullopt;
  const GroundPoint g{h.x() / h.z(), h.y() / h.z()};
  const Eigen::Vector3d optical =
      robot_to_optical_ *
      (Eigen::Vector3d(g.x_forward, g.y_left, 0.0) - camera_position_);
  // Pixels above the horizon back-project behind the camera.
  if (!(optical.z() > kMinProjectionDepth)) return std::nullopt;
  if (std::hypot(g.x_forward, g.y_left) > max_range) return std::nullopt;
  return g;
}

BevPath ImagePathToBev(const ImagePath& path, const GroundHomography& h,
                       double max_range) {
  if (path.entries.empty()) throw EmptyPathError("image path is empty");
  BevPath bev;
  bev.points.reserve(path.entries.size());
  for (const auto& e : path.entries) {
    const ImagePoint px{ScaledToFull(e.col, path.scale),
                        ScaledToFull(e.row, path.scale)};
    if (auto g = h.ToGround(px, max_range)) bev.points.push_back(*g);
  }
  if (bev.points.empty()) {
    throw EmptyPathError("no image path point maps within the BEV range");
  }
  std::stable_sort(bev.points.begin(), bev.points.end(),
                   [](const GroundPoint& a, const GroundPoint& b) {
                     return std::abs(a.x_forward) < std::abs(b.x_forward);
                   });
  return bev;
}

}  // namespace rownav
