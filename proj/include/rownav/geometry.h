#ifndef ROWNAV_GEOMETRY_H_
#define ROWNAV_GEOMETRY_H_

// Frames used throughout the library:
//   world   east-north-up (ENU), meters
//   robot   x forward, y left, z up
//   camera  body frame x along the optical axis, y left, z up; the optical
//           frame (x right, y down, z forward) is derived from it internally
//   image   u to the right, v downward, pixel centers at integer coordinates
//
// Orientations are Z-Y-X Euler angles (heading, pitch, roll). Pitch is a
// rotation about the body y (left) axis, so a positive pitch tilts the nose
// (or optical axis) down.

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string_view>

#include "rownav/paths.h"

namespace rownav {

inline constexpr double kPi = 3.14159265358979323846;
// Points at or closer than this to the camera plane are not projected.
inline constexpr double kMinProjectionDepth = 1e-3;

constexpr double DegToRad(double deg) { return deg * kPi / 180.0; }
constexpr double RadToDeg(double rad) { return rad * 180.0 / kPi; }

// Wraps to (-pi, pi].
double NormalizeAngle(double angle);

struct WorldPoint {
  double east = 0.0;
  double north = 0.0;
  double up = 0.0;
};

struct WorldPose {
  WorldPoint position;
  double heading = 0.0;  // CCW from east
  double pitch = 0.0;
  double roll = 0.0;
};

std::string_view CameraName(CameraId id);

// Rigid transform from the robot frame to a camera body frame.
struct CameraMount {
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();  // robot frame, meters
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

struct CameraModel {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  CameraMount mount;
  CameraId id = CameraId::kFront;

  // Throws ConfigError when the intrinsics are out of range.
  void Validate() const;
  Eigen::Matrix3d Intrinsics() const;
  double HorizontalFov() const;
};

// 640x480, fx = fy = 600, mounted 1 m above ground and pitched down 10 deg.
// Front and back cameras sit on the robot axis, side cameras at its center.
CameraModel DefaultCamera(CameraId id);

Eigen::Matrix3d RotationMatrix(double heading, double pitch, double roll);
Eigen::Matrix3d RotationMatrix(const WorldPose& pose);
// Inverse of RotationMatrix; assumes |pitch| < pi/2.
WorldPose PoseFromRotation(const Eigen::Vector3d& position,
                           const Eigen::Matrix3d& rotation);

Eigen::Vector3d ToVector(const WorldPoint& p);
WorldPoint ToWorldPoint(const Eigen::Vector3d& v);

// World pose of a camera carried by a robot at `robot`.
WorldPose ComposeCameraPose(const WorldPose& robot, const CameraMount& mount);
// Camera pose expressed in the robot frame (east = x forward, north = y left).
WorldPose MountPose(const CameraMount& mount);

// P [R|t]: maps homogeneous world points to homogeneous pixels.
Eigen::Matrix<double, 3, 4> ProjectionMatrix(const CameraModel& cam,
                                             const WorldPose& camera_pose);

// Point in the camera optical frame (z is depth).
Eigen::Vector3d ToOpticalFrame(const WorldPose& camera_pose,
                               const WorldPoint& p);

// Pinhole projection with depth check only; the result may be off-image.
std::optional<ImagePoint> ProjectToImagePlane(const CameraModel& cam,
                                              const WorldPose& camera_pose,
                                              const WorldPoint& p);

// Pinhole projection; nullopt when the point is at or behind the camera
// plane or outside the image bounds.
std::optional<ImagePoint> ProjectPoint(const CameraModel& cam,
                                       const WorldPose& camera_pose,
                                       const WorldPoint& p);

bool InImage(const CameraModel& cam, const ImagePoint& px);

// Plane-induced homography between the image and the robot-local ground
// plane (z = 0 of the robot frame). Built analytically from intrinsics and
// the camera pose relative to the robot.
class GroundHomography {
 public:
  // Throws DegenerateViewError when the homography is singular or its
  // condition number exceeds `max_condition`.
  GroundHomography(const CameraModel& cam, const WorldPose& camera_in_robot,
                   double max_condition = 1e12);

  const Eigen::Matrix3d& ground_to_image() const { return ground_to_image_; }
  const Eigen::Matrix3d& image_to_ground() const { return image_to_ground_; }

  // nullopt when the ground point is at or behind the camera plane.
  std::optional<ImagePoint> ToImage(const GroundPoint& g) const;
  // nullopt when the pixel ray does not hit the ground in front of the camera
  // (horizon and above) or the hit lies farther than `max_range` from the
  // robot origin.
  std::optional<GroundPoint> ToGround(const ImagePoint& px,
                                      double max_range) const;

 private:
  Eigen::Matrix3d ground_to_image_;
  Eigen::Matrix3d image_to_ground_;
  Eigen::Matrix3d robot_to_optical_;
  Eigen::Vector3d camera_position_;
};

// Converts an extracted image path to robot-local ground points ordered by
// increasing |x_forward|. Points beyond `max_range` (or above the horizon)
// are dropped; throws EmptyPathError when none survive.
BevPath ImagePathToBev(const ImagePath& path, const GroundHomography& h,
                       double max_range);

}  // namespace rownav

#endif  // ROWNAV_GEOMETRY_H_
