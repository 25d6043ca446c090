#ifndef ROWNAV_CONTROL_H_
#define ROWNAV_CONTROL_H_

#include <Eigen/Core>
#include <optional>
#include <span>

#include "rownav/paths.h"

namespace rownav {

struct ControllerGains {
  double kp = 1.2;
  double kd = 0.3;
  double lookahead_d = 2.0;  // m
  double v_nominal = 0.8;    // m/s
  double v_max = 1.0;        // m/s
  double omega_max = 1.0;    // rad/s

  // Throws ConfigError unless kp > 0, kd >= 0, lookahead_d > 0 and the
  // limits are positive.
  void Validate() const;
};

struct VelocityCommand {
  double v = 0.0;
  double omega = 0.0;
  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

// Total-least-squares line through ground points.
struct LineFit {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  Eigen::Vector2d direction = Eigen::Vector2d::UnitX();  // unit, x >= 0
  double residual_rms = 0.0;  // m, perpendicular

  // Lateral coordinate of the line at the given forward station.
  double YAt(double x_forward) const;
  // Angle of the line relative to the robot x axis, in (-pi/2, pi/2].
  double Heading() const;
};

// Fits a line to at least 3 points spanning at least 1 m of forward
// distance. Throws DegenerateFitError otherwise.
LineFit FitLine(std::span<const GroundPoint> points);

// Tracking errors of a reference line as seen from the robot.
struct ReferenceErrors {
  double e_y = 0.0;      // m, line offset at the look-ahead station, left +
  double e_theta = 0.0;  // rad, line direction relative to the robot heading
  double residual_rms = 0.0;
  double confidence = 1.0;
};

ReferenceErrors FitReference(const BevPath& path, double lookahead_d);

// Look-ahead point feedback linearization. With
//   eps = e_y * cos(e_theta)   (distance of the line from the point L ahead)
// the look-ahead point obeys d(eps)/dt = v sin(e_theta) - L omega cos(e_theta),
// so choosing
//   omega = (kp eps + kd d(eps)/dt + v sin(e_theta)) / (L cos(e_theta))
// gives linear PD error dynamics. cos(e_theta) is clamped at 0.2 both here
// and in the speed scaling v = v_nominal * max(cos(e_theta), 0.2). The
// derivative is a backward difference with dt clamped to at least 10 ms.
VelocityCommand ComputeCommand(double e_y, double e_theta, double e_y_prev,
                               double e_theta_prev, double dt,
                               const ControllerGains& gains);

struct ExtendedPath {
  BevPath path;              // forward reference in the robot frame
  double extrapolation_m = 0.0;
  double confidence = 1.0;   // 1 / (1 + extrapolation_m / 5 m)
};

// Extrapolates the line fitted to a rear-camera path (robot frame, negative
// x_forward) through the robot to forward stations up to the look-ahead
// distance. The extrapolation distance is measured from the nearest rear
// point to the look-ahead station.
ExtendedPath ExtendBackPath(const BevPath& rear, double lookahead_d);

// Stateful wrapper tracking previous errors and handling loss of detection.
class PathFollower {
 public:
  explicit PathFollower(ControllerGains gains = {}, double hold_timeout = 0.5);

  VelocityCommand Update(double time, const ReferenceErrors& errors);

  // Detection lost at `time`: repeats the last command for up to
  // hold_timeout seconds after the last valid update, then stops.
  VelocityCommand Lost(double time);
  // Seconds since the last valid update, or nullopt if there was none.
  std::optional<double> TimeSinceValid(double time) const;
  bool holding_expired(double time) const;

  void Reset();
  const ControllerGains& gains() const { return gains_; }

 private:
  ControllerGains gains_;
  double hold_timeout_;
  std::optional<double> last_time_;
  ReferenceErrors last_errors_;
  VelocityCommand last_command_;
};

}  // namespace rownav

#endif  // ROWNAV_CONTROL_H_
