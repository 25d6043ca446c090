#include "rownav/control.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rownav/errors.h"

namespace rownav {
namespace {

constexpr double kMinCos = 0.2;
constexpr double kMinDt = 0.01;
constexpr double kMinSpan = 1.0;
constexpr double kConfidenceScale = 5.0;

}  // namespace

void ControllerGains::Validate() const {
  if (!(kp > 0.0) || !(kd >= 0.0) || !(lookahead_d > 0.0) ||
      !(v_nominal >= 0.0) || !(v_max > 0.0) || !(omega_max > 0.0)) {
    throw ConfigError("controller gains out of range");
  }
}

double LineFit::YAt(double x_forward) const {
  return centroid.y() + (x_forward - centroid.x()) * direction.y() / direction.x();
}

double LineFit::Heading() const { return std::atan2(direction.y(), direction.x()); }

LineFit FitLine(std::span<const GroundPoint> points) {
  if (points.size() < 3) throw DegenerateFitError("fewer than 3 points");
  double min_x = points.front().x_forward;
  double max_x = min_x;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : points) {
    min_x = std::min(min_x, p.x_forward);
    max_x = std::max(max_x, p.x_forward);
    centroid += Eigen::Vector2d(p.x_forward, p.y_left);
  }
  if (max_x - min_x < kMinSpan) {
    throw DegenerateFitError("points span less than 1 m forward");
  }
  centroid /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector2d d = Eigen::Vector2d(p.x_forward, p.y_left) - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov);
  // Eigenvalues are sorted in increasing order.
  Eigen::Vector2d dir = solver.eigenvectors().col(1);
  if (dir.x() < 0.0) dir = -dir;
  if (std::abs(dir.x()) < 1e-9) throw DegenerateFitError("line is lateral");
  LineFit fit;
  fit.centroid = centroid;
  fit.direction = dir.normalized();
  fit.residual_rms = std::sqrt(std::max(solver.eigenvalues()(0), 0.0));
  return fit;
}

ReferenceErrors FitReference(const BevPath& path, double lookahead_d) {
  const LineFit fit = FitLine(path.points);
  ReferenceErrors out;
  out.e_y = fit.YAt(lookahead_d);
  out.e_theta = fit.Heading();
  out.residual_rms = fit.residual_rms;
  return out;
}

VelocityCommand ComputeCommand(double e_y, double e_theta, double e_y_prev,
                               double e_theta_prev, double dt,
                               const ControllerGains& gains) {
  const double cos_th = std::max(std::cos(e_theta), kMinCos);
  const double eps = e_y * std::cos(e_theta);
  const double eps_prev = e_y_prev * std::cos(e_theta_prev);
  const double eps_rate = (eps - eps_prev) / std::max(dt, kMinDt);

  VelocityCommand cmd;
  cmd.v = std::clamp(gains.v_nominal * cos_th, -gains.v_max, gains.v_max);
  const double u = gains.kp * eps + gains.kd * eps_rate;
  double omega = (u + cmd.v * std::sin(e_theta)) / (gains.lookahead_d * cos_th);
  if (std::isnan(omega)) omega = 0.0;
  cmd.omega = std::clamp(omega, -gains.omega_max, gains.omega_max);
  return cmd;
}

ExtendedPath ExtendBackPath(const BevPath& rear, double lookahead_d) {
  const LineFit fit = FitLine(rear.points);
  double nearest = -std::numeric_limits<double>::infinity();
  for (const auto& p : rear.points) nearest = std::max(nearest, p.x_forward);

  ExtendedPath out;
  constexpr int kStations = 5;
  for (int k = 0; k < kStations; ++k) {
    const double x = lookahead_d * (k + 1) / kStations;
    out.path.points.push_back({x, fit.YAt(x)});
  }
  out.extrapolation_m = std::max(0.0, lookahead_d - nearest);
  out.confidence = 1.0 / (1.0 + out.extrapolation_m / kConfidenceScale);
  return out;
}

PathFollower::PathFollower(ControllerGains gains, double hold_timeout)
    : gains_(gains), hold_timeout_(hold_timeout) {
  gains_.Validate();
}

VelocityCommand PathFollower::Update(double time, const ReferenceErrors& errors) {
  // The first update (or the first after a loss) has no usable history.
  const bool fresh = !last_time_ || holding_expired(time);
  const ReferenceErrors prev = fresh ? errors : last_errors_;
  const double dt = fresh ? 1.0 : time - *last_time_;
  last_command_ = ComputeCommand(errors.e_y, errors.e_theta, prev.e_y,
                                 prev.e_theta, dt, gains_);
  last_errors_ = errors;
  last_time_ = time;
  return last_command_;
}

VelocityCommand PathFollower::Lost(double time) {
  if (!last_time_ || holding_expired(time)) return {};
  return last_command_;
}

std::optional<double> PathFollower::TimeSinceValid(double time) const {
  if (!last_time_) return std::nullopt;
  return time - *last_time_;
}

bool PathFollower::holding_expired(double time) const {
  return last_time_ && time - *last_time_ > hold_timeout_ + 1e-9;
}

void PathFollower::Reset() {
  last_time_.reset();
  last_errors_ = {};
  last_command_ = {};
}

}  // namespace rownav
