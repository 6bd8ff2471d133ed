#include "rfc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rfc/errors.hpp"

namespace rfc {

Pose::Pose(Point3 translation, Eigen::Quaterniond rotation)
    : translation_(std::move(translation)), rotation_(rotation) {
  const double n = rotation_.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(Errc::InvalidArgument, "zero or non-finite quaternion");
  // Inputs read from text lose a few digits; renormalize drift, reject garbage.
  if (std::abs(n - 1.0) > 1e-6) throw Error(Errc::InvalidArgument, "quaternion is not unit length");
  rotation_.normalize();
  if (!translation_.allFinite()) throw Error(Errc::InvalidArgument, "non-finite translation");
}

Pose Pose::from_yaw(double yaw, const Point3& t) {
  return {t, Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Point3::UnitZ()))};
}

Pose Pose::from_axis_angle(const Point3& axis_angle, const Point3& t) {
  const double angle = axis_angle.norm();
  if (angle == 0.0) return from_translation(t);
  return {t, Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis_angle / angle))};
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation_ = rotation_.conjugate();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.rotation_ = (rotation_ * rhs.rotation_).normalized();
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  return out;
}

bool Pose::is_valid(double tol) const {
  if (!translation_.allFinite()) return false;
  if (std::abs(rotation_.norm() - 1.0) > tol) return false;
  const Eigen::Matrix3d r = rotation_matrix();
  const double orth = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

void PointCloud::push_back(const Point3& p, double power_db) {
  if (!powers) {
    if (!points.empty()) throw Error(Errc::InvalidArgument, "cloud has no power channel");
    powers.emplace();
  }
  points.push_back(p);
  powers->push_back(power_db);
}

void PointCloud::append(const PointCloud& other) {
  if (other.empty()) return;
  if (empty() && !powers && other.powers) powers.emplace();
  if (has_power() != other.has_power())
    throw Error(Errc::InvalidArgument, "cannot append clouds with and without power");
  points.insert(points.end(), other.points.begin(), other.points.end());
  if (powers) powers->insert(powers->end(), other.powers->begin(), other.powers->end());
}

void PointCloud::validate() const {
  if (powers && powers->size() != points.size())
    throw Error(Errc::InvalidArgument, "power list length " + std::to_string(powers->size()) +
                                           " != point count " + std::to_string(points.size()));
  for (const auto& p : points)
    if (!p.allFinite()) throw Error(Errc::InvalidArgument, "non-finite point coordinate");
}

Point3 spherical_to_cartesian(const Spherical& s) {
  const double st = std::sin(s.elevation);
  return {s.range * st * std::cos(s.azimuth), s.range * st * std::sin(s.azimuth),
          s.range * std::cos(s.elevation)};
}

Spherical cartesian_to_spherical(const Point3& p) {
  Spherical s;
  s.range = p.norm();
  if (s.range == 0.0) return s;
  s.elevation = std::acos(std::clamp(p.z() / s.range, -1.0, 1.0));
  s.azimuth = std::atan2(p.y(), p.x());
  if (s.azimuth == -std::numbers::pi) s.azimuth = std::numbers::pi;
  return s;
}

double azimuth_from_cone(double psi, double theta) {
  const double st = std::sin(theta);
  if (st <= 1e-6) throw Error(Errc::DegenerateElevation, "sin(theta) too small");
  const double c = std::cos(psi) / st;
  if (std::abs(c) > 1.0 + 1e-9)
    throw Error(Errc::DomainError, "inconsistent cone/elevation pair, |cos(psi)/sin(theta)| = " +
                                       std::to_string(std::abs(c)));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double cone_angle_from_direction(const Point3& p) {
  const double n = p.norm();
  if (n == 0.0) throw Error(Errc::InvalidArgument, "zero direction");
  return std::acos(std::clamp(p.x() / n, -1.0, 1.0));
}

double cone_angle_from_broadside(double alpha, double theta) {
  const double st = std::sin(theta);
  const double sa = std::sin(alpha);
  const double c2 = st * st - sa * sa;
  if (c2 < -1e-9) throw Error(Errc::DomainError, "steering angle exceeds the elevation cone");
  return std::acos(std::sqrt(std::max(0.0, c2)));
}

PointCloud transform_cloud(const PointCloud& pc, const Pose& pose) {
  PointCloud out;
  out.powers = pc.powers;
  out.points.reserve(pc.size());
  const Eigen::Matrix3d r = pose.rotation_matrix();
  for (const auto& p : pc.points) out.points.push_back(r * p + pose.translation());
  return out;
}

Point3 centroid(const PointCloud& pc) {
  if (pc.empty()) throw Error(Errc::EmptyCloud, "centroid of empty cloud");
  Point3 c = Point3::Zero();
  for (const auto& p : pc.points) c += p;
  return c / static_cast<double>(pc.size());
}

Aabb bounding_box(const std::vector<Point3>& pts) {
  if (pts.empty()) throw Error(Errc::EmptyCloud, "bounding box of empty set");
  Aabb box{pts.front(), pts.front()};
  for (const auto& p : pts) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

Aabb bounding_box(const PointCloud& pc) { return bounding_box(pc.points); }

}  // namespace rfc
