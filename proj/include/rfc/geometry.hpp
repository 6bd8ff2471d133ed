#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <optional>
#include <vector>

namespace rfc {

// Frame convention used everywhere: right-handed, x forward (boresight),
// y left, z up. Elevation is measured from +z, so the horizon is pi/2.

using Point3 = Eigen::Vector3d;

struct Spherical {
  double range = 0.0;      // meters, >= 0
  double azimuth = 0.0;    // radians in (-pi, pi], 0 on boresight, positive to the left
  double elevation = 0.0;  // radians in [0, pi], from +z
};

/// Rigid-body transform p -> R p + t.
class Pose {
 public:
  Pose() = default;
  Pose(Point3 translation, Eigen::Quaterniond rotation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Point3& t) { return {t, Eigen::Quaterniond::Identity()}; }
  /// Rotation about +z by `yaw` radians, then translation.
  static Pose from_yaw(double yaw, const Point3& t = Point3::Zero());
  static Pose from_axis_angle(const Point3& axis_angle, const Point3& t = Point3::Zero());

  const Point3& translation() const { return translation_; }
  const Eigen::Quaterniond& rotation() const { return rotation_; }
  Eigen::Matrix3d rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Pose inverse() const;
  /// Composition: (a * b).apply(p) == a.apply(b.apply(p)).
  Pose operator*(const Pose& rhs) const;

  bool is_valid(double tol = 1e-9) const;

 private:
  Point3 translation_ = Point3::Zero();
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
};

/// Ordered point list with an optional parallel list of powers in dB.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<double>> powers;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_power() const { return powers.has_value(); }

  void push_back(const Point3& p) { points.push_back(p); }
  void push_back(const Point3& p, double power_db);
  void append(const PointCloud& other);

  /// Throws InvalidArgument when powers and points disagree in length or a
  /// coordinate is not finite.
  void validate() const;
};

struct Aabb {
  Point3 min = Point3::Zero();
  Point3 max = Point3::Zero();
  Point3 center() const { return 0.5 * (min + max); }
  Point3 extents() const { return max - min; }
  double diagonal() const { return (max - min).norm(); }
};

Point3 spherical_to_cartesian(const Spherical& s);
Spherical cartesian_to_spherical(const Point3& p);

/// Azimuth magnitude from a cone angle to the boresight axis and an
/// elevation, inverting cos(psi) = sin(theta) cos(phi). Result in [0, pi].
/// Throws DegenerateElevation when sin(theta) <= 1e-6 and DomainError when
/// |cos(psi) / sin(theta)| exceeds 1 + 1e-9.
double azimuth_from_cone(double psi, double theta);

/// Angle between the direction of `p` and the +x axis.
double cone_angle_from_direction(const Point3& p);

/// Cone angle to boresight for a target seen at signed steering angle `alpha`
/// by an array along y (sin(alpha) = y / r) and at elevation `theta`.
/// Throws DomainError when the pair is geometrically inconsistent.
double cone_angle_from_broadside(double alpha, double theta);

PointCloud transform_cloud(const PointCloud& pc, const Pose& pose);

Point3 centroid(const PointCloud& pc);
Aabb bounding_box(const PointCloud& pc);
Aabb bounding_box(const std::vector<Point3>& pts);

}  // namespace rfc
