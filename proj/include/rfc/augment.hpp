#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rfc/geometry.hpp"
#include "rfc/mesh.hpp"

namespace rfc::augment {

inline constexpr std::size_t kCompletePoints = 16384;

struct RenderOptions {
  std::size_t width = 160;
  std::size_t height = 120;
  /// Margin applied to the field of view fitted around the bounding sphere.
  double fov_margin = 1.05;
};

/// Axial depth (along the camera's +x) per pixel; NaN where no surface is hit.
struct DepthMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> depth;
  std::vector<Point3> hits;
  std::size_t valid() const;
};

/// Camera pose at `eye` whose +x axis points at `target`, with +z kept as
/// close to world up as possible.
Pose look_at(const Point3& eye, const Point3& target);

/// Ray casts the mesh from `viewpoint` (looking along its +x axis) on a grid
/// whose field of view just covers the mesh's bounding sphere.
DepthMap render_depth(const Mesh& mesh, const Pose& viewpoint, const RenderOptions& opts = {});

/// Back-projected depth map, randomly reduced to at most `n` points.
PointCloud render_partial(const Mesh& mesh, const Pose& viewpoint, std::size_t n, std::uint64_t seed,
                          const RenderOptions& opts = {});

/// Replaces every point with `points_per_source` points on a sphere around it
/// whose radius is drawn once per source from Uniform(0, max_radius).
PointCloud jitter_noise(const PointCloud& pc, std::size_t points_per_source, double max_radius, std::uint64_t seed);

/// Removes points inside `n_spheres` balls. The first ball is centred within
/// 10% of the bounding-box diagonal of the centroid; the rest on random points.
PointCloud specularity_crop(const PointCloud& pc, std::size_t n_spheres, double radius_min, double radius_max,
                            std::uint64_t seed);

/// Randomly draws `n` points: without replacement when the cloud is large
/// enough, otherwise all points plus random repeats.
PointCloud resample(const PointCloud& pc, std::size_t n, std::uint64_t seed);

enum class NormalizationMode { WithBBox, NoBBox };
std::string to_string(NormalizationMode m);
NormalizationMode parse_normalization_mode(const std::string& s);

/// p_normalized = (p - center) * scale.
struct Normalization {
  Point3 center = Point3::Zero();
  double scale = 1.0;

  Point3 apply(const Point3& p) const { return (p - center) * scale; }
  Point3 invert(const Point3& p) const { return p / scale + center; }
};

struct TrainingSample {
  PointCloud partial;
  PointCloud complete;
  std::string class_label;
  /// Extents of the complete cloud before normalization.
  Aabb bbox;
  NormalizationMode mode = NormalizationMode::WithBBox;
  Normalization transform;
  bool normalized = false;
};

TrainingSample normalize(TrainingSample sample, NormalizationMode mode);
TrainingSample denormalize(TrainingSample sample);
PointCloud apply_normalization(const PointCloud& pc, const Normalization& n);
PointCloud invert_normalization(const PointCloud& pc, const Normalization& n);

struct JitterConfig {
  std::size_t points_per_source = 3;
  double max_radius = 0.05;
};

struct CropConfig {
  std::size_t n_spheres = 4;
  double radius_min = 0.10;
  double radius_max = 0.40;
};

}  // namespace rfc::augment
