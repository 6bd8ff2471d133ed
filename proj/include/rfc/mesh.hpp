#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rfc/geometry.hpp"

namespace rfc {

struct Mesh {
  std::vector<Point3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::string class_label;

  void validate() const;
  double triangle_area(std::size_t t) const;
  /// Unit normal from counter-clockwise winding; zero for degenerate triangles.
  Point3 triangle_normal(std::size_t t) const;
  double total_area() const;
};

/// ASCII OBJ, `v` and `f` records only. Polygons are fan-triangulated; face
/// tokens may carry `/vt/vn` suffixes and negative (relative) indices.
Mesh parse_obj(const std::string& text, const std::string& origin = "<obj>");
/// Loads an OBJ and labels it with `class_from_path`.
Mesh load_obj(const std::filesystem::path& path);

/// Class label from the parent directory name when it is a known class,
/// otherwise from the file name prefix before the first '_' or '-'.
std::string class_from_path(const std::filesystem::path& path);

Mesh transform_mesh(const Mesh& mesh, const Pose& pose);

/// Closed latitude/longitude ellipsoid with outward winding.
Mesh ellipsoid_mesh(const Point3& center, const Point3& radii, std::size_t stacks = 16, std::size_t slices = 32);

/// Axis-aligned box with outward winding, two triangles per face.
Mesh box_mesh(const Point3& center, const Point3& half_extents);

/// Area-weighted uniform surface samples.
PointCloud sample_surface_uniform(const Mesh& mesh, std::size_t n, std::uint64_t seed);

struct SurfaceSample {
  Point3 position;
  Point3 normal;
};
std::vector<SurfaceSample> sample_surface_with_normals(const Mesh& mesh, std::size_t n, std::uint64_t seed);

}  // namespace rfc
