#include "rfc/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rfc/errors.hpp"
#include "rfc/io.hpp"
#include "rfc/random.hpp"

namespace rfc {

void Mesh::validate() const {
  for (const auto& v : vertices)
    if (!v.allFinite()) throw Error(Errc::InvalidArgument, "non-finite vertex");
  for (const auto& t : triangles)
    for (auto i : t)
      if (i >= vertices.size()) throw Error(Errc::InvalidArgument, "triangle index out of range");
}

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

Point3 Mesh::triangle_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Point3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 0.0 ? Point3(n / len) : Point3::Zero();
}

double Mesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
  return a;
}

Mesh parse_obj(const std::string& text, const std::string& origin) {
  Mesh mesh;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    return Error(Errc::ParseError, origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw fail("vertex needs three coordinates");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        long v = 0;
        auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
        if (ec != std::errc() || p != head.data() + head.size() || v == 0) throw fail("bad face index '" + tok + "'");
        const long n = static_cast<long>(mesh.vertices.size());
        const long resolved = v > 0 ? v - 1 : n + v;
        if (resolved < 0 || resolved >= n) throw fail("face index out of range '" + tok + "'");
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (idx.size() < 3) throw fail("face needs at least three vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return mesh;
}

std::string class_from_path(const std::filesystem::path& path) {
  static const std::vector<std::string> known = {"car", "bike", "human"};
  const std::string parent = path.parent_path().filename().string();
  if (std::find(known.begin(), known.end(), parent) != known.end()) return parent;
  const std::string stem = path.stem().string();
  return stem.substr(0, stem.find_first_of("_-"));
}

Mesh load_obj(const std::filesystem::path& path) {
  Mesh m = parse_obj(io::read_file(path), path.string());
  m.class_label = class_from_path(path);
  return m;
}

Mesh transform_mesh(const Mesh& mesh, const Pose& pose) {
  Mesh out = mesh;
  for (auto& v : out.vertices) v = pose.apply(v);
  return out;
}

Mesh ellipsoid_mesh(const Point3& center, const Point3& radii, std::size_t stacks, std::size_t slices) {
  if (stacks < 2 || slices < 3) throw Error(Errc::InvalidArgument, "ellipsoid needs >= 2 stacks and >= 3 slices");
  Mesh m;
  const double pi = std::numbers::pi;
  m.vertices.push_back(center + Point3(0, 0, radii.z()));
  for (std::size_t i = 1; i < stacks; ++i) {
    const double th = pi * static_cast<double>(i) / static_cast<double>(stacks);
    for (std::size_t j = 0; j < slices; ++j) {
      const double ph = 2.0 * pi * static_cast<double>(j) / static_cast<double>(slices);
      m.vertices.push_back(center + Point3(radii.x() * std::sin(th) * std::cos(ph), radii.y() * std::sin(th) * std::sin(ph),
                                           radii.z() * std::cos(th)));
    }
  }
  m.vertices.push_back(center - Point3(0, 0, radii.z()));
  const auto ring = [&](std::size_t i, std::size_t j) {
    return static_cast<std::uint32_t>(1 + (i - 1) * slices + j % slices);
  };
  const auto bottom = static_cast<std::uint32_t>(m.vertices.size() - 1);
  for (std::size_t j = 0; j < slices; ++j) {
    m.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
    m.triangles.push_back({bottom, ring(stacks - 1, j + 1), ring(stacks - 1, j)});
  }
  for (std::size_t i = 1; i + 1 < stacks; ++i)
    for (std::size_t j = 0; j < slices; ++j) {
      m.triangles.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      m.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    auto& tri = m.triangles[t];
    const Point3 c = (m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]) / 3.0;
    if (m.triangle_normal(t).dot(c - center) < 0.0) std::swap(tri[1], tri[2]);
  }
  return m;
}

Mesh box_mesh(const Point3& center, const Point3& half_extents) {
  if (!(half_extents.array() > 0.0).all()) throw Error(Errc::InvalidArgument, "box half extents must be positive");
  Mesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back(center + Point3((i & 1) ? half_extents.x() : -half_extents.x(),
                                         (i & 2) ? half_extents.y() : -half_extents.y(),
                                         (i & 4) ? half_extents.z() : -half_extents.z()));
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

namespace {

struct AreaTable {
  std::vector<double> cumulative;
  double total = 0.0;
};

AreaTable area_table(const Mesh& mesh) {
  mesh.validate();
  AreaTable t;
  t.cumulative.reserve(mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    t.total += mesh.triangle_area(i);
    t.cumulative.push_back(t.total);
  }
  if (!(t.total > 0.0) || !std::isfinite(t.total)) throw Error(Errc::DegenerateMesh, "mesh has no surface area");
  return t;
}

std::pair<std::size_t, Point3> draw(const Mesh& mesh, const AreaTable& table, Rng& rng) {
  const double pick = uniform(rng, 0.0, table.total);
  auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), pick);
  const auto t = std::min<std::size_t>(static_cast<std::size_t>(it - table.cumulative.begin()), mesh.triangles.size() - 1);
  double u = uniform(rng, 0.0, 1.0), v = uniform(rng, 0.0, 1.0);
  if (u + v > 1.0) {
    u = 1.0 - u;
    v = 1.0 - v;
  }
  const auto& tri = mesh.triangles[t];
  const Point3& a = mesh.vertices[tri[0]];
  return {t, a + u * (mesh.vertices[tri[1]] - a) + v * (mesh.vertices[tri[2]] - a)};
}

}  // namespace

PointCloud sample_surface_uniform(const Mesh& mesh, std::size_t n, std::uint64_t seed) {
  PointCloud out;
  if (n == 0) return out;
  const auto table = area_table(mesh);
  Rng rng(seed);
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(mesh, table, rng).second);
  return out;
}

std::vector<SurfaceSample> sample_surface_with_normals(const Mesh& mesh, std::size_t n, std::uint64_t seed) {
  std::vector<SurfaceSample> out;
  if (n == 0) return out;
  const auto table = area_table(mesh);
  Rng rng(seed);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [t, p] = draw(mesh, table, rng);
    out.push_back({p, mesh.triangle_normal(t)});
  }
  return out;
}

}  // namespace rfc
