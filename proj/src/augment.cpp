#include "rfc/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rfc/errors.hpp"
#include "rfc/random.hpp"

namespace rfc::augment {

std::size_t DepthMap::valid() const {
  return static_cast<std::size_t>(std::count_if(depth.begin(), depth.end(), [](double d) { return !std::isnan(d); }));
}

Pose look_at(const Point3& eye, const Point3& target) {
  const Point3 fwd = target - eye;
  if (fwd.norm() == 0.0) throw Error(Errc::InvalidArgument, "look_at target coincides with eye");
  const Point3 x = fwd.normalized();
  Point3 up = Point3::UnitZ();
  if (std::abs(x.dot(up)) > 1.0 - 1e-9) up = Point3::UnitY();
  const Point3 z = (up - up.dot(x) * x).normalized();
  const Point3 y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {eye, Eigen::Quaterniond(r)};
}

DepthMap render_depth(const Mesh& mesh, const Pose& viewpoint, const RenderOptions& opts) {
  mesh.validate();
  if (mesh.triangles.empty()) throw Error(Errc::DegenerateMesh, "mesh has no triangles");
  if (opts.width == 0 || opts.height == 0) throw Error(Errc::InvalidArgument, "empty depth grid");
  const Aabb box = bounding_box(mesh.vertices);
  const Point3& eye = viewpoint.translation();
  if ((eye.array() >= box.min.array()).all() && (eye.array() <= box.max.array()).all())
    throw Error(Errc::InvalidArgument, "viewpoint lies inside the mesh bounds");

  const Pose to_cam = viewpoint.inverse();
  std::vector<Point3> cv;
  cv.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) cv.push_back(to_cam.apply(v));

  double half_u = 0.0, half_v = 0.0;
  for (const auto& p : cv) {
    if (p.x() <= 1e-9) continue;
    half_u = std::max(half_u, std::abs(p.y() / p.x()));
    half_v = std::max(half_v, std::abs(p.z() / p.x()));
  }
  if (half_u == 0.0 && half_v == 0.0) throw Error(Errc::NoVisibleSurface, "mesh is behind the viewpoint");
  const double w = static_cast<double>(opts.width), h = static_cast<double>(opts.height);
  const double su = std::max(half_u, half_v * w / h) * opts.fov_margin;
  const double sv = su * h / w;

  struct Tri {
    Point3 a, e1, e2;
  };
  std::vector<Tri> tris;
  tris.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) tris.push_back({cv[t[0]], cv[t[1]] - cv[t[0]], cv[t[2]] - cv[t[0]]});

  DepthMap dm;
  dm.width = opts.width;
  dm.height = opts.height;
  dm.depth.assign(opts.width * opts.height, std::numeric_limits<double>::quiet_NaN());
  dm.hits.assign(opts.width * opts.height, Point3::Zero());
  for (std::size_t j = 0; j < opts.height; ++j) {
    const double v = sv * (1.0 - 2.0 * (static_cast<double>(j) + 0.5) / h);
    for (std::size_t i = 0; i < opts.width; ++i) {
      const double u = su * (1.0 - 2.0 * (static_cast<double>(i) + 0.5) / w);
      const Point3 dir(1.0, u, v);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& tri : tris) {
        // Moller-Trumbore; t is the axial depth since dir.x() == 1.
        const Point3 p = dir.cross(tri.e2);
        const double det = tri.e1.dot(p);
        if (std::abs(det) < 1e-14) continue;
        const double inv = 1.0 / det;
        const Point3 s = -tri.a;
        const double bu = s.dot(p) * inv;
        if (bu < 0.0 || bu > 1.0) continue;
        const Point3 q = s.cross(tri.e1);
        const double bv = dir.dot(q) * inv;
        if (bv < 0.0 || bu + bv > 1.0) continue;
        const double t = tri.e2.dot(q) * inv;
        if (t > 1e-9 && t < best) best = t;
      }
      if (std::isfinite(best)) {
        const std::size_t k = j * opts.width + i;
        dm.depth[k] = best;
        dm.hits[k] = viewpoint.apply(best * dir);
      }
    }
  }
  return dm;
}

PointCloud render_partial(const Mesh& mesh, const Pose& viewpoint, std::size_t n, std::uint64_t seed,
                          const RenderOptions& opts) {
  const DepthMap dm = render_depth(mesh, viewpoint, opts);
  PointCloud pc;
  for (std::size_t k = 0; k < dm.depth.size(); ++k)
    if (!std::isnan(dm.depth[k])) pc.push_back(dm.hits[k]);
  if (pc.empty()) throw Error(Errc::NoVisibleSurface, "no surface visible from the viewpoint");
  if (pc.size() <= n) return pc;
  return resample(pc, n, seed);
}

PointCloud jitter_noise(const PointCloud& pc, std::size_t points_per_source, double max_radius, std::uint64_t seed) {
  if (max_radius < 0.0) throw Error(Errc::InvalidArgument, "max_radius must be >= 0");
  Rng rng(seed);
  PointCloud out;
  if (pc.powers) out.powers.emplace();
  out.points.reserve(pc.size() * points_per_source);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const double r = max_radius > 0.0 ? uniform(rng, 0.0, max_radius) : 0.0;
    for (std::size_t k = 0; k < points_per_source; ++k) {
      Point3 d(gaussian(rng, 1.0), gaussian(rng, 1.0), gaussian(rng, 1.0));
      const double n = d.norm();
      d = n > 0.0 ? Point3(d / n) : Point3::UnitX();
      out.points.push_back(pc.points[i] + r * d);
      if (pc.powers) out.powers->push_back((*pc.powers)[i]);
    }
  }
  return out;
}

PointCloud specularity_crop(const PointCloud& pc, std::size_t n_spheres, double radius_min, double radius_max,
                            std::uint64_t seed) {
  if (n_spheres < 1) throw Error(Errc::InvalidArgument, "n_spheres must be >= 1");
  if (radius_min < 0.0 || radius_max < radius_min) throw Error(Errc::InvalidArgument, "bad crop radius range");
  if (pc.empty()) throw Error(Errc::EmptyCloud, "cannot crop an empty cloud");
  Rng rng(seed);
  const Point3 c = centroid(pc);
  const double reach = 0.1 * bounding_box(pc).diagonal();

  std::vector<std::pair<Point3, double>> balls;
  Point3 offset;
  do {
    offset = Point3(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
  } while (offset.squaredNorm() > 1.0);
  balls.emplace_back(c + reach * offset, uniform(rng, radius_min, radius_max));
  std::uniform_int_distribution<std::size_t> pick(0, pc.size() - 1);
  for (std::size_t k = 1; k < n_spheres; ++k) {
    const Point3 center = pc.points[pick(rng)];
    balls.emplace_back(center, uniform(rng, radius_min, radius_max));
  }

  PointCloud out;
  if (pc.powers) out.powers.emplace();
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& p = pc.points[i];
    const bool inside = std::any_of(balls.begin(), balls.end(),
                                    [&](const auto& b) { return (p - b.first).norm() < b.second; });
    if (inside) continue;
    out.points.push_back(p);
    if (pc.powers) out.powers->push_back((*pc.powers)[i]);
  }
  if (out.empty()) throw Error(Errc::AllPointsRemoved, "crop removed every point");
  return out;
}

PointCloud resample(const PointCloud& pc, std::size_t n, std::uint64_t seed) {
  if (pc.empty()) throw Error(Errc::EmptyCloud, "cannot resample an empty cloud");
  Rng rng(seed);
  std::vector<std::size_t> idx(pc.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> chosen;
  if (n <= pc.size()) {
    std::shuffle(idx.begin(), idx.end(), rng);
    chosen.assign(idx.begin(), idx.begin() + static_cast<long>(n));
  } else {
    chosen = idx;
    std::uniform_int_distribution<std::size_t> pick(0, pc.size() - 1);
    while (chosen.size() < n) chosen.push_back(pick(rng));
  }
  PointCloud out;
  if (pc.powers) out.powers.emplace();
  for (auto i : chosen) {
    out.points.push_back(pc.points[i]);
    if (pc.powers) out.powers->push_back((*pc.powers)[i]);
  }
  return out;
}

std::string to_string(NormalizationMode m) { return m == NormalizationMode::WithBBox ? "with_bbox" : "no_bbox"; }

NormalizationMode parse_normalization_mode(const std::string& s) {
  if (s == "with_bbox" || s == "WithBBox" || s == "bbox") return NormalizationMode::WithBBox;
  if (s == "no_bbox" || s == "NoBBox") return NormalizationMode::NoBBox;
  throw Error(Errc::ParseError, "unknown normalization mode '" + s + "'");
}

PointCloud apply_normalization(const PointCloud& pc, const Normalization& n) {
  PointCloud out = pc;
  for (auto& p : out.points) p = n.apply(p);
  return out;
}

PointCloud invert_normalization(const PointCloud& pc, const Normalization& n) {
  PointCloud out = pc;
  for (auto& p : out.points) p = n.invert(p);
  return out;
}

TrainingSample normalize(TrainingSample sample, NormalizationMode mode) {
  if (sample.normalized) sample = denormalize(std::move(sample));
  if (sample.complete.empty()) throw Error(Errc::EmptyCloud, "complete cloud is empty");
  sample.bbox = bounding_box(sample.complete);
  Normalization n;
  if (mode == NormalizationMode::WithBBox) {
    n.center = sample.bbox.center();
    double r = 0.0;
    for (const auto& p : sample.complete.points) r = std::max(r, (p - n.center).norm());
    n.scale = r > 0.0 ? 1.0 / r : 1.0;
  } else {
    n.center = centroid(sample.complete);
  }
  sample.partial = apply_normalization(sample.partial, n);
  sample.complete = apply_normalization(sample.complete, n);
  sample.transform = n;
  sample.mode = mode;
  sample.normalized = true;
  return sample;
}

TrainingSample denormalize(TrainingSample sample) {
  if (!sample.normalized) return sample;
  sample.partial = invert_normalization(sample.partial, sample.transform);
  sample.complete = invert_normalization(sample.complete, sample.transform);
  sample.transform = {};
  sample.normalized = false;
  return sample;
}

}  // namespace rfc::augment
