#pragma once

#include <doctest.h>

#include <cmath>
#include <vector>

#include "rfc/errors.hpp"
#include "rfc/geometry.hpp"
#include "rfc/random.hpp"

namespace th {

inline rfc::Point3 random_point(rfc::Rng& rng, double lo = -1.0, double hi = 1.0) {
  return {rfc::uniform(rng, lo, hi), rfc::uniform(rng, lo, hi), rfc::uniform(rng, lo, hi)};
}

inline std::vector<rfc::Point3> random_points(rfc::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<rfc::Point3> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(random_point(rng, lo, hi));
  return v;
}

inline rfc::Pose random_pose(rfc::Rng& rng) {
  return rfc::Pose::from_axis_angle(random_point(rng, -3.0, 3.0), random_point(rng, -5.0, 5.0));
}

inline double max_dist(const std::vector<rfc::Point3>& a, const std::vector<rfc::Point3>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

template <class F>
rfc::Errc code_of(F&& f) {
  try {
    f();
  } catch (const rfc::Error& e) {
    return e.code();
  }
  FAIL("expected rfc::Error");
  return rfc::Errc::InvalidArgument;
}

}  // namespace th
