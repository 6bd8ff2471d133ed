#pragma once

#include <cstddef>
#include <vector>

#include "rfc/geometry.hpp"

namespace rfc::metrics {

using Points = std::vector<Point3>;

/// Index of the closest point of `to` for every point of `from` (ties: lowest index).
std::vector<std::size_t> nearest_neighbors(const Points& from, const Points& to);

/// Mean closest-point squared distance in both directions, summed.
double chamfer(const Points& a, const Points& b);
double chamfer(const PointCloud& a, const PointCloud& b);
/// Same with Euclidean (non-squared) distances.
double chamfer_l1(const Points& a, const Points& b);
double chamfer_l1(const PointCloud& a, const PointCloud& b);

/// Bijection from A indices to B indices; `cost` is the squared-distance total.
struct Assignment {
  std::vector<std::size_t> mapping;
  double cost = 0.0;
};

inline constexpr std::size_t kExactEmdLimit = 256;

/// Optimal assignment by the Hungarian method on squared distances.
Assignment emd_exact_assignment(const Points& a, const Points& b);
/// Mean squared distance under the optimal bijection.
double emd_exact(const Points& a, const Points& b);
double emd_exact(const PointCloud& a, const PointCloud& b);

/// Epsilon-scaled auction. `iters` is the number of scaling phases; the
/// schedule does not depend on `iters`, and the best assignment seen so far
/// is returned, so more phases never give a higher cost.
Assignment emd_approx_assignment(const Points& a, const Points& b, std::size_t iters = 10);
double emd_approx(const Points& a, const Points& b, std::size_t iters = 10);
double emd_approx(const PointCloud& a, const PointCloud& b, std::size_t iters = 10);

/// Mean Euclidean distance of the pairs in an assignment.
double mean_pair_distance(const Points& a, const Points& b, const Assignment& asg);

}  // namespace rfc::metrics
