#include "rfc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "rfc/errors.hpp"

namespace rfc::metrics {

namespace {

void require_nonempty(const Points& a, const Points& b) {
  if (a.empty() || b.empty()) throw Error(Errc::EmptyCloud, "distance between empty clouds");
}

void require_same_size(const Points& a, const Points& b) {
  if (a.size() != b.size())
    throw Error(Errc::SizeMismatch, "clouds differ in size: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

std::vector<double> nearest_sq(const Points& from, const Points& to) {
  std::vector<double> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, (from[i] - q).squaredNorm());
    out[i] = best;
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Eigen::MatrixXd cost_matrix(const Points& a, const Points& b) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      c(i, j) = (a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)]).squaredNorm();
  return c;
}

double total_cost(const Eigen::MatrixXd& c, const std::vector<std::size_t>& mapping) {
  double s = 0.0;
  for (std::size_t i = 0; i < mapping.size(); ++i)
    s += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(mapping[i]));
  return s;
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const Points& from, const Points& to) {
  require_nonempty(from, to);
  std::vector<std::size_t> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < to.size(); ++j) {
      const double d = (from[i] - to[j]).squaredNorm();
      if (d < best) {
        best = d;
        out[i] = j;
      }
    }
  }
  return out;
}

double chamfer(const Points& a, const Points& b) {
  require_nonempty(a, b);
  return mean(nearest_sq(a, b)) + mean(nearest_sq(b, a));
}

double chamfer_l1(const Points& a, const Points& b) {
  require_nonempty(a, b);
  auto ab = nearest_sq(a, b), ba = nearest_sq(b, a);
  for (auto& x : ab) x = std::sqrt(x);
  for (auto& x : ba) x = std::sqrt(x);
  return mean(ab) + mean(ba);
}

double chamfer(const PointCloud& a, const PointCloud& b) { return chamfer(a.points, b.points); }
double chamfer_l1(const PointCloud& a, const PointCloud& b) { return chamfer_l1(a.points, b.points); }

Assignment emd_exact_assignment(const Points& a, const Points& b) {
  require_same_size(a, b);
  if (a.size() > kExactEmdLimit)
    throw Error(Errc::TooLarge, "exact EMD limited to " + std::to_string(kExactEmdLimit) + " points");
  Assignment asg;
  const std::size_t n = a.size();
  if (n == 0) return asg;
  const Eigen::MatrixXd c = cost_matrix(a, b);

  // Shortest augmenting path Hungarian method with row/column potentials;
  // index 0 is a sentinel column.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  asg.mapping.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) asg.mapping[p[j] - 1] = j - 1;
  asg.cost = total_cost(c, asg.mapping);
  return asg;
}

double emd_exact(const Points& a, const Points& b) {
  require_same_size(a, b);
  if (a.empty()) throw Error(Errc::EmptyCloud, "distance between empty clouds");
  return emd_exact_assignment(a, b).cost / static_cast<double>(a.size());
}

double emd_exact(const PointCloud& a, const PointCloud& b) { return emd_exact(a.points, b.points); }

Assignment emd_approx_assignment(const Points& a, const Points& b, std::size_t iters) {
  require_same_size(a, b);
  Assignment best;
  const std::size_t n = a.size();
  if (n == 0) return best;
  if (iters == 0) iters = 1;
  const Eigen::MatrixXd c = cost_matrix(a, b);
  const double cmax = c.maxCoeff();
  if (cmax == 0.0) {
    best.mapping.resize(n);
    for (std::size_t i = 0; i < n; ++i) best.mapping[i] = i;
    return best;
  }

  const double eps0 = cmax / 4.0;
  const double eps_floor = cmax * 1e-9 / static_cast<double>(n);
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> owner(n), assigned(n);
  std::vector<std::size_t> queue;
  best.cost = std::numeric_limits<double>::infinity();

  for (std::size_t phase = 0; phase < iters; ++phase) {
    const double eps = std::max(eps0 * std::pow(0.2, static_cast<double>(phase)), eps_floor);
    std::fill(owner.begin(), owner.end(), kNone);
    std::fill(assigned.begin(), assigned.end(), kNone);
    queue.resize(n);
    for (std::size_t i = 0; i < n; ++i) queue[i] = n - 1 - i;
    while (!queue.empty()) {
      const std::size_t i = queue.back();
      queue.pop_back();
      // Benefit is -cost: pick the object with the best value -c - price.
      double v1 = -std::numeric_limits<double>::infinity(), v2 = v1;
      std::size_t j1 = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double val = -c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - price[j];
        if (val > v1) {
          v2 = v1;
          v1 = val;
          j1 = j;
        } else if (val > v2) {
          v2 = val;
        }
      }
      const double increment = n > 1 ? v1 - v2 + eps : eps;
      price[j1] += increment;
      if (owner[j1] != kNone) {
        assigned[owner[j1]] = kNone;
        queue.push_back(owner[j1]);
      }
      owner[j1] = i;
      assigned[i] = j1;
    }
    const double cost = total_cost(c, assigned);
    if (cost < best.cost) {
      best.cost = cost;
      best.mapping = assigned;
    }
  }
  return best;
}

double emd_approx(const Points& a, const Points& b, std::size_t iters) {
  require_same_size(a, b);
  if (a.empty()) throw Error(Errc::EmptyCloud, "distance between empty clouds");
  return emd_approx_assignment(a, b, iters).cost / static_cast<double>(a.size());
}

double emd_approx(const PointCloud& a, const PointCloud& b, std::size_t iters) {
  return emd_approx(a.points, b.points, iters);
}

double mean_pair_distance(const Points& a, const Points& b, const Assignment& asg) {
  if (asg.mapping.size() != a.size() || a.size() != b.size()) throw Error(Errc::SizeMismatch, "assignment size mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[asg.mapping[i]]).norm();
  return s / static_cast<double>(a.size());
}

}  // namespace rfc::metrics
