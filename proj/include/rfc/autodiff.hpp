#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rfc/geometry.hpp"

namespace rfc::ad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node;
using Var = std::shared_ptr<Node>;

/// One value in the recorded graph. `grad` is allocated lazily during backward.
struct Node {
  Mat value;
  Mat grad;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;
  const char* op = "leaf";

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  double scalar() const { return value(0, 0); }
  void accumulate(const Mat& g);
};

Var param(Mat value);
Var constant(Mat value);

Var matmul(const Var& a, const Var& b);
/// x * w + b with b broadcast over rows.
Var linear(const Var& x, const Var& w, const Var& b);
Var relu(const Var& x);
Var add(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// Column-wise max over rows (1 x cols); ties go to the lowest row.
Var max_rows(const Var& x);
Var concat_cols(const Var& a, const Var& b);
/// Repeats a 1 x c row n times.
Var broadcast_rows(const Var& row, Eigen::Index n);
/// Rows of x at `idx`; the gradient is scattered back, the indices get none.
Var gather_rows(const Var& x, std::vector<std::size_t> idx);
/// Each row repeated k times consecutively: out[i*k + j] = x[i].
Var repeat_rows(const Var& x, Eigen::Index k);
/// out[i*k + j] = a[i] + b[j] for a (n x c) and b (k x c).
Var outer_add_rows(const Var& a, const Var& b);
/// Row-major reshape.
Var reshape(const Var& x, Eigen::Index rows, Eigen::Index cols);

/// Softmax cross-entropy of a 1 x C logit row against `label`.
Var softmax_cross_entropy(const Var& logits, std::size_t label);
/// Squared-distance Chamfer loss between an n x 3 prediction and fixed targets.
Var chamfer_loss(const Var& pred, const std::vector<Point3>& target);
/// Mean squared distance under a fixed bijection pred[i] -> target[mapping[i]].
Var assignment_loss(const Var& pred, const std::vector<Point3>& target, const std::vector<std::size_t>& mapping);

/// Reverse pass from a 1 x 1 output. Gradients accumulate into every node
/// that requires them. Throws GraphCycle if the graph is not a DAG.
void backward(const Var& root);

/// Nodes reachable from `root` in an order where parents precede children.
std::vector<Node*> topological_order(const Var& root);

std::vector<Point3> to_points(const Mat& m);
Mat from_points(const std::vector<Point3>& pts);

}  // namespace rfc::ad
