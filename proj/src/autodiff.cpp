#include "rfc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "rfc/errors.hpp"

namespace rfc::ad {

void Node::accumulate(const Mat& g) {
  if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
  grad += g;
}

namespace {

Var make(Mat value, std::vector<Var> parents, const char* op, std::function<void(Node&)> fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  n->requires_grad = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p->requires_grad; });
  n->parents = std::move(parents);
  if (n->requires_grad) n->backward_fn = std::move(fn);
  return n;
}

void shape_check(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

std::string dims(const Var& v) { return std::to_string(v->rows()) + "x" + std::to_string(v->cols()); }

}  // namespace

Var param(Mat value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->op = "param";
  return n;
}

Var constant(Mat value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "constant";
  return n;
}

Var matmul(const Var& a, const Var& b) {
  shape_check(a->cols() == b->rows(), "matmul " + dims(a) + " * " + dims(b));
  return make(a->value * b->value, {a, b}, "matmul", [a, b](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad * b->value.transpose());
    if (b->requires_grad) b->accumulate(a->value.transpose() * self.grad);
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  shape_check(x->cols() == w->rows(), "linear input " + dims(x) + " vs weight " + dims(w));
  shape_check(b->rows() == 1 && b->cols() == w->cols(), "linear bias " + dims(b) + " vs weight " + dims(w));
  Mat out = x->value * w->value;
  out.rowwise() += b->value.row(0);
  return make(std::move(out), {x, w, b}, "linear", [x, w, b](Node& self) {
    if (x->requires_grad) x->accumulate(self.grad * w->value.transpose());
    if (w->requires_grad) w->accumulate(x->value.transpose() * self.grad);
    if (b->requires_grad) b->accumulate(self.grad.colwise().sum());
  });
}

Var relu(const Var& x) {
  return make(x->value.cwiseMax(0.0), {x}, "relu", [x](Node& self) {
    x->accumulate((x->value.array() > 0.0).select(self.grad, 0.0));
  });
}

Var add(const Var& a, const Var& b) {
  shape_check(a->rows() == b->rows() && a->cols() == b->cols(), "add " + dims(a) + " + " + dims(b));
  return make(a->value + b->value, {a, b}, "add", [a, b](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad);
    if (b->requires_grad) b->accumulate(self.grad);
  });
}

Var scale(const Var& a, double s) {
  return make(a->value * s, {a}, "scale", [a, s](Node& self) { a->accumulate(self.grad * s); });
}

Var max_rows(const Var& x) {
  shape_check(x->rows() > 0, "max over zero rows");
  const Eigen::Index c = x->cols();
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(c), 0);
  Mat out(1, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < x->rows(); ++i)
      if (x->value(i, j) > x->value(best, j)) best = i;
    arg[static_cast<std::size_t>(j)] = best;
    out(0, j) = x->value(best, j);
  }
  return make(std::move(out), {x}, "max_rows", [x, arg](Node& self) {
    Mat g = Mat::Zero(x->rows(), x->cols());
    for (Eigen::Index j = 0; j < x->cols(); ++j) g(arg[static_cast<std::size_t>(j)], j) = self.grad(0, j);
    x->accumulate(g);
  });
}

Var concat_cols(const Var& a, const Var& b) {
  shape_check(a->rows() == b->rows(), "concat " + dims(a) + " | " + dims(b));
  Mat out(a->rows(), a->cols() + b->cols());
  out << a->value, b->value;
  return make(std::move(out), {a, b}, "concat_cols", [a, b](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad.leftCols(a->cols()));
    if (b->requires_grad) b->accumulate(self.grad.rightCols(b->cols()));
  });
}

Var broadcast_rows(const Var& row, Eigen::Index n) {
  shape_check(row->rows() == 1, "broadcast needs a single row, got " + dims(row));
  return make(row->value.replicate(n, 1), {row}, "broadcast_rows",
              [row](Node& self) { row->accumulate(self.grad.colwise().sum()); });
}

Var gather_rows(const Var& x, std::vector<std::size_t> idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), x->cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    shape_check(idx[i] < static_cast<std::size_t>(x->rows()), "gather index out of range");
    out.row(static_cast<Eigen::Index>(i)) = x->value.row(static_cast<Eigen::Index>(idx[i]));
  }
  return make(std::move(out), {x}, "gather_rows", [x, idx = std::move(idx)](Node& self) {
    Mat g = Mat::Zero(x->rows(), x->cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
      g.row(static_cast<Eigen::Index>(idx[i])) += self.grad.row(static_cast<Eigen::Index>(i));
    x->accumulate(g);
  });
}

Var repeat_rows(const Var& x, Eigen::Index k) {
  shape_check(k > 0, "repeat count must be positive");
  Mat out(x->rows() * k, x->cols());
  for (Eigen::Index i = 0; i < x->rows(); ++i) out.middleRows(i * k, k) = x->value.row(i).replicate(k, 1);
  return make(std::move(out), {x}, "repeat_rows", [x, k](Node& self) {
    Mat g(x->rows(), x->cols());
    for (Eigen::Index i = 0; i < x->rows(); ++i) g.row(i) = self.grad.middleRows(i * k, k).colwise().sum();
    x->accumulate(g);
  });
}

Var outer_add_rows(const Var& a, const Var& b) {
  shape_check(a->cols() == b->cols(), "outer add " + dims(a) + " vs " + dims(b));
  const Eigen::Index n = a->rows(), k = b->rows();
  Mat out(n * k, a->cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.middleRows(i * k, k) = b->value;
    out.middleRows(i * k, k).rowwise() += a->value.row(i);
  }
  return make(std::move(out), {a, b}, "outer_add_rows", [a, b, n, k](Node& self) {
    if (a->requires_grad) {
      Mat g(n, a->cols());
      for (Eigen::Index i = 0; i < n; ++i) g.row(i) = self.grad.middleRows(i * k, k).colwise().sum();
      a->accumulate(g);
    }
    if (b->requires_grad) {
      Mat g = Mat::Zero(k, b->cols());
      for (Eigen::Index i = 0; i < n; ++i) g += self.grad.middleRows(i * k, k);
      b->accumulate(g);
    }
  });
}

Var reshape(const Var& x, Eigen::Index rows, Eigen::Index cols) {
  shape_check(rows * cols == x->value.size(), "reshape " + dims(x) + " to " + std::to_string(rows) + "x" + std::to_string(cols));
  Mat out = Eigen::Map<const Mat>(x->value.data(), rows, cols);
  return make(std::move(out), {x}, "reshape", [x](Node& self) {
    x->accumulate(Eigen::Map<const Mat>(self.grad.data(), x->rows(), x->cols()));
  });
}

Var softmax_cross_entropy(const Var& logits, std::size_t label) {
  shape_check(logits->rows() == 1 && label < static_cast<std::size_t>(logits->cols()), "cross-entropy needs 1xC logits and a valid label");
  const double m = logits->value.maxCoeff();
  Mat e = (logits->value.array() - m).exp().matrix();
  const double z = e.sum();
  Mat prob = e / z;
  const auto l = static_cast<Eigen::Index>(label);
  Mat out(1, 1);
  out(0, 0) = -(logits->value(0, l) - m - std::log(z));
  return make(std::move(out), {logits}, "softmax_cross_entropy", [logits, prob, l](Node& self) {
    Mat g = prob;
    g(0, l) -= 1.0;
    logits->accumulate(g * self.grad(0, 0));
  });
}

Var chamfer_loss(const Var& pred, const std::vector<Point3>& target) {
  shape_check(pred->cols() == 3 && pred->rows() > 0 && !target.empty(), "chamfer loss needs n x 3 prediction and targets");
  const auto n = static_cast<std::size_t>(pred->rows());
  const std::size_t m = target.size();
  std::vector<std::size_t> p2t(n), t2p(m);
  std::vector<double> d_p(n, std::numeric_limits<double>::infinity()), d_t(m, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 p = pred->value.row(static_cast<Eigen::Index>(i)).transpose();
    for (std::size_t j = 0; j < m; ++j) {
      const double d = (p - target[j]).squaredNorm();
      if (d < d_p[i]) {
        d_p[i] = d;
        p2t[i] = j;
      }
      if (d < d_t[j]) {
        d_t[j] = d;
        t2p[j] = i;
      }
    }
  }
  double a = 0.0, b = 0.0;
  for (double d : d_p) a += d;
  for (double d : d_t) b += d;
  Mat out(1, 1);
  out(0, 0) = a / static_cast<double>(n) + b / static_cast<double>(m);
  return make(std::move(out), {pred}, "chamfer_loss", [pred, target, p2t, t2p](Node& self) {
    const double gs = self.grad(0, 0);
    const auto n = static_cast<double>(p2t.size()), m = static_cast<double>(t2p.size());
    Mat g = Mat::Zero(pred->rows(), 3);
    for (std::size_t i = 0; i < p2t.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      g.row(r) += (2.0 / n) * (pred->value.row(r) - target[p2t[i]].transpose());
    }
    for (std::size_t j = 0; j < t2p.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(t2p[j]);
      g.row(r) += (2.0 / m) * (pred->value.row(r) - target[j].transpose());
    }
    pred->accumulate(g * gs);
  });
}

Var assignment_loss(const Var& pred, const std::vector<Point3>& target, const std::vector<std::size_t>& mapping) {
  shape_check(pred->cols() == 3 && static_cast<std::size_t>(pred->rows()) == target.size() &&
                  mapping.size() == target.size() && !target.empty(),
              "assignment loss needs matching n x 3 prediction, targets and mapping");
  const double n = static_cast<double>(target.size());
  double s = 0.0;
  for (std::size_t i = 0; i < mapping.size(); ++i)
    s += (pred->value.row(static_cast<Eigen::Index>(i)).transpose() - target[mapping[i]]).squaredNorm();
  Mat out(1, 1);
  out(0, 0) = s / n;
  return make(std::move(out), {pred}, "assignment_loss", [pred, target, mapping, n](Node& self) {
    Mat g(pred->rows(), 3);
    for (std::size_t i = 0; i < mapping.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      g.row(r) = (2.0 / n) * (pred->value.row(r) - target[mapping[i]].transpose());
    }
    pred->accumulate(g * self.grad(0, 0));
  });
}

std::vector<Node*> topological_order(const Var& root) {
  enum class Mark : char { Open, Done };
  std::unordered_map<Node*, Mark> mark;
  std::vector<Node*> order;
  // Iterative DFS; a node seen again while still open closes a cycle.
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  mark[root.get()] = Mark::Open;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      auto it = mark.find(p);
      if (it == mark.end()) {
        mark[p] = Mark::Open;
        stack.emplace_back(p, 0);
      } else if (it->second == Mark::Open) {
        throw Error(Errc::GraphCycle, std::string("cycle through '") + p->op + "' node");
      }
    } else {
      mark[node] = Mark::Done;
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Var& root) {
  if (root->value.size() != 1) throw Error(Errc::ShapeMismatch, "backward needs a scalar root");
  const auto order = topological_order(root);
  root->accumulate(Mat::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
  }
}

std::vector<Point3> to_points(const Mat& m) {
  if (m.cols() != 3) throw Error(Errc::ShapeMismatch, "expected n x 3 matrix");
  std::vector<Point3> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
  return out;
}

Mat from_points(const std::vector<Point3>& pts) {
  Mat m(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return m;
}

}  // namespace rfc::ad
