#include "helpers.hpp"

#include <functional>

#include "rfc/autodiff.hpp"

using namespace rfc;
using namespace rfc::ad;

namespace {

Mat random_mat(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1, 1);
  return m;
}

// Weighted sum of every entry, so each output cell gets a distinct gradient.
Var reduce(const Var& x, Rng& rng) {
  const auto flat = reshape(x, 1, x->value.size());
  return matmul(flat, constant(random_mat(rng, x->value.size(), 1)));
}

// Largest relative error between analytic and central-difference gradients.
double gradcheck(std::vector<Var> inputs, const std::function<Var(const std::vector<Var>&)>& f) {
  for (auto& v : inputs) v->grad = Mat();
  backward(f(inputs));
  const double h = 1e-6;
  double worst = 0;
  for (auto& v : inputs) {
    REQUIRE(v->grad.size() == v->value.size());
    for (Eigen::Index i = 0; i < v->value.size(); ++i) {
      const double keep = v->value.data()[i];
      v->value.data()[i] = keep + h;
      const double up = f(inputs)->scalar();
      v->value.data()[i] = keep - h;
      const double down = f(inputs)->scalar();
      v->value.data()[i] = keep;
      const double num = (up - down) / (2 * h), ana = v->grad.data()[i];
      worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("per-operator gradients") {
    Rng rng(61);
    const std::uint64_t w = rng();
    auto red = [w](const Var& x) {
      Rng r(w);
      return reduce(x, r);
    };
    const auto a = param(random_mat(rng, 5, 4)), b = param(random_mat(rng, 4, 3)), c = param(random_mat(rng, 5, 4));
    const auto bias = param(random_mat(rng, 1, 3)), row = param(random_mat(rng, 1, 4));
    const auto pts = param(random_mat(rng, 6, 3));

    SUBCASE("matmul") { CHECK(gradcheck({a, b}, [&](auto& v) { return red(matmul(v[0], v[1])); }) < 1e-6); }
    SUBCASE("linear") { CHECK(gradcheck({a, b, bias}, [&](auto& v) { return red(linear(v[0], v[1], v[2])); }) < 1e-6); }
    SUBCASE("relu") { CHECK(gradcheck({a}, [&](auto& v) { return red(relu(v[0])); }) < 1e-6); }
    SUBCASE("add and scale") { CHECK(gradcheck({a, c}, [&](auto& v) { return red(add(v[0], scale(v[1], -2.5))); }) < 1e-6); }
    SUBCASE("max_rows") { CHECK(gradcheck({a}, [&](auto& v) { return red(max_rows(v[0])); }) < 1e-6); }
    SUBCASE("concat_cols") { CHECK(gradcheck({a, c}, [&](auto& v) { return red(concat_cols(v[0], v[1])); }) < 1e-6); }
    SUBCASE("broadcast_rows") { CHECK(gradcheck({row}, [&](auto& v) { return red(broadcast_rows(v[0], 7)); }) < 1e-6); }
    SUBCASE("gather_rows") { CHECK(gradcheck({a}, [&](auto& v) { return red(gather_rows(v[0], {4, 0, 4, 2})); }) < 1e-6); }
    SUBCASE("repeat_rows") { CHECK(gradcheck({a}, [&](auto& v) { return red(repeat_rows(v[0], 3)); }) < 1e-6); }
    SUBCASE("outer_add_rows") { CHECK(gradcheck({a, c}, [&](auto& v) { return red(outer_add_rows(v[0], v[1])); }) < 1e-6); }
    SUBCASE("reshape") { CHECK(gradcheck({a}, [&](auto& v) { return red(reshape(v[0], 2, 10)); }) < 1e-6); }
    SUBCASE("softmax_cross_entropy") {
      CHECK(gradcheck({row}, [&](auto& v) { return softmax_cross_entropy(v[0], 2); }) < 1e-6);
    }
    SUBCASE("chamfer_loss") {
      const auto target = th::random_points(rng, 9);
      CHECK(gradcheck({pts}, [&](auto& v) { return chamfer_loss(v[0], target); }) < 1e-6);
    }
    SUBCASE("assignment_loss") {
      const auto target = th::random_points(rng, 6);
      CHECK(gradcheck({pts}, [&](auto& v) { return assignment_loss(v[0], target, {3, 1, 0, 5, 4, 2}); }) < 1e-6);
    }
  }

  TEST_CASE("max-pool gradient goes to the argmax rows only") {
    Mat m(4, 3);
    m << 1, 9, 2,
         5, 0, 2,
         5, 1, 7,
         0, 3, 1;
    const auto x = param(m);
    backward(matmul(max_rows(x), constant(Mat::Ones(3, 1))));
    Mat expected = Mat::Zero(4, 3);
    expected(1, 0) = 1;
    expected(0, 1) = 1;
    expected(2, 2) = 1;
    CHECK(x->grad == expected);
  }

  TEST_CASE("gather passes no gradient to indices and sums repeats") {
    const auto x = param(Mat::Zero(3, 2));
    backward(matmul(reshape(gather_rows(x, {1, 1, 2}), 1, 6), constant(Mat::Ones(6, 1))));
    CHECK(x->grad(0, 0) == 0);
    CHECK(x->grad(1, 0) == 2);
    CHECK(x->grad(2, 1) == 1);
  }

  TEST_CASE("zero loss gives zero gradient") {
    Rng rng(62);
    const auto target = th::random_points(rng, 8);
    const auto pred = param(from_points(target));
    backward(add(chamfer_loss(pred, target), assignment_loss(pred, target, {0, 1, 2, 3, 4, 5, 6, 7})));
    CHECK(pred->grad.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("cycles are rejected") {
    const auto a = param(Mat::Ones(1, 1));
    const auto b = relu(a);
    a->parents.push_back(b);
    CHECK(th::code_of([&] { backward(b); }) == Errc::GraphCycle);
    a->parents.clear();
  }

  TEST_CASE("shape errors") {
    Rng rng(63);
    const auto a = param(random_mat(rng, 2, 3));
    CHECK(th::code_of([&] { matmul(a, a); }) == Errc::ShapeMismatch);
    CHECK(th::code_of([&] { backward(a); }) == Errc::ShapeMismatch);
    CHECK(th::code_of([&] { reshape(a, 4, 2); }) == Errc::ShapeMismatch);
  }
}
