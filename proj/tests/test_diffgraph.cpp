#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deepctrl/rng.hpp"
#include "deepctrl/tape.hpp"
#include "deepctrl/tensor.hpp"

using namespace deepctrl;
using ad::NodeId;
using ad::Tape;

namespace {

double rel_error(const Tensor& got, const Tensor& want) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < got.data.size(); ++i) {
    const double d = got.data[i] - want.data[i];
    diff += d * d;
    ref += want.data[i] * want.data[i];
  }
  if (ref == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / ref);
}

Tensor random_tensor(std::size_t rows, std::size_t cols, RngStream& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.data) v = scale * rng.normal();
  return t;
}

// Resamples until no entry is within `margin` of zero, so kinked primitives
// are checked away from their kinks.
Tensor random_tensor_off_kink(std::size_t rows, std::size_t cols, RngStream& rng, double margin = 1e-4) {
  while (true) {
    Tensor t = random_tensor(rows, cols, rng);
    bool ok = true;
    for (double v : t.data) {
      if (std::abs(v) < margin) ok = false;
    }
    if (ok) return t;
  }
}

}  // namespace

TEST_CASE("primitive forward values match their definitions") {
  Tape tape;
  NodeId x = tape.constant(Tensor::row({-1.0, 0.0, 2.0}));
  CHECK(tape.value(tape.relu(x)).data == std::vector<double>{0.0, 0.0, 2.0});

  NodeId y = tape.constant(Tensor::row({0.5, -0.5}));
  CHECK(tape.value(tape.min_zero(y)).data == std::vector<double>{0.0, -0.5});

  NodeId w = tape.constant(Tensor::identity(2));
  NodeId b = tape.constant(Tensor::row({0.0, 0.0}));
  NodeId v = tape.constant(Tensor::row({3.0, 4.0}));
  CHECK(tape.value(tape.affine(w, v, b)).data == std::vector<double>{3.0, 4.0});
}

TEST_CASE("shape mismatches are rejected with a diagnostic naming the op") {
  Tape tape;
  NodeId a = tape.constant(Tensor::row({1.0, 2.0}));
  NodeId b = tape.constant(Tensor::row({1.0, 2.0, 3.0}));
  CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("matmul"), std::invalid_argument);
  NodeId w = tape.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  NodeId bias = tape.constant(Tensor::row({0.0, 0.0}));
  CHECK_THROWS_AS(tape.affine(w, a, bias), std::invalid_argument);
  CHECK_THROWS_AS(tape.slice_cols(a, 1, 5), std::invalid_argument);
}

TEST_CASE("non-finite op outputs are rejected") {
  Tape tape;
  CHECK_THROWS_AS(tape.constant(Tensor::row({1.0, std::nan("")})), std::runtime_error);
}

TEST_CASE("backward: simple closed-form cases") {
  SUBCASE("d(x*x)/dx at 3 is 6") {
    Tape tape;
    NodeId x = tape.leaf(Tensor::scalar(3.0));
    NodeId f = tape.mul(x, x);
    auto grads = tape.backward(f);
    CHECK(grads.at(x).data[0] == doctest::Approx(6.0));
  }
  SUBCASE("relu is flat on negatives") {
    Tape tape;
    NodeId x = tape.leaf(Tensor::scalar(-1.0));
    NodeId f = tape.relu(x);
    auto grads = tape.backward(f);
    CHECK(grads.at(x).data[0] == 0.0);
  }
  SUBCASE("relu subgradient at the kink is 0") {
    Tape tape;
    NodeId x = tape.leaf(Tensor::scalar(0.0));
    auto g1 = tape.backward(tape.relu(x));
    CHECK(g1.at(x).data[0] == 0.0);
    Tape tape2;
    NodeId y = tape2.leaf(Tensor::scalar(0.0));
    auto g2 = tape2.backward(tape2.min_zero(y));
    CHECK(g2.at(y).data[0] == 0.0);
  }
  SUBCASE("sum(Wx) gradient in x") {
    Tape tape;
    NodeId w = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    NodeId x = tape.leaf(Tensor::row({1.0, 1.0}));
    NodeId b = tape.constant(Tensor::row({0.0, 0.0}));
    NodeId y = tape.affine(w, x, b);
    NodeId f = ad::sum_cols(tape, y);
    auto grads = tape.backward(f);
    // columns of W sum to (4, 6); cross-checked against central differences
    CHECK(grads.at(x).data[0] == doctest::Approx(4.0));
    CHECK(grads.at(x).data[1] == doctest::Approx(6.0));
    Tensor fd = ad::finite_difference_gradient(
        [&](const Tensor& p) {
          Tape t2;
          NodeId w2 = t2.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
          NodeId x2 = t2.constant(p);
          NodeId b2 = t2.constant(Tensor::row({0.0, 0.0}));
          return t2.value(ad::sum_cols(t2, t2.affine(w2, x2, b2))).data[0];
        },
        Tensor::row({1.0, 1.0}));
    CHECK(rel_error(grads.at(x), fd) < 1e-8);
  }
}

TEST_CASE("backward rejects non-scalar outputs; no leaves yields empty set") {
  Tape tape;
  NodeId x = tape.leaf(Tensor::row({1.0, 2.0}));
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
  Tape tape2;
  NodeId c = tape2.constant(Tensor::scalar(5.0));
  CHECK(tape2.backward(c).empty());
}

TEST_CASE("finite_difference_gradient basics") {
  auto square = [](const Tensor& t) { return t.data[0] * t.data[0]; };
  Tensor g = ad::finite_difference_gradient(square, Tensor::scalar(1.0), 1e-5);
  CHECK(g.data[0] == doctest::Approx(2.0).epsilon(1e-8));

  auto constant = [](const Tensor&) { return 7.5; };
  Tensor g2 = ad::finite_difference_gradient(constant, Tensor::row({1.0, -2.0, 3.0}));
  for (double v : g2.data) CHECK(v == 0.0);

  CHECK_THROWS_AS(ad::finite_difference_gradient(square, Tensor::scalar(1.0), 0.0), std::invalid_argument);
}

TEST_CASE("backward matches finite differences on a random 3-layer network loss") {
  RngStream rng(99, StreamKind::Misc);
  // 4 -> 5 -> 5 -> 3 with relu between layers, scalar loss = mean of squares.
  Tensor w1 = random_tensor(5, 4, rng, 0.7), b1 = random_tensor(1, 5, rng, 0.2);
  Tensor w2 = random_tensor(5, 5, rng, 0.7), b2 = random_tensor(1, 5, rng, 0.2);
  Tensor w3 = random_tensor(3, 5, rng, 0.7), b3 = random_tensor(1, 3, rng, 0.2);
  Tensor x = random_tensor(6, 4, rng);

  auto loss = [&](const Tensor& w1v) {
    Tape t;
    NodeId h = t.affine(t.constant(w1v), t.constant(x), t.constant(b1));
    h = t.relu(h);
    h = t.relu(t.affine(t.constant(w2), h, t.constant(b2)));
    h = t.affine(t.constant(w3), h, t.constant(b3));
    NodeId sq = t.square(h);
    return t.value(t.reduce_mean_batch(ad::sum_cols(t, sq))).data[0];
  };

  Tape tape;
  NodeId w1n = tape.leaf(w1);
  NodeId h = tape.affine(w1n, tape.constant(x), tape.constant(b1));
  h = tape.relu(h);
  h = tape.relu(tape.affine(tape.constant(w2), h, tape.constant(b2)));
  h = tape.affine(tape.constant(w3), h, tape.constant(b3));
  NodeId f = tape.reduce_mean_batch(ad::sum_cols(tape, tape.square(h)));
  REQUIRE(tape.min_kink_distance() > 1e-4);
  auto grads = tape.backward(f);
  Tensor fd = ad::finite_difference_gradient(loss, w1, 1e-6);
  CHECK(rel_error(grads.at(w1n), fd) < 1e-5);
}

// Every primitive against central differences at random smooth points.
TEST_CASE("per-primitive gradients match central finite differences") {
  RngStream rng(2024, StreamKind::Misc);
  constexpr int kTrials = 100;
  constexpr double kTol = 1e-5;

  struct Builder {
    const char* name;
    std::size_t rows, cols;
    std::function<NodeId(Tape&, NodeId)> build;
  };
  std::vector<Builder> builders = {
      {"relu", 4, 3, [](Tape& t, NodeId x) { return t.relu(x); }},
      {"min_zero", 4, 3, [](Tape& t, NodeId x) { return t.min_zero(x); }},
      {"square", 4, 3, [](Tape& t, NodeId x) { return t.square(x); }},
      {"scale", 4, 3, [](Tape& t, NodeId x) { return t.scale(x, -1.7); }},
      {"add_scalar", 4, 3, [](Tape& t, NodeId x) { return t.add_scalar(x, 0.9); }},
      {"slice", 4, 5, [](Tape& t, NodeId x) { return t.slice_cols(x, 1, 4); }},
      {"diag_embed", 1, 4, [](Tape& t, NodeId x) { return t.diag_embed(x); }},
      {"mean_batch", 6, 3, [](Tape& t, NodeId x) { return t.reduce_mean_batch(x); }},
      {"add_bcast", 1, 3,
       [](Tape& t, NodeId x) { return t.add(t.constant(Tensor::matrix(4, 3, std::vector<double>(12, 0.5))), x); }},
      {"sub_bcast", 4, 3, [](Tape& t, NodeId x) { return t.sub(x, t.constant(Tensor::row({0.1, -0.2, 0.3}))); }},
      {"mul_bcast", 1, 3,
       [](Tape& t, NodeId x) { return t.mul(t.constant(Tensor::matrix(4, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12})), x); }},
      {"matmul", 4, 3, [](Tape& t, NodeId x) { return t.matmul(x, t.constant(Tensor::matrix(3, 2, {1, -1, 2, 0.5, -0.3, 1.1}))); }},
      {"affine_w", 2, 3,
       [](Tape& t, NodeId w) {
         return t.affine(w, t.constant(Tensor::matrix(4, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9, -1, -2, -3})),
                         t.constant(Tensor::row({0.2, -0.4})));
       }},
      {"concat", 4, 3,
       [](Tape& t, NodeId x) {
         return t.concat_cols({x, t.constant(Tensor::matrix(4, 2, {1, 2, 3, 4, 5, 6, 7, 8}))});
       }},
      {"batch_norm_train", 6, 3,
       [](Tape& t, NodeId x) {
         NodeId g = t.constant(Tensor::row({1.3, 0.7, -0.5}));
         NodeId b = t.constant(Tensor::row({0.1, 0.0, -0.2}));
         return t.batch_norm(x, g, b, nullptr, nullptr, 1e-5, 0.99, ad::BnMode::TrainFrozen);
       }},
  };

  for (const auto& builder : builders) {
    double worst = 0.0;
    for (int trial = 0; trial < kTrials; ++trial) {
      Tensor x = random_tensor_off_kink(builder.rows, builder.cols, rng);
      // Folding weights with distinct per-entry values; without them
      // batch-symmetric folds leave batch norm with a near-zero gradient
      // (its output is invariant to input shift/scale) and the relative
      // comparison would only measure finite-difference noise.
      auto fold = [](Tape& t, NodeId out) {
        const Tensor& v = t.value(out);
        Tensor weights = Tensor::zeros({v.rows(), v.cols()});
        for (std::size_t i = 0; i < weights.data.size(); ++i) {
          weights.data[i] = 0.4 + 0.13 * static_cast<double>(i % 7);
        }
        NodeId folded = ad::sum_cols(t, t.square(t.mul(t.add_scalar(out, 0.3), t.constant(weights))));
        while (t.value(folded).rows() > 1) folded = t.reduce_mean_batch(folded);
        return folded;
      };
      auto scalar_of = [&](const Tensor& p) {
        Tape t;
        NodeId in = t.constant(p);
        return t.value(fold(t, builder.build(t, in))).data[0];
      };
      Tape tape;
      NodeId in = tape.leaf(x);
      NodeId folded = fold(tape, builder.build(tape, in));
      if (tape.min_kink_distance() < 1e-4) {
        --trial;
        continue;
      }
      auto grads = tape.backward(folded);
      Tensor fd = ad::finite_difference_gradient(scalar_of, x, 1e-6);
      worst = std::max(worst, rel_error(grads.at(in), fd));
    }
    CHECK_MESSAGE(worst < kTol, std::string(builder.name), " worst rel error ", worst);
  }
}

TEST_CASE("linearity of backward") {
  RngStream rng(7, StreamKind::Misc);
  Tensor x0 = random_tensor_off_kink(3, 3, rng);
  const double ca = 1.7, cb = -0.6;

  auto build_f = [](Tape& t, NodeId x) {
    return t.reduce_mean_batch(ad::sum_cols(t, t.relu(x)));
  };
  auto build_g = [](Tape& t, NodeId x) {
    return t.reduce_mean_batch(ad::sum_cols(t, t.square(x)));
  };

  Tape t1;
  NodeId x1 = t1.leaf(x0);
  auto gf = t1.backward(build_f(t1, x1));
  Tape t2;
  NodeId x2 = t2.leaf(x0);
  auto gg = t2.backward(build_g(t2, x2));
  Tape t3;
  NodeId x3 = t3.leaf(x0);
  NodeId combo = t3.add(t3.scale(build_f(t3, x3), ca), t3.scale(build_g(t3, x3), cb));
  auto gc = t3.backward(combo);

  for (std::size_t i = 0; i < x0.data.size(); ++i) {
    const double want = ca * gf.at(x1).data[i] + cb * gg.at(x2).data[i];
    CHECK(gc.at(x3).data[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("tape replay determinism is bitwise") {
  RngStream rng(11, StreamKind::Misc);
  Tensor x = random_tensor(5, 4, rng);
  Tensor w = random_tensor(3, 4, rng);
  Tensor b = random_tensor(1, 3, rng);

  auto run = [&]() {
    Tape t;
    NodeId wx = t.leaf(w);
    NodeId out = t.relu(t.affine(wx, t.constant(x), t.constant(b)));
    NodeId f = t.reduce_mean_batch(ad::sum_cols(t, t.square(out)));
    auto grads = t.backward(f);
    return std::make_pair(t.value(f).data[0], grads.at(wx).data);
  };
  auto [f1, g1] = run();
  auto [f2, g2] = run();
  CHECK(f1 == f2);
  CHECK(g1 == g2);
}

TEST_CASE("diag_embed builds diag[p] so that diag[p] v equals the hadamard product") {
  Tape tape;
  NodeId p = tape.constant(Tensor::row({2.0, -3.0, 0.5}));
  NodeId d = tape.diag_embed(p);
  NodeId v = tape.constant(Tensor::column({1.0, 2.0, 4.0}));
  NodeId dv = tape.matmul(d, v);
  CHECK(tape.value(dv).data == std::vector<double>{2.0, -6.0, 2.0});
}
