#include <doctest.h>

#include <cmath>

#include "imatcher/errors.hpp"
#include "imatcher/gradcheck.hpp"
#include "imatcher/rng.hpp"
#include "imatcher/tensor.hpp"

using namespace imatcher;
using namespace imatcher::ad;

namespace {

std::vector<double> random_values(Rng& rng, int n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// Keeps relu/max inputs away from kinks and ties.
void spread(std::vector<double>& v, double gap = 1e-3) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) < gap) v[i] += 3 * gap;
    v[i] += static_cast<double>(i) * gap * 1.7;
  }
}

double check_op(const TensorFn& fn, const std::vector<Shape>& shapes,
                std::uint64_t seed, bool away_from_kinks = false) {
  Rng rng(seed);
  std::vector<std::vector<double>> vals;
  for (const Shape& s : shapes) {
    auto v = random_values(rng, shape_size(s));
    if (away_from_kinks) spread(v);
    vals.push_back(std::move(v));
  }
  return grad_check(fn, shapes, vals);
}

}  // namespace

TEST_CASE("softmax of constant row is uniform") {
  Tensor x = Tensor::full({1, 4}, 3.7);
  Tensor y = softmax(x, 1);
  for (double v : y.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = Tensor::constant({5, 7}, random_values(rng, 35, 10.0));
    Tensor y = softmax(x, 1);
    for (int i = 0; i < 5; ++i) {
      double s = 0.0;
      for (int j = 0; j < 7; ++j) s += y.data()[i * 7 + j];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("relu basics") {
  Tensor x = Tensor::constant({2}, {-2.0, 3.0});
  Tensor y = relu(x);
  CHECK(y.data()[0] == 0.0);
  CHECK(y.data()[1] == 3.0);
}

TEST_CASE("group_norm matches direct per-group statistics") {
  Rng rng(15);
  const int m = 4, c = 8, groups = 2;
  std::vector<double> vals = random_values(rng, m * c, 2.0);
  Tensor y = group_norm(Tensor::constant({m, c}, vals), groups);
  const int cg = c / groups;
  for (int s = 0; s < m; ++s)
    for (int g = 0; g < groups; ++g) {
      double mean = 0.0, var = 0.0;
      for (int k = 0; k < cg; ++k) mean += vals[s * c + g * cg + k];
      mean /= cg;
      for (int k = 0; k < cg; ++k) {
        double d = vals[s * c + g * cg + k] - mean;
        var += d * d;
      }
      var /= cg;
      for (int k = 0; k < cg; ++k) {
        double expect = (vals[s * c + g * cg + k] - mean) / std::sqrt(var + 1e-5);
        CHECK(y.data()[s * c + g * cg + k] ==
              doctest::Approx(expect).epsilon(1e-12));
      }
    }
}

TEST_CASE("backward on a linear map") {
  Tape tape;
  Tensor W = tape.leaf({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor x = Tensor::constant({2, 1}, {10, 20});
  Tensor loss = sum_all(matmul(W, x));
  tape.backward(loss);
  auto g = tape.grad(W);
  // d(sum(Wx))/dW = ones * x^T
  std::vector<double> expect = {10, 20, 10, 20, 10, 20};
  for (int i = 0; i < 6; ++i) CHECK(g[i] == doctest::Approx(expect[i]));
}

TEST_CASE("backward sigmoid at zero") {
  Tape tape;
  Tensor x = tape.leaf({1}, {0.0});
  Tensor loss = sigmoid(x);
  tape.backward(loss);
  CHECK(tape.grad(x)[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  Tensor x = tape.leaf({3}, {1, 2, 3});
  Tensor y = relu(x);
  CHECK_THROWS_AS(tape.backward(y), InvalidArgument);
}

TEST_CASE("unreached parameters get zero gradient") {
  Tape tape;
  Tensor a = tape.leaf({2}, {1, 2});
  Tensor b = tape.leaf({2}, {3, 4});
  tape.backward(sum_all(a));
  auto g = tape.grad(b);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("backward is deterministic") {
  auto run = [] {
    Tape tape;
    Tensor W = tape.leaf({4, 4}, std::vector<double>(16, 0.3));
    Tensor x = tape.leaf({4, 1}, {1, -2, 3, -4});
    tape.backward(sum_all(relu(matmul(W, x))));
    return tape.grad(W);
  };
  auto g1 = run(), g2 = run();
  CHECK(g1 == g2);
}

TEST_CASE("grad_check identity and exp") {
  TensorFn ident = [](Tape&, const std::vector<Tensor>& in) {
    return sum_all(in[0]);
  };
  CHECK(grad_check(ident, {{3}}, {{1.0, 2.0, 3.0}}) < 1e-8);

  TensorFn expfn = [](Tape&, const std::vector<Tensor>& in) {
    return sum_all(exp(in[0]));
  };
  CHECK(grad_check(expfn, {{1}}, {{1.0}}) < 1e-8);
}

TEST_CASE("every op passes grad_check on 10 random instances") {
  struct Case {
    const char* name;
    TensorFn fn;
    std::vector<Shape> shapes;
    bool kinky = false;
  };
  std::vector<Case> cases = {
      {"add", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(elementwise_mul(add(in[0], in[1]), in[0]));
       }, {{3, 4}, {3, 4}}},
      {"sub", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(elementwise_mul(sub(in[0], in[1]), in[1]));
       }, {{5}, {5}}},
      {"mul_scalar_broadcast", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(elementwise_mul(in[0], in[1]));
       }, {{4, 3}, {1}}},
      {"neg_scale", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(scale(neg(in[0]), 2.5));
       }, {{6}}},
      {"exp", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(exp(scale(in[0], 0.3))); }, {{7}}},
      {"log", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(log(add(elementwise_mul(in[0], in[0]),
                                Tensor::full({1}, 0.5))));
       }, {{6}}},
      {"relu", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(relu(in[0])); }, {{8}}, true},
      {"sigmoid", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(sigmoid(in[0])); }, {{8}}},
      {"matmul", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(elementwise_mul(matmul(in[0], in[1]),
                                        matmul(in[0], in[1])));
       }, {{3, 4}, {4, 2}}},
      {"transpose", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(matmul(transpose(in[0]), in[0])); }, {{3, 2}}},
      {"concat_axis1", [](Tape&, const std::vector<Tensor>& in) {
         Tensor c = concat(in[0], in[1], 1);
         return sum_all(elementwise_mul(c, c));
       }, {{3, 2}, {3, 4}}},
      {"concat_axis0", [](Tape&, const std::vector<Tensor>& in) {
         Tensor c = concat(in[0], in[1], 0);
         return sum_all(elementwise_mul(c, c));
       }, {{2, 3}, {4, 3}}},
      {"softmax_row", [](Tape&, const std::vector<Tensor>& in) {
         Tensor s = softmax(in[0], 1);
         return sum_all(elementwise_mul(s, in[0]));
       }, {{3, 5}}},
      {"softmax_col", [](Tape&, const std::vector<Tensor>& in) {
         Tensor s = softmax(in[0], 0);
         return sum_all(elementwise_mul(s, in[0]));
       }, {{4, 3}}},
      {"max_reduce", [](Tape&, const std::vector<Tensor>& in) {
         return sum_all(max_reduce(in[0], 1)); }, {{3, 4, 2}}, true},
      {"mean_reduce", [](Tape&, const std::vector<Tensor>& in) {
         Tensor m = mean_reduce(in[0], 1);
         return sum_all(elementwise_mul(m, m));
       }, {{3, 4}}},
      {"linear", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = linear(in[0], in[1], in[2]);
         return sum_all(elementwise_mul(y, y));
       }, {{5, 3}, {4, 3}, {4}}},
      {"linear_rank3", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = linear(in[0], in[1], in[2]);
         return sum_all(elementwise_mul(y, y));
       }, {{2, 3, 4}, {5, 4}, {5}}},
      {"group_norm", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = group_norm(in[0], 2);
         return sum_all(elementwise_mul(y, in[0]));
       }, {{3, 8}}},
      {"instance_norm", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = instance_norm(in[0]);
         return sum_all(elementwise_mul(y, in[0]));
       }, {{6, 3}}},
      {"gather_rows", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = gather_rows(in[0], {2, 0, 2, 1});
         return sum_all(elementwise_mul(y, y));
       }, {{3, 4}}},
      {"edge_features", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = edge_features(in[0], {{1, 2}, {0, 2}, {0, 1}});
         return sum_all(elementwise_mul(y, y));
       }, {{3, 4}}},
      {"select_entries", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = select_entries(in[0], {{0, 1}, {2, 0}, {0, 1}});
         return sum_all(elementwise_mul(y, y));
       }, {{3, 2}}},
      {"outer", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = outer(in[0], in[1]);
         return sum_all(elementwise_mul(y, y));
       }, {{3}, {4}}},
      {"reshape_mean_all", [](Tape&, const std::vector<Tensor>& in) {
         Tensor y = reshape(in[0], {6});
         return mean_all(elementwise_mul(y, y));
       }, {{2, 3}}},
  };
  for (const auto& c : cases) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      double err = check_op(c.fn, c.shapes, seed * 31 + 7, c.kinky);
      INFO(c.name << " seed " << seed);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("three-layer MLP matches finite differences") {
  TensorFn mlp = [](Tape&, const std::vector<Tensor>& in) {
    Tensor h = sigmoid(linear(in[0], in[1], in[2]));
    h = sigmoid(linear(h, in[3], in[4]));
    h = linear(h, in[5], in[6]);
    return mean_all(elementwise_mul(h, h));
  };
  std::vector<Shape> shapes = {{4, 3}, {5, 3}, {5}, {4, 5}, {4}, {2, 4}, {2}};
  for (std::uint64_t seed = 0; seed < 3; ++seed)
    CHECK(check_op(mlp, shapes, seed) < 1e-4);
}

TEST_CASE("non-finite op output raises NumericError") {
  Tensor x = Tensor::constant({1}, {1000.0});
  CHECK_THROWS_AS(exp(x), NumericError);
}

TEST_CASE("shape mismatch raises InvalidArgument") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({3, 3});
  CHECK_THROWS_AS(add(a, b), InvalidArgument);
  CHECK_THROWS_AS(matmul(a, a), InvalidArgument);
}

TEST_CASE("f32 precision rounds leaf data") {
  Tape tape(Precision::f32);
  double v = 0.1;  // not representable in binary32
  Tensor x = tape.leaf({1}, {v});
  CHECK(x.data()[0] == static_cast<double>(static_cast<float>(v)));
  CHECK(x.data()[0] != v);
}

TEST_CASE("max_reduce ties route to the lowest index") {
  Tape tape;
  Tensor x = tape.leaf({1, 3}, {2.0, 2.0, 1.0});
  Tensor y = max_reduce(x, 1);
  tape.backward(sum_all(y));
  auto g = tape.grad(x);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);
}
