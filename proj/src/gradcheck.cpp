#include "imatcher/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "imatcher/errors.hpp"

namespace imatcher::ad {

namespace {

double eval(const TensorFn& fn, const std::vector<Shape>& shapes,
            const std::vector<std::vector<double>>& values) {
  Tape tape(Precision::f64);
  std::vector<Tensor> inputs;
  inputs.reserve(shapes.size());
  for (size_t i = 0; i < shapes.size(); ++i)
    inputs.push_back(tape.leaf(shapes[i], values[i]));
  return fn(tape, inputs).scalar();
}

}  // namespace

double grad_check(const TensorFn& fn, const std::vector<Shape>& input_shapes,
                  const std::vector<std::vector<double>>& input_values,
                  double eps) {
  if (eps <= 0.0) throw InvalidArgument("grad_check: eps must be positive");
  if (input_shapes.size() != input_values.size())
    throw InvalidArgument("grad_check: shape/value count mismatch");

  // Reverse-mode gradients.
  Tape tape(Precision::f64);
  std::vector<Tensor> inputs;
  for (size_t i = 0; i < input_shapes.size(); ++i)
    inputs.push_back(tape.leaf(input_shapes[i], input_values[i]));
  Tensor loss = fn(tape, inputs);
  tape.backward(loss);
  std::vector<std::vector<double>> g_ad;
  g_ad.reserve(inputs.size());
  for (const Tensor& t : inputs) g_ad.push_back(tape.grad(t));

  // Central differences per coordinate.
  double worst = 0.0;
  std::vector<std::vector<double>> vals = input_values;
  for (size_t i = 0; i < vals.size(); ++i) {
    for (size_t c = 0; c < vals[i].size(); ++c) {
      double orig = vals[i][c];
      vals[i][c] = orig + eps;
      double up = eval(fn, input_shapes, vals);
      vals[i][c] = orig - eps;
      double down = eval(fn, input_shapes, vals);
      vals[i][c] = orig;
      double fd = (up - down) / (2.0 * eps);
      double ad = g_ad[i][c];
      double err = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace imatcher::ad
