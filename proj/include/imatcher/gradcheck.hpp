#pragma once

#include <functional>
#include <vector>

#include "imatcher/tensor.hpp"

namespace imatcher::ad {

/// Scalar-valued function of a list of leaf tensors built on the given tape.
using TensorFn =
    std::function<Tensor(Tape&, const std::vector<Tensor>& inputs)>;

/// Central-difference verification of reverse-mode gradients (f64).
/// Returns max over all input coordinates of
///   |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
double grad_check(const TensorFn& fn,
                  const std::vector<Shape>& input_shapes,
                  const std::vector<std::vector<double>>& input_values,
                  double eps = 1e-6);

}  // namespace imatcher::ad
