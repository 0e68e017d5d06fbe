#pragma once

#include <vector>

#include "imatcher/tensor.hpp"
#include "imatcher/weights.hpp"

namespace imatcher {

/// Number of channel groups used by every group-normalized layer.
inline constexpr int kGroupNormGroups = 8;

struct GcnnOutput {
  ad::Tensor embedded;  // M x d
  ad::Tensor pooled;    // M x 2d
};

/// EdgeConv embedding: h1 MLP over [f_i, f_i - f_j] edge tensors, max-pooled
/// over the k neighbors, then projected back to dimension d.
GcnnOutput gcnn_embed(const ad::Tensor& F,
                      const std::vector<std::vector<int>>& nbr_idx,
                      const ParamTensors& p);

/// Intermediate score matrix: S_hat[i,j] = embedded_x[i] . embedded_y[j].
ad::Tensor initial_scores(const ad::Tensor& hx, const ad::Tensor& hy);

}  // namespace imatcher
