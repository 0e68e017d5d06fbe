#pragma once

#include "imatcher/tensor.hpp"
#include "imatcher/types.hpp"

namespace imatcher {

/// Per-point 10-dimensional geometric descriptor over k_local spatial
/// neighbors:
///   [0..2]  sorted (descending) eigenvalues of the local covariance
///   [3..5]  absolute cosines of the local normal against the global PCA axes
///   [6..9]  mean / std / min / max of neighbor distances
/// Translation invariant by construction; degenerate neighborhoods yield zero
/// eigenvalues instead of an error.
MatX handcrafted_descriptor(const PointCloud& cloud, int k_local);

/// Lifts the raw descriptor to model dimension d through a learned linear
/// layer followed by instance normalization and ReLU. Lives on the tape.
ad::Tensor project_features(const ad::Tensor& desc, const ad::Tensor& W,
                            const ad::Tensor& b);

}  // namespace imatcher
