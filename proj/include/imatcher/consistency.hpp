#pragma once

#include "imatcher/tensor.hpp"
#include "imatcher/types.hpp"
#include "imatcher/weights.hpp"

namespace imatcher {

/// First-order spatial compatibility matrix:
///   G[i,j] = | ||x_i - x_j|| - ||y_mi - y_mj|| |
/// where matched_Y row i holds the matched target point of x_i.
/// Symmetric with zero diagonal.
MatX fosc_matrix(const PointCloud& X, const MatX3& matched_Y);

/// Per-correspondence confidence: alpha_i = mean_j exp(-sigma * G[i,j]),
/// diagonal included. Plain-number variant for oracles and analysis.
VecX confidence_scores(const MatX& G, double sigma);

/// Tape variant: sigma = exp(log_sigma) keeps the temperature positive and
/// lets gradients flow into it.
ad::Tensor confidence_scores(const MatX& G, const ad::Tensor& log_sigma);

/// Lifts each scalar alpha_i to d dimensions through the h2 MLP.
ad::Tensor encode_confidence(const ad::Tensor& alpha, const ParamTensors& p);

}  // namespace imatcher
