#pragma once

#include <string>

#include "imatcher/tensor.hpp"
#include "imatcher/weights.hpp"

namespace imatcher {

/// Per-point matchability tau in (0,1): sigmoid of the h3 head applied to
/// [v_hat, h_fused]. head selects the parameter set ("h3_x" or "h3_y").
ad::Tensor matchability_scores(const ad::Tensor& v_hat,
                               const ad::Tensor& h_fused,
                               const ParamTensors& p, const std::string& head);

/// Rank-1 matchability matrix: S_M[i,j] = tau_x[i] * tau_y[j].
ad::Tensor matchability_matrix(const ad::Tensor& tau_x, const ad::Tensor& tau_y);

/// Final soft assignment: S = S_M ∘ Softmax_row(S_hat) ∘ Softmax_col(S_hat).
ad::Tensor final_scores(const ad::Tensor& s_hat, const ad::Tensor& s_match);

/// Dual softmax alone (used when the matchability branch is disabled).
ad::Tensor dual_softmax(const ad::Tensor& s_hat);

}  // namespace imatcher
