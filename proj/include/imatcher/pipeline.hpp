#pragma once

#include <optional>

#include "imatcher/reposition.hpp"
#include "imatcher/tensor.hpp"
#include "imatcher/types.hpp"
#include "imatcher/weights.hpp"

namespace imatcher {

/// Component toggles; all off is the vanilla dual-softmax configuration.
struct AblationConfig {
  bool gcnn = true;
  bool bi_match = true;
  bool global_consistency = true;
  bool reposition = true;
};

struct PipelineConfig {
  int k_graph = 12;       // feature-space neighbors for the local graph
  int k_local = 8;        // spatial neighbors for the raw descriptor
  // Inference-time repositioning estimator. The soft weighted-Procrustes
  // solve is exact when the score rows concentrate on the right targets but
  // degrades badly under gross outlier matches; the robust variant runs
  // seeded RANSAC over the mutual top-1 correspondences of the score matrix
  // and falls back to weighted Procrustes when no consensus is found.
  bool robust_pose = true;
  int ransac_iters = 500;
  double ransac_thresh = 0.05;
  std::uint64_t pose_seed = 0x5eed;
  AblationConfig ablation;
  /// When set, the repositioning warp uses this transform instead of the
  /// score-driven pre-alignment (training mode).
  std::optional<RigidTransform> gt_warp;
};

struct PipelineOutput {
  ad::Tensor scores;         // final S, M x N
  ad::Tensor initial;        // S_hat, M x N
  ad::Tensor feat_x, feat_y; // embedded per-point features, M x d / N x d
  ad::Tensor tau_x, tau_y;   // matchability (empty tensors when branch off)
  BilateralMatch match;      // bilateral maps (empty when branch off)
  bool used_warp_match = false;  // instrumentation: true iff 3D-NN matching ran
  std::optional<RigidTransform> prealign;  // score-driven warp, when computed
  bool has_matchability = false;
};

/// Full forward pass on the given tape. Descriptor computation and
/// neighbor search are plain-number steps; everything learnable is tracked.
PipelineOutput run_pipeline(ad::Tape& tape, const ParamTensors& p,
                            const PointCloud& X, const PointCloud& Y,
                            const PipelineConfig& cfg);

/// Copies a rank-2 tensor's forward values into an Eigen matrix.
MatX to_matrix(const ad::Tensor& t);

}  // namespace imatcher
