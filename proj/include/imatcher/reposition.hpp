#pragma once

#include <vector>

#include "imatcher/tensor.hpp"
#include "imatcher/types.hpp"

namespace imatcher {

struct BilateralMatch {
  std::vector<int> src_to_tgt;  // length M, target index per source point
  std::vector<int> tgt_to_src;  // length N, source index per target point
};

/// Rigid pre-alignment from a raw score matrix: soft targets from the row
/// softmax, per-point weights from the row maxima, then weighted Kabsch with
/// reflection correction. Throws DegenerateGeometry for collinear support.
RigidTransform weighted_procrustes(const PointCloud& X, const PointCloud& Y,
                                   const MatX& scores);

/// Classic weighted Kabsch over explicit point pairs (same solver as
/// weighted_procrustes past the soft-assignment step).
RigidTransform kabsch(const MatX3& src, const MatX3& tgt, const VecX& weights);

/// Warps X by T and matches both directions by 3D nearest neighbor.
BilateralMatch warp_and_match(const PointCloud& X, const PointCloud& Y,
                              const RigidTransform& T);

/// Bilateral match from score-matrix argmax (repositioning-off fallback):
/// src_to_tgt[i] = argmax_j S[i,j], tgt_to_src[j] = argmax_i S[i,j].
BilateralMatch argmax_match(const MatX& scores);

/// [h_src_i, h_tgt_{map[i]}] -> d through a learned linear layer.
ad::Tensor fuse_pair_features(const ad::Tensor& h_src, const ad::Tensor& h_tgt,
                              const std::vector<int>& map, const ad::Tensor& W,
                              const ad::Tensor& b);

}  // namespace imatcher
