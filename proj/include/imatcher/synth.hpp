#pragma once

#include <tuple>
#include <vector>

#include "imatcher/types.hpp"

namespace imatcher {

struct SynthPair {
  PointCloud source;       // X
  PointCloud target;       // Y
  RigidTransform gt;       // T such that Y ≈ T(X) on the overlap
};

/// Generates a partially overlapping cloud pair. The target is a cropped,
/// rigidly moved and noised view of the same underlying shape; the source is
/// cropped from the complementary side so that |overlap| / min(M, N) lands
/// near overlap_ratio. Deterministic given the seed.
/// Throws NumericError if the requested overlap yields fewer than 3 shared
/// points.
SynthPair synth_pair(const SynthParams& p);

struct GtCorrespondences {
  CorrespondenceSet pairs;
  std::vector<bool> src_inlier;  // length M: x_i has a match within beta
  std::vector<bool> tgt_inlier;  // length N: y_j has a match within beta
};

/// Ground-truth matching under T_gt: (i, j) included iff y_j is the nearest
/// target point to T_gt(x_i) and the distance is below beta.
GtCorrespondences gt_correspondences(const PointCloud& X, const PointCloud& Y,
                                     const RigidTransform& T_gt, double beta);

}  // namespace imatcher
