#pragma once

#include <cstdint>
#include <optional>

#include "imatcher/types.hpp"

namespace imatcher {

enum class MatchMode { mutual_top1, top_k };

struct MatchConfig {
  MatchMode mode = MatchMode::mutual_top1;
  int k = 256;
  int ransac_iters = 500;
  double ransac_thresh = 0.05;
};

/// (i, j) kept iff j = argmax of row i and i = argmax of column j; weight is
/// the score. Ties resolved toward the lowest index.
CorrespondenceSet mutual_top1(const MatX& S);

/// The k largest entries of S (ties by lowest (i, j) lexicographic), kept
/// only when mutually consistent (row- and column-argmax agree).
CorrespondenceSet top_k_select(const MatX& S, int k);

CorrespondenceSet select_correspondences(const MatX& S, const MatchConfig& cfg);

/// Weighted Kabsch over hard pairs. Throws DegenerateGeometry for fewer than
/// 3 pairs or collinear support.
RigidTransform estimate_pose(const CorrespondenceSet& corr, const PointCloud& X,
                             const PointCloud& Y);

struct RansacResult {
  bool success = false;
  RigidTransform transform;
  int inliers = 0;
};

/// 3-point-sample RANSAC refined by Kabsch on the consensus set.
/// success == false (not an exception) when no model reaches 3 inliers.
RansacResult ransac_pose(const CorrespondenceSet& corr, const PointCloud& X,
                         const PointCloud& Y, const MatchConfig& cfg,
                         std::uint64_t seed);

/// Log-domain alternating row/column normalization. With slack, a dustbin
/// row and column holding slack_value are appended before normalization and
/// the returned matrix is (M+1) x (N+1).
MatX sinkhorn_baseline(const MatX& S, int iters, bool with_slack,
                       double slack_value = 1.0);

struct MetricsReport {
  double rre_deg = 0.0;
  double rte = 0.0;
  bool rr = false;
  double ir = 0.0;
  bool fmr_flag = false;
  double overlap = 0.0;
  int num_corr = 0;
  double runtime_s = 0.0;
};

MetricsReport compute_metrics(const RigidTransform& T_est,
                              const RigidTransform& T_gt,
                              const CorrespondenceSet& corr,
                              const PointCloud& X, const PointCloud& Y,
                              const EvalConfig& cfg);

/// Inlier ratio alone (residual under T_gt below inlier_tau).
double inlier_ratio(const CorrespondenceSet& corr, const PointCloud& X,
                    const PointCloud& Y, const RigidTransform& T_gt,
                    double inlier_tau);

}  // namespace imatcher
