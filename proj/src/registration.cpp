#include "imatcher/registration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imatcher/errors.hpp"
#include "imatcher/reposition.hpp"
#include "imatcher/rng.hpp"
#include "imatcher/synth.hpp"
#include "imatcher/transform.hpp"

namespace imatcher {

namespace {

std::vector<int> row_argmax(const MatX& S) {
  std::vector<int> out(S.rows());
  for (int i = 0; i < S.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < S.cols(); ++j)
      if (S(i, j) > S(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

std::vector<int> col_argmax(const MatX& S) {
  std::vector<int> out(S.cols());
  for (int j = 0; j < S.cols(); ++j) {
    int best = 0;
    for (int i = 1; i < S.rows(); ++i)
      if (S(i, j) > S(best, j)) best = i;
    out[j] = best;
  }
  return out;
}

}  // namespace

CorrespondenceSet mutual_top1(const MatX& S) {
  if (!S.allFinite()) throw InvalidArgument("mutual_top1: non-finite scores");
  std::vector<int> rmax = row_argmax(S), cmax = col_argmax(S);
  CorrespondenceSet out;
  for (int i = 0; i < S.rows(); ++i) {
    int j = rmax[i];
    if (cmax[j] == i) out.pairs.push_back({i, j, S(i, j)});
  }
  return out;
}

CorrespondenceSet top_k_select(const MatX& S, int k) {
  const int m = static_cast<int>(S.rows());
  const int n = static_cast<int>(S.cols());
  if (k < 0 || k > m * n) throw InvalidArgument("top_k_select: bad k");
  CorrespondenceSet out;
  if (k == 0) return out;

  std::vector<int> flat(static_cast<size_t>(m) * n);
  std::iota(flat.begin(), flat.end(), 0);
  // Descending score; ties by lowest (i, j) == lowest flat index.
  std::stable_sort(flat.begin(), flat.end(), [&](int a, int b) {
    double sa = S(a / n, a % n), sb = S(b / n, b % n);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  std::vector<int> rmax = row_argmax(S), cmax = col_argmax(S);
  for (int q = 0; q < k; ++q) {
    int i = flat[q] / n, j = flat[q] % n;
    if (rmax[i] == j && cmax[j] == i) out.pairs.push_back({i, j, S(i, j)});
  }
  return out;
}

CorrespondenceSet select_correspondences(const MatX& S, const MatchConfig& cfg) {
  return cfg.mode == MatchMode::mutual_top1 ? mutual_top1(S)
                                            : top_k_select(S, cfg.k);
}

RigidTransform estimate_pose(const CorrespondenceSet& corr, const PointCloud& X,
                             const PointCloud& Y) {
  const int n = corr.size();
  if (n < 3) throw DegenerateGeometry("estimate_pose: fewer than 3 pairs");
  MatX3 src(n, 3), tgt(n, 3);
  VecX w(n);
  for (int q = 0; q < n; ++q) {
    src.row(q) = X.points.row(corr.pairs[q].src);
    tgt.row(q) = Y.points.row(corr.pairs[q].tgt);
    w(q) = corr.pairs[q].weight;
  }
  return kabsch(src, tgt, w);
}

RansacResult ransac_pose(const CorrespondenceSet& corr, const PointCloud& X,
                         const PointCloud& Y, const MatchConfig& cfg,
                         std::uint64_t seed) {
  const int n = corr.size();
  if (n < 3) throw DegenerateGeometry("ransac_pose: fewer than 3 pairs");
  Rng rng(seed);
  MatX3 src(n, 3), tgt(n, 3);
  for (int q = 0; q < n; ++q) {
    src.row(q) = X.points.row(corr.pairs[q].src);
    tgt.row(q) = Y.points.row(corr.pairs[q].tgt);
  }

  RansacResult best;
  std::vector<char> best_mask(n, 0), mask(n, 0);
  for (int it = 0; it < cfg.ransac_iters; ++it) {
    int a = rng.uniform_int(n), b = rng.uniform_int(n), c = rng.uniform_int(n);
    if (a == b || a == c || b == c) continue;
    MatX3 s3(3, 3), t3(3, 3);
    s3 << src.row(a), src.row(b), src.row(c);
    t3 << tgt.row(a), tgt.row(b), tgt.row(c);
    RigidTransform T;
    try {
      T = kabsch(s3, t3, VecX::Ones(3));
    } catch (const DegenerateGeometry&) {
      continue;
    }
    int count = 0;
    for (int q = 0; q < n; ++q) {
      double r = (T.rotation * src.row(q).transpose() + T.translation -
                  tgt.row(q).transpose())
                     .norm();
      mask[q] = r < cfg.ransac_thresh ? 1 : 0;
      count += mask[q];
    }
    if (count > best.inliers) {
      best.inliers = count;
      best.transform = T;
      best_mask = mask;
    }
  }
  if (best.inliers < 3) return best;  // failure, not an error

  // Refine on the consensus set.
  int k = best.inliers;
  MatX3 s(k, 3), t(k, 3);
  int q2 = 0;
  for (int q = 0; q < n; ++q)
    if (best_mask[q]) {
      s.row(q2) = src.row(q);
      t.row(q2) = tgt.row(q);
      ++q2;
    }
  try {
    best.transform = kabsch(s, t, VecX::Ones(k));
  } catch (const DegenerateGeometry&) {
    // keep the 3-point model
  }
  best.success = true;
  return best;
}

MatX sinkhorn_baseline(const MatX& S, int iters, bool with_slack,
                       double slack_value) {
  if (iters < 1) throw InvalidArgument("sinkhorn_baseline: iters must be >= 1");
  MatX Z;
  if (with_slack) {
    Z.resize(S.rows() + 1, S.cols() + 1);
    Z.setConstant(slack_value);
    Z.topLeftCorner(S.rows(), S.cols()) = S;
  } else {
    Z = S;
  }
  auto logsumexp = [](const VecX& v) {
    double mx = v.maxCoeff();
    return mx + std::log((v.array() - mx).exp().sum());
  };
  for (int it = 0; it < iters; ++it) {
    for (int i = 0; i < Z.rows(); ++i)
      Z.row(i).array() -= logsumexp(Z.row(i).transpose());
    for (int j = 0; j < Z.cols(); ++j)
      Z.col(j).array() -= logsumexp(Z.col(j));
  }
  return Z.array().exp();
}

double inlier_ratio(const CorrespondenceSet& corr, const PointCloud& X,
                    const PointCloud& Y, const RigidTransform& T_gt,
                    double inlier_tau) {
  if (corr.empty()) return 0.0;
  int inl = 0;
  for (const auto& c : corr.pairs) {
    double r = (T_gt.rotation * X.points.row(c.src).transpose() +
                T_gt.translation - Y.points.row(c.tgt).transpose())
                   .norm();
    if (r < inlier_tau) ++inl;
  }
  return static_cast<double>(inl) / corr.size();
}

MetricsReport compute_metrics(const RigidTransform& T_est,
                              const RigidTransform& T_gt,
                              const CorrespondenceSet& corr,
                              const PointCloud& X, const PointCloud& Y,
                              const EvalConfig& cfg) {
  MetricsReport r;
  r.rre_deg = rotation_angle_deg(T_gt.rotation.transpose() * T_est.rotation);
  r.rte = (T_est.translation - T_gt.translation).norm();
  r.rr = r.rre_deg < cfg.rre_thresh && r.rte < cfg.rte_thresh;
  r.ir = inlier_ratio(corr, X, Y, T_gt, cfg.inlier_tau);
  r.fmr_flag = r.ir > cfg.fmr_eta;
  r.num_corr = corr.size();

  GtCorrespondences gt = gt_correspondences(X, Y, T_gt, cfg.beta);
  int inl = 0;
  for (bool f : gt.src_inlier) inl += f ? 1 : 0;
  r.overlap = X.size() > 0 ? static_cast<double>(inl) / X.size() : 0.0;
  return r;
}

}  // namespace imatcher
