#include "imatcher/reposition.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "imatcher/errors.hpp"
#include "imatcher/knn.hpp"
#include "imatcher/transform.hpp"

namespace imatcher {

RigidTransform kabsch(const MatX3& src, const MatX3& tgt, const VecX& weights) {
  const int n = static_cast<int>(src.rows());
  if (n < 3 || tgt.rows() != n || weights.size() != n)
    throw InvalidArgument("kabsch: need >= 3 weighted pairs");
  double wsum = weights.sum();
  if (!(wsum > 0.0)) throw InvalidArgument("kabsch: non-positive weight sum");
  VecX w = weights / wsum;

  Vec3 cs = src.transpose() * w;
  Vec3 ct = tgt.transpose() * w;
  Mat3 H = Mat3::Zero();
  for (int i = 0; i < n; ++i)
    H += w(i) * (src.row(i).transpose() - cs) * (tgt.row(i) - ct.transpose());

  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = svd.singularValues();

  // Zero cross-covariance (e.g. every soft target collapsed onto the
  // centroid): any rotation fits equally well, so return the symmetric
  // choice — identity plus centroid alignment.
  double spread_s = 0.0, spread_t = 0.0;
  for (int i = 0; i < n; ++i) {
    spread_s += w(i) * (src.row(i).transpose() - cs).squaredNorm();
    spread_t += w(i) * (tgt.row(i).transpose() - ct).squaredNorm();
  }
  if (s(0) <= 1e-12 * std::max(std::sqrt(spread_s * spread_t), 1e-300)) {
    RigidTransform T;
    T.translation = ct - cs;
    return T;
  }
  if (!(s(1) > 1e-12 * s(0)))
    throw DegenerateGeometry("kabsch: collinear support points");

  Mat3 U = svd.matrixU(), V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  if ((V * U.transpose()).determinant() < 0.0) D(2, 2) = -1.0;

  RigidTransform T;
  T.rotation = V * D * U.transpose();
  T.translation = ct - T.rotation * cs;
  return T;
}

RigidTransform weighted_procrustes(const PointCloud& X, const PointCloud& Y,
                                   const MatX& scores) {
  const int m = X.size(), n = Y.size();
  if (m < 3 || n < 3) throw InvalidArgument("weighted_procrustes: need >= 3 points");
  if (scores.rows() != m || scores.cols() != n)
    throw InvalidArgument("weighted_procrustes: score shape mismatch");
  if (!scores.allFinite())
    throw InvalidArgument("weighted_procrustes: non-finite scores");

  // Row softmax -> soft targets; row maxima -> confidence weights.
  MatX3 soft(m, 3);
  VecX w(m);
  for (int i = 0; i < m; ++i) {
    double mx = scores.row(i).maxCoeff();
    VecX e = (scores.row(i).array() - mx).exp();
    e /= e.sum();
    soft.row(i) = (e.transpose() * Y.points);
    w(i) = e.maxCoeff();
  }
  return kabsch(X.points, soft, w);
}

BilateralMatch warp_and_match(const PointCloud& X, const PointCloud& Y,
                              const RigidTransform& T) {
  PointCloud Xw = apply_transform(X, T);
  BilateralMatch out;
  out.src_to_tgt = nearest_neighbor(Xw.points, Y.points);
  out.tgt_to_src = nearest_neighbor(Y.points, Xw.points);
  return out;
}

BilateralMatch argmax_match(const MatX& scores) {
  const int m = static_cast<int>(scores.rows());
  const int n = static_cast<int>(scores.cols());
  BilateralMatch out;
  out.src_to_tgt.resize(m);
  out.tgt_to_src.resize(n);
  for (int i = 0; i < m; ++i) {
    int best = 0;
    for (int j = 1; j < n; ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out.src_to_tgt[i] = best;
  }
  for (int j = 0; j < n; ++j) {
    int best = 0;
    for (int i = 1; i < m; ++i)
      if (scores(i, j) > scores(best, j)) best = i;
    out.tgt_to_src[j] = best;
  }
  return out;
}

ad::Tensor fuse_pair_features(const ad::Tensor& h_src, const ad::Tensor& h_tgt,
                              const std::vector<int>& map, const ad::Tensor& W,
                              const ad::Tensor& b) {
  if (h_src.shape.size() != 2 ||
      static_cast<int>(map.size()) != h_src.shape[0])
    throw InvalidArgument("fuse_pair_features: map length must match source rows");
  ad::Tensor gathered = ad::gather_rows(h_tgt, map);
  ad::Tensor cat = ad::concat(h_src, gathered, 1);
  return ad::linear(cat, W, b);
}

}  // namespace imatcher
