#include "imatcher/features.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "imatcher/errors.hpp"
#include "imatcher/knn.hpp"

namespace imatcher {

MatX handcrafted_descriptor(const PointCloud& cloud, int k_local) {
  if (k_local < 4) throw InvalidArgument("handcrafted_descriptor: k_local must be >= 4");
  const int m = cloud.size();
  if (m < 3) throw InvalidArgument("handcrafted_descriptor: cloud too small");
  const int k = std::min(k_local, m - 1);

  // Global PCA axes of the centered cloud.
  MatX3 centered = cloud.points.rowwise() - cloud.points.colwise().mean();
  Mat3 global_cov = centered.transpose() * centered / m;
  Eigen::SelfAdjointEigenSolver<Mat3> global_eig(global_cov);
  Mat3 axes = global_eig.eigenvectors();  // columns

  IndexMatrix nbr = knn_excluding(cloud.points, cloud.points, k, [] (int m_) {
    std::vector<int> self(m_);
    for (int i = 0; i < m_; ++i) self[i] = i;
    return self;
  }(m));

  MatX desc = MatX::Zero(m, 10);
  for (int i = 0; i < m; ++i) {
    MatX3 local(k, 3);
    VecX dists(k);
    for (int j = 0; j < k; ++j) {
      local.row(j) = cloud.points.row(nbr[i][j]);
      dists(j) = (local.row(j) - cloud.points.row(i)).norm();
    }
    Vec3 mean = local.colwise().mean().transpose();
    MatX3 d = local.rowwise() - mean.transpose();
    Mat3 cov = d.transpose() * d / k;
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 evals = eig.eigenvalues();  // ascending
    // Sorted descending; clamp tiny negatives from degenerate neighborhoods.
    desc(i, 0) = std::max(0.0, evals(2));
    desc(i, 1) = std::max(0.0, evals(1));
    desc(i, 2) = std::max(0.0, evals(0));
    // Local normal = eigenvector of the smallest eigenvalue.
    Vec3 normal = eig.eigenvectors().col(0);
    for (int a = 0; a < 3; ++a)
      desc(i, 3 + a) = std::abs(normal.dot(axes.col(a)));
    double dm = dists.mean();
    desc(i, 6) = dm;
    desc(i, 7) = std::sqrt((dists.array() - dm).square().mean());
    desc(i, 8) = dists.minCoeff();
    desc(i, 9) = dists.maxCoeff();
  }
  return desc;
}

ad::Tensor project_features(const ad::Tensor& desc, const ad::Tensor& W,
                            const ad::Tensor& b) {
  return ad::relu(ad::instance_norm(ad::linear(desc, W, b)));
}

}  // namespace imatcher
