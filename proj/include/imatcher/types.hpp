#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace imatcher {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

/// Ordered set of 3D points. Rows are points.
struct PointCloud {
  MatX3 points;

  int size() const { return static_cast<int>(points.rows()); }
};

/// Rigid motion: p -> rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }
  /// Checks RᵀR = I and det(R) = +1 within tol.
  bool is_valid(double tol = 1e-9) const;
};

struct Correspondence {
  int src = 0;
  int tgt = 0;
  double weight = 1.0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;

  int size() const { return static_cast<int>(pairs.size()); }
  bool empty() const { return pairs.empty(); }
};

enum class SynthShape { sphere, cube_grid, gaussian_blobs };

/// Parameters for synthetic pair generation.
struct SynthParams {
  int num_points = 256;
  double overlap_ratio = 0.7;
  double noise_sigma = 0.01;
  double rot_max = 45.0;    // degrees
  double trans_max = 0.5;   // length units
  std::uint64_t seed = 0;
  SynthShape shape = SynthShape::gaussian_blobs;
};

/// Thresholds for ground-truth matching and metric computation.
struct EvalConfig {
  double beta = 0.05;        // GT-match distance threshold
  double inlier_tau = 0.05;  // IR residual threshold
  double fmr_eta = 0.6;
  double rre_thresh = 5.0;   // degrees
  double rte_thresh = 0.1;   // length units
};

}  // namespace imatcher
