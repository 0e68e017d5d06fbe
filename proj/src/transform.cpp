#include "imatcher/transform.hpp"

#include <algorithm>
#include <cmath>

#include "imatcher/errors.hpp"
#include "imatcher/rng.hpp"

namespace imatcher {

bool RigidTransform::is_valid(double tol) const {
  Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T) {
  if (!T.is_valid(1e-9)) throw InvalidArgument("apply_transform: invalid rigid transform");
  PointCloud out;
  out.points = (cloud.points * T.rotation.transpose()).rowwise() +
               T.translation.transpose();
  return out;
}

Mat3 axis_angle(const Vec3& axis, double angle_rad) {
  Vec3 u = axis.normalized();
  Mat3 K;
  K << 0, -u.z(), u.y(), u.z(), 0, -u.x(), -u.y(), u.x(), 0;
  return Mat3::Identity() + std::sin(angle_rad) * K +
         (1.0 - std::cos(angle_rad)) * K * K;
}

RigidTransform random_rigid(std::uint64_t seed, double rot_max_deg,
                            double trans_max) {
  if (rot_max_deg < 0.0 || rot_max_deg > 180.0)
    throw InvalidArgument("random_rigid: rot_max must be in [0, 180]");
  if (trans_max < 0.0) throw InvalidArgument("random_rigid: negative trans_max");
  Rng rng(seed);

  auto unit_vector = [&rng]() {
    // Marsaglia: uniform direction on the sphere.
    double z = rng.uniform(-1.0, 1.0);
    double phi = rng.uniform(0.0, 2.0 * M_PI);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3(r * std::cos(phi), r * std::sin(phi), z);
  };

  RigidTransform T;
  Vec3 axis = unit_vector();
  double angle = rng.uniform(0.0, rot_max_deg * M_PI / 180.0);
  T.rotation = axis_angle(axis, angle);
  T.translation = unit_vector() * rng.uniform(0.0, trans_max);
  return T;
}

double rotation_angle_deg(const Mat3& R) {
  // atan2 of the skew part keeps full precision for tiny angles where the
  // trace formula alone bottoms out around 1e-6 degrees.
  Vec3 v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  double s = 0.5 * v.norm();
  double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::atan2(s, c) * 180.0 / M_PI;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  // (a ∘ b)(p) = a(b(p))
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

}  // namespace imatcher
