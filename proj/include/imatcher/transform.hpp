#pragma once

#include <cstdint>

#include "imatcher/types.hpp"

namespace imatcher {

/// Applies R * p + t to every point.
PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T);

/// Random rigid motion: uniform rotation axis, uniform angle in [0, rot_max]
/// degrees, translation of norm uniform in [0, trans_max] along a uniform
/// direction. Deterministic given seed.
RigidTransform random_rigid(std::uint64_t seed, double rot_max_deg,
                            double trans_max);

/// Rotation matrix for angle (radians) about a unit axis (Rodrigues).
Mat3 axis_angle(const Vec3& axis, double angle_rad);

/// Geodesic angle of a rotation matrix, in degrees.
double rotation_angle_deg(const Mat3& R);

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

}  // namespace imatcher
