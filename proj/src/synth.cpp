#include "imatcher/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imatcher/errors.hpp"
#include "imatcher/knn.hpp"
#include "imatcher/rng.hpp"
#include "imatcher/transform.hpp"

namespace imatcher {

namespace {

MatX3 sample_shape(SynthShape shape, int n, Rng& rng) {
  MatX3 pts(n, 3);
  switch (shape) {
    case SynthShape::sphere: {
      for (int i = 0; i < n; ++i) {
        double z = rng.uniform(-1.0, 1.0);
        double phi = rng.uniform(0.0, 2.0 * M_PI);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        pts.row(i) << r * std::cos(phi), r * std::sin(phi), z;
      }
      break;
    }
    case SynthShape::cube_grid: {
      int side = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));
      int idx = 0;
      for (int a = 0; a < side && idx < n; ++a)
        for (int b = 0; b < side && idx < n; ++b)
          for (int c = 0; c < side && idx < n; ++c, ++idx) {
            auto coord = [side](int v) {
              return side == 1 ? 0.0 : -1.0 + 2.0 * v / (side - 1);
            };
            pts.row(idx) << coord(a), coord(b), coord(c);
          }
      break;
    }
    case SynthShape::gaussian_blobs: {
      // Anisotropic blobs: random orientation and per-axis scales give each
      // blob a distinct local covariance signature, so local descriptors
      // carry enough structure for matching. Centers are spread with strongly
      // unequal per-axis extents so the cloud's principal axes are well
      // separated and survive partial-view cropping.
      // Anisotropic disc-like blobs: the thin axis gives every point a
      // well-defined, stable surface normal shared across the blob, and the
      // per-blob covariance signature separates blobs from each other. Blob
      // centers are spread with strongly unequal per-axis extents so the
      // cloud's principal axes are well separated and survive partial-view
      // cropping.
      const int num_blobs = 10;
      const Vec3 layout(4.0 * 1.7, 4.0 * 0.9, 4.0 * 0.4);
      MatX3 centers(num_blobs, 3);
      std::vector<Mat3> bases(num_blobs);
      for (int b = 0; b < num_blobs; ++b) {
        centers.row(b) << layout.x() * rng.uniform(-1.0, 1.0),
            layout.y() * rng.uniform(-1.0, 1.0),
            layout.z() * rng.uniform(-1.0, 1.0);
        Mat3 rot = random_rigid(rng.next_u64(), 180.0, 0.0).rotation;
        Vec3 scales(rng.uniform(0.56, 1.2), rng.uniform(0.32, 0.8),
                    rng.uniform(0.032, 0.08));
        bases[b] = rot * scales.asDiagonal();
      }
      for (int i = 0; i < n; ++i) {
        int b = rng.uniform_int(num_blobs);
        pts.row(i) =
            centers.row(b) +
            (bases[b] * Vec3(rng.normal(), rng.normal(), rng.normal()))
                .transpose();
      }
      break;
    }
  }
  return pts;
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
  return idx;
}

}  // namespace

SynthPair synth_pair(const SynthParams& p) {
  if (p.overlap_ratio <= 0.0 || p.overlap_ratio > 1.0)
    throw InvalidArgument("synth_pair: overlap_ratio must be in (0, 1]");
  if (p.noise_sigma < 0.0) throw InvalidArgument("synth_pair: negative noise_sigma");
  if (p.num_points < 3) throw InvalidArgument("synth_pair: num_points < 3");

  Rng rng(p.seed);

  // Both crops keep the fraction a of the points; overlap fraction is then
  // (2a - 1) / a = overlap_ratio.
  const double a = 1.0 / (2.0 - p.overlap_ratio);
  const int n_total = std::max(p.num_points, static_cast<int>(std::lround(p.num_points / a)));
  const int m = static_cast<int>(std::lround(a * n_total));
  const int n_overlap = 2 * m - n_total;
  if (n_overlap < 3)
    throw NumericError("synth_pair: overlap_ratio yields fewer than 3 shared points");

  MatX3 full = sample_shape(p.shape, n_total, rng);

  // Half-space crop along a random direction.
  double z = rng.uniform(-1.0, 1.0);
  double phi = rng.uniform(0.0, 2.0 * M_PI);
  double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  Vec3 dir(r * std::cos(phi), r * std::sin(phi), z);

  std::vector<int> order(n_total);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return full.row(i).dot(dir) < full.row(j).dot(dir);
  });

  RigidTransform T = random_rigid(rng.next_u64(), p.rot_max, p.trans_max);

  SynthPair out;
  out.gt = T;
  out.source.points.resize(m, 3);
  out.target.points.resize(m, 3);

  std::vector<int> src_shuffle = shuffled_indices(m, rng);
  std::vector<int> tgt_shuffle = shuffled_indices(m, rng);
  for (int i = 0; i < m; ++i)
    out.source.points.row(src_shuffle[i]) = full.row(order[i]);
  for (int i = 0; i < m; ++i) {
    Vec3 x = full.row(order[n_total - m + i]).transpose();
    Vec3 y = T.apply(x);
    if (p.noise_sigma > 0.0)
      y += p.noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    out.target.points.row(tgt_shuffle[i]) = y.transpose();
  }
  return out;
}

GtCorrespondences gt_correspondences(const PointCloud& X, const PointCloud& Y,
                                     const RigidTransform& T_gt, double beta) {
  const int m = X.size();
  const int n = Y.size();
  GtCorrespondences out;
  out.src_inlier.assign(m, false);
  out.tgt_inlier.assign(n, false);
  if (beta <= 0.0) return out;

  PointCloud Xw = apply_transform(X, T_gt);
  std::vector<int> nn_xy = nearest_neighbor(Xw.points, Y.points);
  for (int i = 0; i < m; ++i) {
    int j = nn_xy[i];
    double d = (Xw.points.row(i) - Y.points.row(j)).norm();
    if (d < beta) {
      out.pairs.pairs.push_back({i, j, 1.0});
      out.src_inlier[i] = true;
    }
  }

  PointCloud Yw = apply_transform(Y, T_gt.inverse());
  std::vector<int> nn_yx = nearest_neighbor(Yw.points, X.points);
  for (int j = 0; j < n; ++j) {
    double d = (Yw.points.row(j) - X.points.row(nn_yx[j])).norm();
    if (d < beta) out.tgt_inlier[j] = true;
  }
  return out;
}

}  // namespace imatcher
