#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "imatcher/errors.hpp"
#include "imatcher/registration.hpp"
#include "imatcher/rng.hpp"
#include "imatcher/synth.hpp"
#include "imatcher/transform.hpp"

using namespace imatcher;

namespace {

PointCloud random_cloud(std::uint64_t seed, int n) {
  Rng rng(seed);
  PointCloud c;
  c.points.resize(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) c.points(i, j) = rng.normal();
  return c;
}

bool has_pair(const CorrespondenceSet& s, int i, int j) {
  for (const auto& c : s.pairs)
    if (c.src == i && c.tgt == j) return true;
  return false;
}

}  // namespace

TEST_CASE("mutual_top1 diagonal dominance") {
  MatX S(2, 2);
  S << 0.9, 0.1, 0.2, 0.8;
  CorrespondenceSet c = mutual_top1(S);
  CHECK(c.size() == 2);
  CHECK(has_pair(c, 0, 0));
  CHECK(has_pair(c, 1, 1));
  CHECK(c.pairs[0].weight == doctest::Approx(0.9));
}

TEST_CASE("mutual_top1 keeps only the mutually best pair") {
  MatX S(2, 2);
  S << 0.9, 0.8, 0.7, 0.1;
  CorrespondenceSet c = mutual_top1(S);
  CHECK(c.size() == 1);
  CHECK(has_pair(c, 0, 0));
}

TEST_CASE("mutual_top1 recovers a permutation matrix") {
  const int n = 6;
  std::vector<int> perm = {2, 0, 5, 1, 4, 3};
  MatX S = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) S(i, perm[i]) = 1.0;
  CorrespondenceSet c = mutual_top1(S);
  CHECK(c.size() == n);
  for (int i = 0; i < n; ++i) CHECK(has_pair(c, i, perm[i]));
}

TEST_CASE("mutual_top1 size bound") {
  Rng rng(3);
  MatX S(7, 4);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 4; ++j) S(i, j) = rng.uniform();
  CHECK(mutual_top1(S).size() <= 4);
}

TEST_CASE("top_k_select on a permutation matrix returns all pairs") {
  const int n = 4;
  std::vector<int> perm = {3, 1, 0, 2};
  MatX S = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) S(i, perm[i]) = 0.5 + 0.1 * i;
  CorrespondenceSet c = top_k_select(S, n * n);
  CHECK(c.size() == n);
  for (int i = 0; i < n; ++i) CHECK(has_pair(c, i, perm[i]));
}

TEST_CASE("top_k_select k=1 keeps the mutual global max") {
  MatX S(2, 3);
  S << 0.1, 0.9, 0.3,
       0.2, 0.4, 0.8;
  CorrespondenceSet c = top_k_select(S, 1);
  CHECK(c.size() == 1);
  CHECK(has_pair(c, 0, 1));
}

TEST_CASE("top_k_select zero k is empty") {
  MatX S = MatX::Ones(3, 3);
  CHECK(top_k_select(S, 0).empty());
}

TEST_CASE("top_k_select equals exhaustive oracle with mutual filter") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    MatX S(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) S(i, j) = rng.uniform();
    CorrespondenceSet got = top_k_select(S, 3);

    std::vector<std::pair<double, std::pair<int, int>>> flat;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) flat.push_back({S(i, j), {i, j}});
    std::sort(flat.begin(), flat.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    CorrespondenceSet expect;
    for (int t = 0; t < 3; ++t) {
      auto [i, j] = flat[t].second;
      int rb = 0, cb = 0;
      for (int q = 1; q < 4; ++q) {
        if (S(i, q) > S(i, rb)) rb = q;
        if (S(q, j) > S(cb, j)) cb = q;
      }
      if (rb == j && cb == i) expect.pairs.push_back({i, j, S(i, j)});
    }
    CHECK(got.size() == expect.size());
    for (const auto& e : expect.pairs) CHECK(has_pair(got, e.src, e.tgt));
  }
}

TEST_CASE("estimate_pose recovers an exact transform") {
  PointCloud X = random_cloud(1, 15);
  RigidTransform T = random_rigid(2, 45, 1.0);
  PointCloud Y = apply_transform(X, T);
  CorrespondenceSet c;
  for (int i = 0; i < 15; ++i) c.pairs.push_back({i, i, 1.0});
  RigidTransform est = estimate_pose(c, X, Y);
  CHECK(rotation_angle_deg(est.rotation * T.rotation.transpose()) < 1e-6);
  CHECK((est.translation - T.translation).norm() < 1e-9);
}

TEST_CASE("estimate_pose under isotropic noise keeps RTE small") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    PointCloud X = random_cloud(seed, 30);
    RigidTransform T = random_rigid(seed + 500, 45, 1.0);
    PointCloud Y = apply_transform(X, T);
    Rng rng(seed + 900);
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 3; ++j) Y.points(i, j) += 0.01 * rng.normal();
    CorrespondenceSet c;
    for (int i = 0; i < 30; ++i) c.pairs.push_back({i, i, 1.0});
    RigidTransform est = estimate_pose(c, X, Y);
    if ((est.translation - T.translation).norm() < 0.05) ++ok;
  }
  CHECK(ok == 100);
}

TEST_CASE("estimate_pose rejects two pairs") {
  PointCloud X = random_cloud(4, 5), Y = random_cloud(5, 5);
  CorrespondenceSet c;
  c.pairs.push_back({0, 0, 1.0});
  c.pairs.push_back({1, 1, 1.0});
  CHECK_THROWS_AS(estimate_pose(c, X, Y), DegenerateGeometry);
}

TEST_CASE("ransac_pose with pure inliers matches estimate_pose") {
  PointCloud X = random_cloud(7, 20);
  RigidTransform T = random_rigid(8, 45, 1.0);
  PointCloud Y = apply_transform(X, T);
  CorrespondenceSet c;
  for (int i = 0; i < 20; ++i) c.pairs.push_back({i, i, 1.0});
  MatchConfig cfg;
  RansacResult r = ransac_pose(c, X, Y, cfg, 3);
  CHECK(r.success);
  CHECK(r.inliers == 20);
  RigidTransform direct = estimate_pose(c, X, Y);
  CHECK((r.transform.rotation - direct.rotation).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((r.transform.translation - direct.translation).norm() < 1e-9);
}

TEST_CASE("ransac_pose survives 50% gross outliers") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PointCloud X = random_cloud(seed, 40);
    RigidTransform T = random_rigid(seed + 60, 45, 1.0);
    PointCloud Y = apply_transform(X, T);
    Rng rng(seed + 70);
    for (int i = 20; i < 40; ++i)
      for (int j = 0; j < 3; ++j) Y.points(i, j) = 10.0 * rng.normal();
    CorrespondenceSet c;
    for (int i = 0; i < 40; ++i) c.pairs.push_back({i, i, 1.0});
    MatchConfig cfg;
    cfg.ransac_iters = 500;
    cfg.ransac_thresh = 0.05;
    RansacResult r = ransac_pose(c, X, Y, cfg, seed);
    if (r.success &&
        rotation_angle_deg(r.transform.rotation * T.rotation.transpose()) < 0.5)
      ++ok;
  }
  CHECK(ok == 20);
}

TEST_CASE("ransac_pose is deterministic in its seed") {
  PointCloud X = random_cloud(11, 25);
  RigidTransform T = random_rigid(12, 45, 1.0);
  PointCloud Y = apply_transform(X, T);
  Rng rng(13);
  for (int i = 15; i < 25; ++i)
    for (int j = 0; j < 3; ++j) Y.points(i, j) = 5.0 * rng.normal();
  CorrespondenceSet c;
  for (int i = 0; i < 25; ++i) c.pairs.push_back({i, i, 1.0});
  MatchConfig cfg;
  RansacResult a = ransac_pose(c, X, Y, cfg, 42);
  RansacResult b = ransac_pose(c, X, Y, cfg, 42);
  CHECK((a.transform.rotation - b.transform.rotation).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(a.inliers == b.inliers);
}

TEST_CASE("ransac_pose reports failure without throwing") {
  // All correspondences point to wildly inconsistent targets; threshold tiny.
  PointCloud X = random_cloud(14, 10), Y = random_cloud(15, 10);
  Y.points *= 100.0;
  CorrespondenceSet c;
  for (int i = 0; i < 10; ++i) c.pairs.push_back({i, 9 - i, 1.0});
  MatchConfig cfg;
  cfg.ransac_thresh = 1e-12;
  RansacResult r = ransac_pose(c, X, Y, cfg, 1);
  CHECK(!r.success);
}

TEST_CASE("sinkhorn fixed point on a doubly stochastic matrix") {
  MatX S(2, 2);
  S << 0.5, 0.5, 0.5, 0.5;
  // sinkhorn operates on scores (log weights); a matrix whose exponential is
  // doubly stochastic after normalization stays put.
  MatX P = sinkhorn_baseline(S, 50, false);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(P(i, j) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("sinkhorn rows and columns converge to 1") {
  Rng rng(16);
  MatX S(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) S(i, j) = rng.normal();
  MatX P = sinkhorn_baseline(S, 100, false);
  for (int i = 0; i < 2; ++i) CHECK(P.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
  for (int j = 0; j < 2; ++j) CHECK(P.col(j).sum() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sinkhorn matches a direct normalized-iteration oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const int n = 5;
    MatX S(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) S(i, j) = rng.normal();
    MatX P = sinkhorn_baseline(S, 200, false);
    // Oracle: plain-space alternating normalization of exp(S).
    MatX Q = S.array().exp().matrix();
    for (int it = 0; it < 200; ++it) {
      for (int i = 0; i < n; ++i) Q.row(i) /= Q.row(i).sum();
      for (int j = 0; j < n; ++j) Q.col(j) /= Q.col(j).sum();
    }
    CHECK((P - Q).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("sinkhorn max deviation shrinks after each sweep") {
  Rng rng(17);
  const int n = 6;
  MatX S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = 2.0 * rng.normal();
  auto dev = [&](const MatX& P) {
    double d = 0.0;
    for (int i = 0; i < n; ++i) d = std::max(d, std::abs(P.row(i).sum() - 1.0));
    for (int j = 0; j < n; ++j) d = std::max(d, std::abs(P.col(j).sum() - 1.0));
    return d;
  };
  double prev = dev(sinkhorn_baseline(S, 1, false));
  for (int iters = 2; iters <= 20; ++iters) {
    double d = dev(sinkhorn_baseline(S, iters, false));
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
}

TEST_CASE("sinkhorn with slack appends a dustbin row and column") {
  MatX S(3, 4);
  S.setZero();
  MatX P = sinkhorn_baseline(S, 50, true, 1.0);
  CHECK(P.rows() == 4);
  CHECK(P.cols() == 5);
  CHECK(P.minCoeff() > 0.0);
}

TEST_CASE("compute_metrics on identical transforms") {
  PointCloud X = random_cloud(20, 10);
  RigidTransform T = random_rigid(21, 45, 1.0);
  PointCloud Y = apply_transform(X, T);
  CorrespondenceSet c;
  for (int i = 0; i < 10; ++i) c.pairs.push_back({i, i, 1.0});
  EvalConfig cfg;
  MetricsReport r = compute_metrics(T, T, c, X, Y, cfg);
  CHECK(r.rre_deg < 1e-9);
  CHECK(r.rte < 1e-12);
  CHECK(r.rr);
  CHECK(r.ir == doctest::Approx(1.0));
  CHECK(r.fmr_flag);
  CHECK(r.num_corr == 10);
}

TEST_CASE("RRE of a 10 degree z-rotation is 10") {
  RigidTransform gt;
  RigidTransform est;
  est.rotation = axis_angle(Vec3(0, 0, 1), 10.0 * M_PI / 180.0);
  PointCloud X = random_cloud(22, 5), Y = random_cloud(23, 5);
  CorrespondenceSet c;
  for (int i = 0; i < 5; ++i) c.pairs.push_back({i, i, 1.0});
  EvalConfig cfg;
  MetricsReport r = compute_metrics(est, gt, c, X, Y, cfg);
  CHECK(r.rre_deg == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("RRE is symmetric in the relative rotation") {
  RigidTransform A = random_rigid(24, 45, 1.0);
  RigidTransform B = random_rigid(25, 45, 1.0);
  PointCloud X = random_cloud(26, 5), Y = random_cloud(27, 5);
  CorrespondenceSet c;
  for (int i = 0; i < 5; ++i) c.pairs.push_back({i, i, 1.0});
  EvalConfig cfg;
  double ab = compute_metrics(A, B, c, X, Y, cfg).rre_deg;
  double ba = compute_metrics(B, A, c, X, Y, cfg).rre_deg;
  CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
}

TEST_CASE("inlier_ratio counts residuals under T_gt") {
  PointCloud X = random_cloud(28, 10);
  RigidTransform T = random_rigid(29, 45, 1.0);
  PointCloud Y = apply_transform(X, T);
  Y.points.row(0) += Eigen::RowVector3d(1, 1, 1);  // break one target
  CorrespondenceSet c;
  for (int i = 0; i < 10; ++i) c.pairs.push_back({i, i, 1.0});
  CHECK(inlier_ratio(c, X, Y, T, 0.05) == doctest::Approx(0.9));
}

TEST_CASE("rr flag respects both thresholds") {
  PointCloud X = random_cloud(30, 5), Y = random_cloud(31, 5);
  CorrespondenceSet c;
  for (int i = 0; i < 5; ++i) c.pairs.push_back({i, i, 1.0});
  EvalConfig cfg;
  cfg.rre_thresh = 5.0;
  cfg.rte_thresh = 0.1;
  RigidTransform gt;
  RigidTransform bad_rot;
  bad_rot.rotation = axis_angle(Vec3(1, 0, 0), 10.0 * M_PI / 180.0);
  CHECK(!compute_metrics(bad_rot, gt, c, X, Y, cfg).rr);
  RigidTransform bad_t;
  bad_t.translation = Vec3(0.5, 0, 0);
  CHECK(!compute_metrics(bad_t, gt, c, X, Y, cfg).rr);
  CHECK(compute_metrics(gt, gt, c, X, Y, cfg).rr);
}
