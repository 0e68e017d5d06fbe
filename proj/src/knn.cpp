#include "imatcher/knn.hpp"

#include <algorithm>
#include <cmath>

#include "imatcher/errors.hpp"

namespace imatcher {

namespace {

// Partial selection of the k smallest (distance, index) entries, ascending
// distance, ties by lowest index.
std::vector<int> select_k(std::vector<std::pair<double, int>>& cand, int k) {
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
  std::vector<int> out(k);
  for (int j = 0; j < k; ++j) out[j] = cand[j].second;
  return out;
}

// All-pairs squared distances via one Gram product:
//   d2(i, j) = |q_i|^2 + |b_j|^2 - 2 q_i . b_j
MatX pairwise_sq_dist(const MatX& query_rows, const MatX& base_rows) {
  VecX qn = query_rows.rowwise().squaredNorm();
  VecX bn = base_rows.rowwise().squaredNorm();
  MatX d2 = -2.0 * (query_rows * base_rows.transpose());
  d2.colwise() += qn;
  d2.rowwise() += bn.transpose();
  return d2;
}

}  // namespace

IndexMatrix knn(const MatX& query_rows, const MatX& base_rows, int k) {
  const int q = static_cast<int>(query_rows.rows());
  const int n = static_cast<int>(base_rows.rows());
  if (k > n) throw InvalidArgument("knn: k exceeds number of base rows");
  if (k < 0) throw InvalidArgument("knn: negative k");
  if (!query_rows.allFinite() || !base_rows.allFinite())
    throw InvalidArgument("knn: non-finite input");

  MatX d2 = pairwise_sq_dist(query_rows, base_rows);
  IndexMatrix result(q);
  std::vector<std::pair<double, int>> cand(n);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < n; ++j) cand[j] = {d2(i, j), j};
    result[i] = select_k(cand, k);
  }
  return result;
}

IndexMatrix knn_excluding(const MatX& query_rows, const MatX& base_rows, int k,
                          const std::vector<int>& excluded) {
  const int q = static_cast<int>(query_rows.rows());
  const int n = static_cast<int>(base_rows.rows());
  if (k > n - 1) throw InvalidArgument("knn_excluding: k exceeds candidate count");
  MatX d2 = pairwise_sq_dist(query_rows, base_rows);
  IndexMatrix result(q);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n);
  for (int i = 0; i < q; ++i) {
    cand.clear();
    const int skip = (i < static_cast<int>(excluded.size())) ? excluded[i] : -1;
    for (int j = 0; j < n; ++j) {
      if (j == skip) continue;
      cand.emplace_back(d2(i, j), j);
    }
    result[i] = select_k(cand, k);
  }
  return result;
}

std::vector<int> nearest_neighbor(const MatX& query_rows, const MatX& base_rows) {
  IndexMatrix nn = knn(query_rows, base_rows, 1);
  std::vector<int> out(nn.size());
  for (size_t i = 0; i < nn.size(); ++i) out[i] = nn[i][0];
  return out;
}

}  // namespace imatcher
