#pragma once

#include <Eigen/Dense>
#include <vector>

#include "imatcher/types.hpp"

namespace imatcher {

/// Row-major index matrix: result[i] lists the k nearest base rows to
/// query row i by Euclidean distance, ascending, ties broken by lowest index.
using IndexMatrix = std::vector<std::vector<int>>;

/// Exact k-nearest-neighbor search between row sets of equal dimension.
/// Throws InvalidArgument if k > number of base rows.
IndexMatrix knn(const MatX& query_rows, const MatX& base_rows, int k);

/// knn variant that drops self matches: excluded[i] is removed from row i's
/// candidate set (used for feature-space graphs where query == base).
IndexMatrix knn_excluding(const MatX& query_rows, const MatX& base_rows, int k,
                          const std::vector<int>& excluded);

/// Nearest base row per query row (k = 1, flattened).
std::vector<int> nearest_neighbor(const MatX& query_rows, const MatX& base_rows);

}  // namespace imatcher
