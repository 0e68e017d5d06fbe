#include "imatcher/consistency.hpp"

#include <cmath>

#include "imatcher/errors.hpp"

namespace imatcher {

MatX fosc_matrix(const PointCloud& X, const MatX3& matched_Y) {
  const int m = X.size();
  if (matched_Y.rows() != m)
    throw InvalidArgument("fosc_matrix: matched_Y must be row-aligned with X");
  MatX G = MatX::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      double dx = (X.points.row(i) - X.points.row(j)).norm();
      double dy = (matched_Y.row(i) - matched_Y.row(j)).norm();
      double g = std::abs(dx - dy);
      G(i, j) = g;
      G(j, i) = g;
    }
  }
  return G;
}

VecX confidence_scores(const MatX& G, double sigma) {
  if (sigma <= 0.0) throw InvalidArgument("confidence_scores: sigma must be positive");
  const int m = static_cast<int>(G.rows());
  VecX alpha(m);
  for (int i = 0; i < m; ++i)
    alpha(i) = (-sigma * G.row(i).array()).exp().mean();
  return alpha;
}

ad::Tensor confidence_scores(const MatX& G, const ad::Tensor& log_sigma) {
  using namespace ad;
  const int m = static_cast<int>(G.rows());
  std::vector<double> g(static_cast<size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) g[i * m + j] = G(i, j);
  Tensor G_const = Tensor::constant({m, m}, std::move(g));
  Tensor sigma = exp(log_sigma);
  Tensor soft = elementwise_mul(G_const, sigma);
  return mean_reduce(exp(neg(soft)), 1);  // row means, diagonal included
}

ad::Tensor encode_confidence(const ad::Tensor& alpha, const ParamTensors& p) {
  using namespace ad;
  Tensor h = reshape(alpha, {alpha.size(), 1});
  for (const char* layer : {"h2.0", "h2.1", "h2.2"}) {
    std::string n(layer);
    h = relu(instance_norm(linear(h, p.at(n + ".W"), p.at(n + ".b"))));
  }
  return h;  // M x d
}

}  // namespace imatcher
