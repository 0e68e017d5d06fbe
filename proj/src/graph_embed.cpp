#include "imatcher/graph_embed.hpp"

#include "imatcher/errors.hpp"

namespace imatcher {

GcnnOutput gcnn_embed(const ad::Tensor& F,
                      const std::vector<std::vector<int>>& nbr_idx,
                      const ParamTensors& p) {
  using namespace ad;
  Tensor delta = edge_features(F, nbr_idx);  // M x k x 2d
  Tensor h = delta;
  for (const char* layer : {"h1.0", "h1.1", "h1.2"}) {
    std::string n(layer);
    h = relu(group_norm(linear(h, p.at(n + ".W"), p.at(n + ".b")),
                        kGroupNormGroups));
  }
  Tensor pooled = max_reduce(h, 1);  // M x 2d
  Tensor embedded = linear(pooled, p.at("post_pool.W"), p.at("post_pool.b"));
  return {embedded, pooled};
}

ad::Tensor initial_scores(const ad::Tensor& hx, const ad::Tensor& hy) {
  if (hx.shape.size() != 2 || hy.shape.size() != 2 ||
      hx.shape[1] != hy.shape[1])
    throw InvalidArgument("initial_scores: feature dimension mismatch");
  return ad::matmul(hx, ad::transpose(hy));
}

}  // namespace imatcher
