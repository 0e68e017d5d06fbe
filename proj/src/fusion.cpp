#include "imatcher/fusion.hpp"

#include "imatcher/errors.hpp"

namespace imatcher {

ad::Tensor matchability_scores(const ad::Tensor& v_hat,
                               const ad::Tensor& h_fused,
                               const ParamTensors& p, const std::string& head) {
  using namespace ad;
  Tensor v = concat(v_hat, h_fused, 1);  // M x 2d
  Tensor h = v;
  for (int layer = 0; layer < 4; ++layer) {
    std::string n = head + "." + std::to_string(layer);
    h = linear(h, p.at(n + ".W"), p.at(n + ".b"));
    if (layer < 3) h = relu(h);
  }
  return sigmoid(reshape(h, {h.shape[0]}));  // M
}

ad::Tensor matchability_matrix(const ad::Tensor& tau_x,
                               const ad::Tensor& tau_y) {
  return ad::outer(tau_x, tau_y);
}

ad::Tensor dual_softmax(const ad::Tensor& s_hat) {
  return ad::elementwise_mul(ad::softmax(s_hat, 1), ad::softmax(s_hat, 0));
}

ad::Tensor final_scores(const ad::Tensor& s_hat, const ad::Tensor& s_match) {
  if (s_hat.shape != s_match.shape)
    throw InvalidArgument("final_scores: shape mismatch");
  return ad::elementwise_mul(s_match, dual_softmax(s_hat));
}

}  // namespace imatcher
