#include "imatcher/train.hpp"

#include <algorithm>
#include <cmath>

#include "imatcher/errors.hpp"

namespace imatcher {

namespace {

ad::Tensor bce(const ad::Tensor& tau, const std::vector<bool>& labels) {
  using namespace ad;
  constexpr double eps = 1e-9;
  const int n = tau.size();
  std::vector<double> y(n), yc(n);
  for (int i = 0; i < n; ++i) {
    y[i] = labels[i] ? 1.0 : 0.0;
    yc[i] = 1.0 - y[i];
  }
  Tensor yt = Tensor::constant({n}, std::move(y));
  Tensor yct = Tensor::constant({n}, std::move(yc));
  Tensor one = Tensor::full({1}, 1.0 + eps);
  Tensor eps_t = Tensor::full({1}, eps);
  Tensor pos = elementwise_mul(yt, log(add(tau, eps_t)));
  Tensor neg_term = elementwise_mul(yct, log(sub(one, tau)));
  return neg(mean_all(add(pos, neg_term)));
}

}  // namespace

ad::Tensor matching_loss(const PipelineOutput& out, const GtCorrespondences& gt,
                         double bce_lambda) {
  using namespace ad;
  if (gt.pairs.empty()) throw InvalidArgument("matching_loss: empty ground truth");
  std::vector<std::pair<int, int>> ij;
  ij.reserve(gt.pairs.pairs.size());
  for (const auto& c : gt.pairs.pairs) ij.emplace_back(c.src, c.tgt);

  Tensor picked = select_entries(out.scores, ij);
  Tensor eps_t = Tensor::full({1}, 1e-9);
  Tensor nll = neg(mean_all(log(add(picked, eps_t))));
  if (!out.has_matchability || bce_lambda == 0.0) return nll;

  Tensor bce_term = scale(
      add(bce(out.tau_x, gt.src_inlier), bce(out.tau_y, gt.tgt_inlier)), 0.5);
  return add(nll, scale(bce_term, bce_lambda));
}

Trainer::Trainer(ModelWeights weights, TrainConfig cfg, PipelineConfig pipe)
    : weights_(std::move(weights)), cfg_(cfg), pipe_(pipe) {
  if (cfg_.lr < 0.0) throw InvalidArgument("Trainer: negative lr");
  if (cfg_.steps < 1) throw InvalidArgument("Trainer: steps must be >= 1");
  m_.resize(weights_.params.size());
  v_.resize(weights_.params.size());
  for (size_t i = 0; i < weights_.params.size(); ++i) {
    m_[i].assign(weights_.params[i].value.size(), 0.0);
    v_[i].assign(weights_.params[i].value.size(), 0.0);
  }
}

double Trainer::current_lr() const {
  int decays = cfg_.decay_every > 0 ? step_ / cfg_.decay_every : 0;
  return cfg_.lr * std::pow(cfg_.lr_decay, decays);
}

double Trainer::train_step(const SynthPair& pair) {
  return train_step(std::vector<SynthPair>{pair});
}

double Trainer::train_step(const std::vector<SynthPair>& batch) {
  if (batch.empty()) throw InvalidArgument("train_step: empty batch");

  std::vector<std::vector<double>> grad_acc(weights_.params.size());
  for (size_t i = 0; i < weights_.params.size(); ++i)
    grad_acc[i].assign(weights_.params[i].value.size(), 0.0);

  double loss_sum = 0.0;
  for (const SynthPair& pair : batch) {
    ad::Tape tape(cfg_.precision);
    ParamTensors params = register_params(tape, weights_);

    PipelineConfig pipe = pipe_;
    if (cfg_.gt_warp)
      pipe.gt_warp = pair.gt;
    else
      pipe.gt_warp.reset();

    PipelineOutput out =
        run_pipeline(tape, params, pair.source, pair.target, pipe);
    GtCorrespondences gt =
        gt_correspondences(pair.source, pair.target, pair.gt, gt_beta_);
    if (gt.pairs.empty())
      throw NumericError("train_step: pair has no ground-truth correspondences");

    ad::Tensor loss = matching_loss(out, gt, cfg_.bce_lambda);
    double loss_val = loss.scalar();
    if (!std::isfinite(loss_val))
      throw NumericError("train_step: non-finite loss");
    tape.backward(loss);

    for (size_t i = 0; i < weights_.params.size(); ++i) {
      std::vector<double> g = tape.grad(params.at(weights_.params[i].name));
      for (size_t c = 0; c < g.size(); ++c) grad_acc[i][c] += g[c];
    }
    loss_sum += loss_val;
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  // Adam (beta1 0.9, beta2 0.999, eps 1e-8).
  const double lr = current_lr();
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double t = static_cast<double>(step_ + 1);
  const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
  for (size_t i = 0; i < weights_.params.size(); ++i) {
    auto& val = weights_.params[i].value;
    for (size_t c = 0; c < val.size(); ++c) {
      double g = grad_acc[i][c] * inv_b;
      m_[i][c] = b1 * m_[i][c] + (1.0 - b1) * g;
      v_[i][c] = b2 * v_[i][c] + (1.0 - b2) * g * g;
      val[c] -= lr * (m_[i][c] / c1) / (std::sqrt(v_[i][c] / c2) + eps);
    }
  }
  ++step_;
  const double mean_loss = loss_sum * inv_b;
  losses_.push_back(mean_loss);
  if (on_step) on_step(step_, mean_loss, lr);
  return mean_loss;
}

ModelWeights train_loop(Trainer& trainer, const SynthParams& base, int steps) {
  const int batch = std::max(1, trainer.config().batch);
  std::uint64_t next = base.seed;
  for (int s = 0; s < steps; ++s) {
    std::vector<SynthPair> pairs;
    pairs.reserve(batch);
    for (int b = 0; b < batch; ++b) {
      SynthParams p = base;
      p.seed = next++;
      pairs.push_back(synth_pair(p));
    }
    trainer.train_step(pairs);
  }
  return trainer.weights();
}

}  // namespace imatcher
