#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "imatcher/pipeline.hpp"
#include "imatcher/synth.hpp"
#include "imatcher/tensor.hpp"
#include "imatcher/types.hpp"
#include "imatcher/weights.hpp"

namespace imatcher {

struct TrainConfig {
  int steps = 1000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int batch = 1;
  ad::Precision precision = ad::Precision::f64;
  bool gt_warp = true;   // warp with the ground-truth transform while training
  double lr_decay = 0.95;
  int decay_every = 100;
  double bce_lambda = 0.5;
};

/// Negative log likelihood of the ground-truth pairs under S plus a
/// matchability BCE term:
///   loss = -mean log(S_ij + 1e-9) + lambda * bce(tau, inlier flags)
/// with the BCE averaged over the two directions.
ad::Tensor matching_loss(const PipelineOutput& out, const GtCorrespondences& gt,
                         double bce_lambda);

/// Adam optimizer state over a ModelWeights parameter list.
class Trainer {
 public:
  Trainer(ModelWeights weights, TrainConfig cfg, PipelineConfig pipe);

  /// One forward/backward/update on a single pair. Returns the loss value.
  double train_step(const SynthPair& pair);

  /// One update from gradients averaged over a batch of pairs. Returns the
  /// mean loss.
  double train_step(const std::vector<SynthPair>& batch);

  const ModelWeights& weights() const { return weights_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<double>& loss_curve() const { return losses_; }
  double current_lr() const;
  int step_count() const { return step_; }
  double gt_beta() const { return gt_beta_; }
  void set_gt_beta(double b) { gt_beta_ = b; }

  /// Optional per-step observer (step index, loss, lr).
  std::function<void(int, double, double)> on_step;

 private:
  ModelWeights weights_;
  TrainConfig cfg_;
  PipelineConfig pipe_;
  std::vector<std::vector<double>> m_, v_;
  std::vector<double> losses_;
  int step_ = 0;
  double gt_beta_ = 0.05;
};

/// Streams synthetic pairs into the trainer for `steps` steps, cfg.batch
/// fresh pairs per step; pair seeds advance consecutively from base.seed.
ModelWeights train_loop(Trainer& trainer, const SynthParams& base, int steps);

}  // namespace imatcher
