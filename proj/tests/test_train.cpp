#include <doctest.h>

#include <cmath>

#include "imatcher/errors.hpp"
#include "imatcher/gradcheck.hpp"
#include "imatcher/pipeline.hpp"
#include "imatcher/train.hpp"

using namespace imatcher;
using namespace imatcher::ad;

namespace {

SynthParams toy_params(std::uint64_t seed, int n = 24) {
  SynthParams p;
  p.num_points = n;
  p.overlap_ratio = 0.8;
  p.noise_sigma = 0.005;
  p.seed = seed;
  return p;
}

PipelineConfig toy_pipe() {
  PipelineConfig pc;
  pc.k_graph = 4;
  pc.k_local = 6;
  return pc;
}

}  // namespace

TEST_CASE("matching_loss at a perfect assignment is near its minimum") {
  // Hand-build a PipelineOutput: S puts probability ~1 on the gt pairs and
  // tau perfectly labels the inliers.
  const int m = 4;
  Tape tape;
  PipelineOutput out;
  std::vector<double> s(m * m, 0.0);
  for (int i = 0; i < m; ++i) s[i * m + i] = 1.0;
  out.scores = tape.leaf({m, m}, s);
  out.tau_x = tape.leaf({m}, std::vector<double>(m, 1.0 - 1e-9));
  out.tau_y = tape.leaf({m}, std::vector<double>(m, 1.0 - 1e-9));
  out.has_matchability = true;
  GtCorrespondences gt;
  for (int i = 0; i < m; ++i) gt.pairs.pairs.push_back({i, i, 1.0});
  gt.src_inlier.assign(m, true);
  gt.tgt_inlier.assign(m, true);
  Tensor loss = matching_loss(out, gt, 0.5);
  CHECK(loss.scalar() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("a score of epsilon contributes about -log epsilon") {
  const int m = 2;
  Tape tape;
  PipelineOutput out;
  std::vector<double> s = {1.0, 0.0, 0.0, 0.0};  // pair (1,1) scores zero
  out.scores = tape.leaf({m, m}, s);
  out.has_matchability = false;
  GtCorrespondences gt;
  gt.pairs.pairs.push_back({0, 0, 1.0});
  gt.pairs.pairs.push_back({1, 1, 1.0});
  gt.src_inlier.assign(m, true);
  gt.tgt_inlier.assign(m, true);
  Tensor loss = matching_loss(out, gt, 0.5);
  // mean of (-log(1 + eps), -log(eps)) with eps = 1e-9: about 20.72 / 2.
  CHECK(loss.scalar() == doctest::Approx(0.5 * (-std::log(1e-9))).epsilon(1e-3));
}

TEST_CASE("matching_loss rejects an empty gt set") {
  Tape tape;
  PipelineOutput out;
  out.scores = tape.leaf({2, 2}, {0.5, 0.5, 0.5, 0.5});
  GtCorrespondences gt;
  CHECK_THROWS_AS(matching_loss(out, gt, 0.5), InvalidArgument);
}

TEST_CASE("lr = 0 leaves weights unchanged") {
  ModelWeights w = ModelWeights::init(8, 1);
  TrainConfig tc;
  tc.lr = 0.0;
  Trainer tr(w, tc, toy_pipe());
  SynthPair pair = synth_pair(toy_params(3));
  tr.train_step(pair);
  for (size_t i = 0; i < w.params.size(); ++i)
    CHECK(w.params[i].value == tr.weights().params[i].value);
}

TEST_CASE("negative lr is rejected") {
  ModelWeights w = ModelWeights::init(8, 1);
  TrainConfig tc;
  tc.lr = -1e-3;
  CHECK_THROWS_AS(Trainer(w, tc, toy_pipe()), InvalidArgument);
}

TEST_CASE("same seed gives bit-identical weights in f64") {
  auto run = [] {
    ModelWeights w = ModelWeights::init(8, 5);
    TrainConfig tc;
    tc.lr = 1e-3;
    tc.precision = Precision::f64;
    Trainer tr(w, tc, toy_pipe());
    for (std::uint64_t s = 0; s < 3; ++s)
      tr.train_step(synth_pair(toy_params(s)));
    return tr.weights();
  };
  ModelWeights a = run(), b = run();
  for (size_t i = 0; i < a.params.size(); ++i)
    CHECK(a.params[i].value == b.params[i].value);
}

TEST_CASE("one step records one loss and advances the counter") {
  ModelWeights w = ModelWeights::init(8, 2);
  TrainConfig tc;
  Trainer tr(w, tc, toy_pipe());
  double loss = tr.train_step(synth_pair(toy_params(1)));
  CHECK(std::isfinite(loss));
  CHECK(tr.step_count() == 1);
  CHECK(tr.loss_curve().size() == 1);
  CHECK(tr.loss_curve()[0] == loss);
}

TEST_CASE("learning rate decays exponentially every decay_every steps") {
  ModelWeights w = ModelWeights::init(8, 2);
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.lr_decay = 0.5;
  tc.decay_every = 2;
  Trainer tr(w, tc, toy_pipe());
  CHECK(tr.current_lr() == doctest::Approx(1e-3));
  for (int s = 0; s < 2; ++s) tr.train_step(synth_pair(toy_params(s)));
  CHECK(tr.current_lr() == doctest::Approx(0.5e-3));
  for (int s = 2; s < 4; ++s) tr.train_step(synth_pair(toy_params(s)));
  CHECK(tr.current_lr() == doctest::Approx(0.25e-3));
}

TEST_CASE("train_loop produces a loss curve of the requested length") {
  ModelWeights w = ModelWeights::init(8, 7);
  TrainConfig tc;
  tc.lr = 1e-3;
  Trainer tr(w, tc, toy_pipe());
  int calls = 0;
  tr.on_step = [&](int, double, double) { ++calls; };
  train_loop(tr, toy_params(0), 5);
  CHECK(tr.loss_curve().size() == 5);
  CHECK(calls == 5);
}

TEST_CASE("an actual update changes at least one weight") {
  ModelWeights w = ModelWeights::init(8, 9);
  TrainConfig tc;
  tc.lr = 1e-2;
  Trainer tr(w, tc, toy_pipe());
  tr.train_step(synth_pair(toy_params(4)));
  bool changed = false;
  for (size_t i = 0; i < w.params.size() && !changed; ++i)
    changed = w.params[i].value != tr.weights().params[i].value;
  CHECK(changed);
}

TEST_CASE("short training decreases the loss on a fixed pair") {
  ModelWeights w = ModelWeights::init(8, 11);
  TrainConfig tc;
  tc.lr = 5e-3;
  Trainer tr(w, tc, toy_pipe());
  SynthPair pair = synth_pair(toy_params(8));
  double first = tr.train_step(pair);
  double last = first;
  for (int s = 0; s < 60; ++s) last = tr.train_step(pair);
  CHECK(last < first);
}

TEST_CASE("full-pipeline gradient passes grad_check at toy size") {
  // Perturb all weights of a tiny model; loss through the entire pipeline.
  // Seeds chosen so no perturbation flips a discrete kNN-graph edge; finite
  // differences are meaningless across such flips.
  const int d = 16;
  ModelWeights w = ModelWeights::init(d, 2);
  SynthParams sp = toy_params(5, 8);
  sp.noise_sigma = 0.0;
  SynthPair pair = synth_pair(sp);
  GtCorrespondences gt =
      gt_correspondences(pair.source, pair.target, pair.gt, 0.05);
  PipelineConfig pc;
  pc.k_graph = 3;
  pc.k_local = 4;
  pc.gt_warp = pair.gt;

  std::vector<Shape> shapes;
  std::vector<std::vector<double>> vals;
  for (const Param& prm : w.params) {
    shapes.push_back(prm.shape);
    vals.push_back(prm.value);
  }
  TensorFn fn = [&](Tape& tape, const std::vector<Tensor>& in) {
    ParamTensors p;
    for (size_t i = 0; i < w.params.size(); ++i)
      p.emplace(w.params[i].name, in[i]);
    (void)tape;
    PipelineOutput out = run_pipeline(tape, p, pair.source, pair.target, pc);
    return matching_loss(out, gt, 0.5);
  };
  CHECK(grad_check(fn, shapes, vals, 1e-6) < 1e-3);
}
