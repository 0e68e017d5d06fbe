#include <CLI11.hpp>
#include <cstdio>
#include <map>
#include <string>

#include "imatcher/commands.hpp"
#include "imatcher/errors.hpp"
#include "imatcher/io.hpp"
#include "imatcher/synth.hpp"
#include "imatcher/transform.hpp"

using namespace imatcher;

namespace {

const std::map<std::string, Preset> kPresets = {
    {"synthetic", Preset::synthetic},
    {"object", Preset::object},
    {"outdoor", Preset::outdoor}};
const std::map<std::string, Matcher> kMatchers = {
    {"imatcher", Matcher::imatcher},
    {"sinkhorn", Matcher::sinkhorn},
    {"nn", Matcher::nn}};
const std::map<std::string, SynthShape> kShapes = {
    {"sphere", SynthShape::sphere},
    {"cube_grid", SynthShape::cube_grid},
    {"gaussian_blobs", SynthShape::gaussian_blobs}};

struct CommonOpts {
  std::string preset = "synthetic";
  std::uint64_t seed = 0;
  bool f64 = false;
  bool no_gcnn = false, no_bi_match = false, no_gc = false, no_rep = false;
  std::string weights;
  std::string out;
  std::string matcher = "imatcher";
  bool ransac = false;
  std::vector<int> num_corr;
  int top_k = 0;  // 0 = mutual top-1
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_matcher = true) {
  cmd->add_option("--preset", o.preset, "Configuration preset")
      ->check(CLI::IsMember({"synthetic", "object", "outdoor"}));
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_flag("--f64", o.f64, "Run in double precision (default: single)");
  cmd->add_flag("--no-gcnn", o.no_gcnn, "Disable the local graph embedding");
  cmd->add_flag("--no-bi-match", o.no_bi_match, "Disable bilateral match features");
  cmd->add_flag("--no-gc", o.no_gc, "Disable global consistency encoding");
  cmd->add_flag("--no-rep", o.no_rep, "Disable the repositioning step");
  if (with_matcher) {
    cmd->add_option("--matcher", o.matcher, "Matcher to run")
        ->check(CLI::IsMember({"imatcher", "sinkhorn", "nn"}));
    cmd->add_flag("--ransac", o.ransac, "Estimate pose with RANSAC");
    cmd->add_option("--num-corr", o.num_corr, "IR budgets (correspondence counts)");
    cmd->add_option("--top-k", o.top_k,
                    "Use mutual top-k selection with this k (0 = mutual top-1)");
  }
}

RunConfig make_run(const CommonOpts& o) {
  RunConfig run = RunConfig::for_preset(kPresets.at(o.preset));
  run.seed = o.seed;
  run.precision = o.f64 ? ad::Precision::f64 : ad::Precision::f32;
  run.ablation.gcnn = !o.no_gcnn;
  run.ablation.bi_match = !o.no_bi_match;
  run.ablation.global_consistency = !o.no_gc;
  run.ablation.reposition = !o.no_rep;
  run.matcher = kMatchers.at(o.matcher);
  run.use_ransac = o.ransac;
  run.num_corr_budgets = o.num_corr;
  if (o.top_k > 0) {
    run.match.mode = MatchMode::top_k;
    run.match.k = o.top_k;
  }
  return run;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point cloud correspondence matching and registration"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "Generate a synthetic pair dataset");
  SynthParams sp;
  std::string gen_out, gen_shape = "gaussian_blobs";
  int gen_pairs = 10;
  bool force = false;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--pairs", gen_pairs, "Number of pairs");
  gen->add_option("--points", sp.num_points, "Points per cloud");
  gen->add_option("--overlap", sp.overlap_ratio, "Overlap ratio in (0,1]");
  gen->add_option("--noise", sp.noise_sigma, "Gaussian noise sigma");
  gen->add_option("--rot-max", sp.rot_max, "Max rotation (degrees)");
  gen->add_option("--trans-max", sp.trans_max, "Max translation");
  gen->add_option("--seed", sp.seed, "Master seed");
  gen->add_option("--shape", gen_shape, "Shape family")
      ->check(CLI::IsMember({"sphere", "cube_grid", "gaussian_blobs"}));
  gen->add_flag("--force", force, "Overwrite a non-empty output directory");

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "Train weights on a dataset");
  CommonOpts to;
  std::string train_data, loss_out;
  TrainConfig tc;
  bool no_gt_warp = false;
  train_cmd->add_option("--data", train_data, "Dataset directory")->required();
  train_cmd->add_option("--weights", to.weights, "Checkpoint output path")->required();
  train_cmd->add_option("--out", loss_out, "Loss CSV output path");
  train_cmd->add_option("--steps", tc.steps, "Training steps");
  train_cmd->add_option("--lr", tc.lr, "Learning rate");
  train_cmd->add_flag("--no-gt-warp", no_gt_warp,
                      "Reposition with the predicted transform during training");
  add_common(train_cmd, to, false);

  // --- match ---
  auto* match_cmd = app.add_subcommand("match", "Match one cloud pair");
  CommonOpts mo;
  std::string src_path, tgt_path;
  match_cmd->add_option("--weights", mo.weights, "Checkpoint path")->required();
  match_cmd->add_option("--src", src_path, "Source cloud")->required();
  match_cmd->add_option("--tgt", tgt_path, "Target cloud")->required();
  match_cmd->add_option("--out", mo.out, "Correspondence CSV output");
  add_common(match_cmd, mo);

  // --- register ---
  auto* reg_cmd = app.add_subcommand("register", "Match and estimate the pose");
  CommonOpts ro;
  std::string r_src, r_tgt, r_gt;
  reg_cmd->add_option("--weights", ro.weights, "Checkpoint path")->required();
  reg_cmd->add_option("--src", r_src, "Source cloud")->required();
  reg_cmd->add_option("--tgt", r_tgt, "Target cloud")->required();
  reg_cmd->add_option("--gt", r_gt, "Ground-truth transform (for metrics)");
  reg_cmd->add_option("--out", ro.out, "Estimated transform output path");
  add_common(reg_cmd, ro);

  // --- eval ---
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate on a dataset");
  CommonOpts eo;
  std::string eval_data;
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--weights", eo.weights, "Checkpoint path")->required();
  eval_cmd->add_option("--out", eo.out, "Report CSV output")->required();
  add_common(eval_cmd, eo);

  // --- ablate ---
  auto* abl_cmd = app.add_subcommand("ablate", "Run the five-way component ablation");
  CommonOpts ao;
  std::string abl_train_data, abl_eval_data;
  TrainConfig abl_tc;
  abl_cmd->add_option("--train-data", abl_train_data, "Training dataset")->required();
  abl_cmd->add_option("--eval-data", abl_eval_data, "Evaluation dataset")->required();
  abl_cmd->add_option("--out", ao.out, "Ablation CSV output")->required();
  abl_cmd->add_option("--steps", abl_tc.steps, "Training steps per configuration");
  abl_cmd->add_option("--lr", abl_tc.lr, "Learning rate");
  add_common(abl_cmd, ao, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      sp.shape = kShapes.at(gen_shape);
      Dataset ds = cmd_gen(sp, gen_pairs, gen_out, force);
      std::printf("wrote %zu pairs to %s\n", ds.entries.size(), gen_out.c_str());
    } else if (*train_cmd) {
      RunConfig run = make_run(to);
      tc.seed = to.seed;
      tc.gt_warp = !no_gt_warp;
      Dataset ds = load_dataset(train_data);
      ModelWeights w = cmd_train(run, tc, ds, to.weights, loss_out);
      std::printf("trained %d steps, checkpoint at %s\n", tc.steps,
                  to.weights.c_str());
    } else if (*match_cmd) {
      RunConfig run = make_run(mo);
      ModelWeights w = load_weights(mo.weights);
      run.d = w.d;
      MatchResult res = cmd_match(run, w, load_cloud(src_path),
                                  load_cloud(tgt_path), mo.out);
      std::printf("pairs %d | score range [%.6g, %.6g] | max row sum %.6g | "
                  "warp_match %d\n",
                  res.corr.size(), res.score_min, res.score_max,
                  res.row_sum_max, res.used_warp_match ? 1 : 0);
    } else if (*reg_cmd) {
      RunConfig run = make_run(ro);
      ModelWeights w = load_weights(ro.weights);
      run.d = w.d;
      PointCloud X = load_cloud(r_src), Y = load_cloud(r_tgt);
      MatchResult res = cmd_match(run, w, X, Y);
      RigidTransform T;
      if (run.use_ransac) {
        RansacResult rr = ransac_pose(res.corr, X, Y, run.match, run.seed);
        if (!rr.success) {
          std::fprintf(stderr, "registration failed: no RANSAC consensus\n");
          return 1;
        }
        T = rr.transform;
      } else {
        T = estimate_pose(res.corr, X, Y);
      }
      if (!ro.out.empty()) save_transform(T, ro.out);
      std::printf("pairs %d | rotation angle %.4f deg | translation %.6g\n",
                  res.corr.size(), rotation_angle_deg(T.rotation),
                  T.translation.norm());
      if (!r_gt.empty()) {
        MetricsReport m = compute_metrics(T, load_transform(r_gt), res.corr, X,
                                          Y, run.eval);
        std::printf("RRE %.4f deg | RTE %.6g | RR %d | IR %.4f\n", m.rre_deg,
                    m.rte, m.rr ? 1 : 0, m.ir);
      }
    } else if (*eval_cmd) {
      RunConfig run = make_run(eo);
      ModelWeights w = load_weights(eo.weights);
      run.d = w.d;
      run.output_path = eo.out;
      Dataset ds = load_dataset(eval_data);
      EvalSummary s = cmd_eval(run, w, ds);
      std::printf("pairs %zu | RR %.3f | mean IR %.3f | mean RRE %.4f deg | "
                  "mean RTE %.6g | FMR %.3f\n",
                  s.rows.size(), s.rr_ratio, s.aggregate.ir,
                  s.aggregate.rre_deg, s.aggregate.rte, s.fmr_ratio);
    } else if (*abl_cmd) {
      RunConfig run = make_run(ao);
      abl_tc.seed = ao.seed;
      Dataset tr = load_dataset(abl_train_data);
      Dataset ev = load_dataset(abl_eval_data);
      auto rows = cmd_ablate(run, abl_tc, tr, ev, ao.out);
      for (const auto& r : rows)
        std::printf("%s IR %.3f RR %.3f RRE %.4f RTE %.6g warp_match %d\n",
                    r.label.c_str(), r.summary.aggregate.ir, r.summary.rr_ratio,
                    r.summary.aggregate.rre_deg, r.summary.aggregate.rte,
                    r.used_warp_match ? 1 : 0);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
