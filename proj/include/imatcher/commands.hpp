#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imatcher/io.hpp"
#include "imatcher/pipeline.hpp"
#include "imatcher/registration.hpp"
#include "imatcher/train.hpp"
#include "imatcher/types.hpp"

namespace imatcher {

enum class Preset { synthetic, object, outdoor };
enum class Matcher { imatcher, sinkhorn, nn };

/// Shared configuration for match/register/eval/ablate runs. Presets bind
/// defaults (d, graph k, thresholds); explicit flags override them.
struct RunConfig {
  Preset preset = Preset::synthetic;
  int d = 64;
  int k_graph = 12;
  int k_local = 8;
  MatchConfig match;
  EvalConfig eval;
  AblationConfig ablation;
  std::uint64_t seed = 0;
  std::string weights_path;
  std::string output_path;
  Matcher matcher = Matcher::imatcher;
  bool use_ransac = false;
  std::vector<int> num_corr_budgets;
  ad::Precision precision = ad::Precision::f64;

  static RunConfig for_preset(Preset p);
  PipelineConfig pipeline_config() const;
};

struct DatasetEntry {
  std::string pair_id;
  std::uint64_t seed = 0;
  std::string x_path, y_path, t_path;
};

struct Dataset {
  std::string dir;
  std::vector<DatasetEntry> entries;
};

/// Writes X/Y clouds, ground-truth transforms, and a manifest for
/// `num_pairs` synthetic pairs (pair i uses seed base.seed + i).
Dataset cmd_gen(const SynthParams& base, int num_pairs, const std::string& out_dir,
                bool force);

Dataset load_dataset(const std::string& dir);

/// Trains on the dataset pairs (cycled) and writes the checkpoint plus a
/// per-step loss CSV next to it.
ModelWeights cmd_train(const RunConfig& run, const TrainConfig& train,
                       const Dataset& data, const std::string& weights_out,
                       const std::string& loss_csv_out);

struct MatchResult {
  CorrespondenceSet corr;
  bool used_warp_match = false;
  double row_sum_max = 0.0;
  double score_min = 0.0, score_max = 0.0;
};

/// Runs the matcher on one pair and optionally writes (i, j, score) CSV.
MatchResult cmd_match(const RunConfig& run, const ModelWeights& w,
                      const PointCloud& X, const PointCloud& Y,
                      const std::string& corr_csv_out = "");

struct EvalSummary {
  std::vector<ReportRow> rows;
  MetricsReport aggregate;  // means over successful pairs; rr/fmr as ratios
  double rr_ratio = 0.0;
  double fmr_ratio = 0.0;
  /// mean IR per requested correspondence budget, aligned with
  /// run.num_corr_budgets.
  std::vector<double> ir_per_budget;
};

/// Per-pair metrics plus aggregates; writes the report CSV (and a budget CSV
/// when --num-corr was requested) under run.output_path when set.
EvalSummary cmd_eval(const RunConfig& run, const ModelWeights& w,
                     const Dataset& data);

struct AblationRow {
  std::string label;  // (a)..(e)
  AblationConfig config;
  EvalSummary summary;
  bool used_warp_match = false;
};

/// Trains and evaluates the five Table-style configurations in order:
/// (a) none, (b) GCNN, (c) +Bi.Match, (d) +G.C, (e) +Rep.
std::vector<AblationRow> cmd_ablate(const RunConfig& run,
                                    const TrainConfig& train,
                                    const Dataset& train_data,
                                    const Dataset& eval_data,
                                    const std::string& out_csv);

std::vector<AblationConfig> ablation_matrix();

}  // namespace imatcher
