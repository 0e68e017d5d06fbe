#include "imatcher/pipeline.hpp"

#include <algorithm>

#include "imatcher/consistency.hpp"
#include "imatcher/errors.hpp"
#include "imatcher/features.hpp"
#include "imatcher/fusion.hpp"
#include "imatcher/graph_embed.hpp"
#include "imatcher/knn.hpp"
#include "imatcher/registration.hpp"

namespace imatcher {

MatX to_matrix(const ad::Tensor& t) {
  if (t.shape.size() != 2) throw InvalidArgument("to_matrix: rank-2 only");
  MatX out(t.shape[0], t.shape[1]);
  for (int i = 0; i < t.shape[0]; ++i)
    for (int j = 0; j < t.shape[1]; ++j)
      out(i, j) = t.data()[i * t.shape[1] + j];
  return out;
}

namespace {

MatX tensor_rows_as_matrix(const ad::Tensor& t) { return to_matrix(t); }

// Unit-normalizes feature rows and applies a shared trainable magnitude
// exp(log_scale). Dot-product logits then live in [-e^2s, e^2s] regardless
// of layer statistics; without this the dual softmax saturates and training
// stalls.
ad::Tensor scaled_unit_rows(const ad::Tensor& h, const ad::Tensor& log_scale) {
  using namespace ad;
  const int d = h.shape[1];
  Tensor row_sq = scale(mean_reduce(elementwise_mul(h, h), 1),
                        static_cast<double>(d));
  Tensor inv_norm =
      exp(scale(log(add(row_sq, Tensor::full({1}, 1e-12))), -0.5));
  Tensor unit = elementwise_mul(h, outer(inv_norm, Tensor::full({d}, 1.0)));
  return elementwise_mul(unit, exp(log_scale));
}

ad::Tensor embed_cloud(ad::Tape&, const ParamTensors& p, const MatX& desc,
                       int cloud_size, const PipelineConfig& cfg) {
  std::vector<double> flat(desc.size());
  for (int i = 0; i < desc.rows(); ++i)
    for (int j = 0; j < desc.cols(); ++j)
      flat[i * desc.cols() + j] = desc(i, j);
  ad::Tensor desc_t =
      ad::Tensor::constant({static_cast<int>(desc.rows()), 10}, std::move(flat));
  ad::Tensor F = project_features(desc_t, p.at("proj.W"), p.at("proj.b"));
  if (!cfg.ablation.gcnn) return scaled_unit_rows(F, p.at("log_scale"));

  // Graph over current feature values, query point excluded from its own list.
  MatX fvals = tensor_rows_as_matrix(F);
  int k = std::min(cfg.k_graph, cloud_size - 1);
  std::vector<int> self(cloud_size);
  for (int i = 0; i < cloud_size; ++i) self[i] = i;
  IndexMatrix nbr = knn_excluding(fvals, fvals, k, self);
  return scaled_unit_rows(gcnn_embed(F, nbr, p).embedded, p.at("log_scale"));
}

MatX3 gather_points(const PointCloud& C, const std::vector<int>& idx) {
  MatX3 out(static_cast<int>(idx.size()), 3);
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = C.points.row(idx[i]);
  return out;
}

}  // namespace

PipelineOutput run_pipeline(ad::Tape& tape, const ParamTensors& p,
                            const PointCloud& X, const PointCloud& Y,
                            const PipelineConfig& cfg) {
  if (X.size() < 3 || Y.size() < 3)
    throw InvalidArgument("run_pipeline: clouds must have at least 3 points");

  PipelineOutput out;
  // Standardize descriptor columns with statistics pooled over both clouds:
  // per-cloud statistics differ between partial views and would shift
  // corresponding descriptors apart.
  MatX desc_x = handcrafted_descriptor(X, cfg.k_local);
  MatX desc_y = handcrafted_descriptor(Y, cfg.k_local);
  for (int j = 0; j < desc_x.cols(); ++j) {
    double mu = (desc_x.col(j).sum() + desc_y.col(j).sum()) /
                (desc_x.rows() + desc_y.rows());
    double sq = (desc_x.col(j).array() - mu).square().sum() +
                (desc_y.col(j).array() - mu).square().sum();
    double sd = std::sqrt(sq / (desc_x.rows() + desc_y.rows()));
    desc_x.col(j) = (desc_x.col(j).array() - mu) / (sd + 1e-9);
    desc_y.col(j) = (desc_y.col(j).array() - mu) / (sd + 1e-9);
  }
  ad::Tensor hx = embed_cloud(tape, p, desc_x, X.size(), cfg);
  ad::Tensor hy = embed_cloud(tape, p, desc_y, Y.size(), cfg);
  out.feat_x = hx;
  out.feat_y = hy;
  out.initial = initial_scores(hx, hy);
  MatX s_hat = to_matrix(out.initial);

  const AblationConfig& ab = cfg.ablation;
  const bool need_match = ab.bi_match || ab.global_consistency;

  if (need_match) {
    if (ab.reposition) {
      RigidTransform T;
      if (cfg.gt_warp) {
        T = *cfg.gt_warp;
      } else {
        bool solved = false;
        if (cfg.robust_pose) {
          MatchConfig mc;
          mc.ransac_iters = cfg.ransac_iters;
          mc.ransac_thresh = cfg.ransac_thresh;
          RansacResult rr =
              ransac_pose(mutual_top1(s_hat), X, Y, mc, cfg.pose_seed);
          if (rr.success) {
            T = rr.transform;
            solved = true;
          }
        }
        if (!solved) T = weighted_procrustes(X, Y, s_hat);
        out.prealign = T;
      }
      out.match = warp_and_match(X, Y, T);
      out.used_warp_match = true;
    } else {
      out.match = argmax_match(s_hat);
      out.used_warp_match = false;
    }

    const int d = hx.shape[1];
    ad::Tensor fused_x, fused_y;
    if (ab.bi_match) {
      fused_x = fuse_pair_features(hx, hy, out.match.src_to_tgt,
                                   p.at("fuse_x.W"), p.at("fuse_x.b"));
      fused_y = fuse_pair_features(hy, hx, out.match.tgt_to_src,
                                   p.at("fuse_y.W"), p.at("fuse_y.b"));
    } else {
      fused_x = ad::Tensor::zeros({X.size(), d});
      fused_y = ad::Tensor::zeros({Y.size(), d});
    }

    ad::Tensor vx, vy;
    if (ab.global_consistency) {
      MatX gx = fosc_matrix(X, gather_points(Y, out.match.src_to_tgt));
      MatX gy = fosc_matrix(Y, gather_points(X, out.match.tgt_to_src));
      vx = encode_confidence(confidence_scores(gx, p.at("log_sigma")), p);
      vy = encode_confidence(confidence_scores(gy, p.at("log_sigma")), p);
    } else {
      vx = ad::Tensor::zeros({X.size(), d});
      vy = ad::Tensor::zeros({Y.size(), d});
    }

    out.tau_x = matchability_scores(vx, fused_x, p, "h3_x");
    out.tau_y = matchability_scores(vy, fused_y, p, "h3_y");
    out.scores = final_scores(out.initial,
                              matchability_matrix(out.tau_x, out.tau_y));
    out.has_matchability = true;
  } else {
    out.scores = dual_softmax(out.initial);
  }
  return out;
}

}  // namespace imatcher
