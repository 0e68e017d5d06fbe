#include "imatcher/weights.hpp"

#include <cmath>

#include "imatcher/errors.hpp"
#include "imatcher/rng.hpp"

namespace imatcher {

namespace {

void add_linear(std::vector<Param>& out, const std::string& name, int out_dim,
                int in_dim, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  Param W{name + ".W", {out_dim, in_dim}, {}};
  W.value.resize(static_cast<size_t>(out_dim) * in_dim);
  for (double& v : W.value) v = rng.uniform(-bound, bound);
  Param b{name + ".b", {out_dim}, {}};
  b.value.resize(out_dim);
  for (double& v : b.value) v = rng.uniform(-bound, bound);
  out.push_back(std::move(W));
  out.push_back(std::move(b));
}

}  // namespace

ModelWeights ModelWeights::init(int d, std::uint64_t seed) {
  if (d < 8 || d % 8 != 0)
    throw InvalidArgument("ModelWeights: d must be a positive multiple of 8");
  Rng rng(seed);
  ModelWeights w;
  w.d = d;

  add_linear(w.params, "proj", d, 10, rng);

  add_linear(w.params, "h1.0", d, 2 * d, rng);
  add_linear(w.params, "h1.1", d, d, rng);
  add_linear(w.params, "h1.2", 2 * d, d, rng);
  add_linear(w.params, "post_pool", d, 2 * d, rng);

  add_linear(w.params, "fuse_x", d, 2 * d, rng);
  add_linear(w.params, "fuse_y", d, 2 * d, rng);

  w.params.push_back({"log_sigma", {1}, {0.0}});
  w.params.push_back({"log_scale", {1}, {2.5}});

  add_linear(w.params, "h2.0", d / 4, 1, rng);
  add_linear(w.params, "h2.1", d / 2, d / 4, rng);
  add_linear(w.params, "h2.2", d, d / 2, rng);

  for (const char* head : {"h3_x", "h3_y"}) {
    std::string h(head);
    add_linear(w.params, h + ".0", d / 4, 2 * d, rng);
    add_linear(w.params, h + ".1", d / 4, d / 4, rng);
    add_linear(w.params, h + ".2", d / 2, d / 4, rng);
    add_linear(w.params, h + ".3", 1, d / 2, rng);
  }
  return w;
}

Param& ModelWeights::find(const std::string& name) {
  for (Param& p : params)
    if (p.name == name) return p;
  throw InvalidArgument("ModelWeights: unknown parameter " + name);
}

const Param& ModelWeights::find(const std::string& name) const {
  for (const Param& p : params)
    if (p.name == name) return p;
  throw InvalidArgument("ModelWeights: unknown parameter " + name);
}

bool ModelWeights::has(const std::string& name) const {
  for (const Param& p : params)
    if (p.name == name) return true;
  return false;
}

ParamTensors register_params(ad::Tape& tape, const ModelWeights& w) {
  ParamTensors out;
  for (const Param& p : w.params) out[p.name] = tape.leaf(p.shape, p.value);
  return out;
}

}  // namespace imatcher
