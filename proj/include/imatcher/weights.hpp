#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "imatcher/tensor.hpp"

namespace imatcher {

struct Param {
  std::string name;
  ad::Shape shape;
  std::vector<double> value;
};

/// Flat, named parameter set for the whole pipeline:
///   proj          10 -> d linear lift of raw descriptors (shared X/Y)
///   h1.*          EdgeConv MLP, dims (d, d, 2d), input 2d (shared)
///   post_pool     2d -> d projection after max pooling (shared)
///   fuse_x/fuse_y d x 2d pair-feature fusion, one per direction
///   log_sigma     temperature of the spatial-compatibility softening
///   h2.*          confidence encoder, dims (d/4, d/2, d), input 1 (shared)
///   h3_x/h3_y.*   matchability head, dims (d/4, d/4, d/2, 1), input 2d
struct ModelWeights {
  int d = 64;
  std::vector<Param> params;

  static ModelWeights init(int d, std::uint64_t seed);

  Param& find(const std::string& name);
  const Param& find(const std::string& name) const;
  bool has(const std::string& name) const;
};

/// All parameters registered as leaves on a tape, keyed by name.
using ParamTensors = std::map<std::string, ad::Tensor>;

ParamTensors register_params(ad::Tape& tape, const ModelWeights& w);

}  // namespace imatcher
