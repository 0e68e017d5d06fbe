#pragma once

#include <string>
#include <vector>

#include "imatcher/registration.hpp"
#include "imatcher/types.hpp"
#include "imatcher/weights.hpp"

namespace imatcher {

/// Loads a point cloud from XYZ text (three reals per line, '#' comments) or
/// ASCII PLY (properties x, y, z; extra properties ignored). Binary PLY is
/// rejected. Throws ParseError with a line number on malformed input.
PointCloud load_cloud(const std::string& path);

/// Writes XYZ text at full double precision.
void save_cloud(const PointCloud& cloud, const std::string& path);

/// 4x4 row-major homogeneous transform, text.
void save_transform(const RigidTransform& T, const std::string& path);
RigidTransform load_transform(const std::string& path);

/// Versioned structured-text checkpoint. Values are serialized at f32
/// precision; load(save(w)) is bitwise-exact at that precision. Loading
/// verifies the full expected parameter inventory for the stored d.
void save_weights(const ModelWeights& w, const std::string& path);
ModelWeights load_weights(const std::string& path);

struct ReportRow {
  std::string pair_id;
  MetricsReport metrics;
  bool failed = false;
};

/// CSV: header then one line per pair with fixed 6-decimal formatting.
void write_report(const std::vector<ReportRow>& rows, const std::string& path);

}  // namespace imatcher
