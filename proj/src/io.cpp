#include "imatcher/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "imatcher/errors.hpp"

namespace imatcher {

namespace {

constexpr int kWeightsVersion = 1;

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

bool parse_double(const std::string& tok, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(tok, &pos);
    return pos == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

PointCloud finalize(std::vector<double>& xyz, const std::string& path) {
  int n = static_cast<int>(xyz.size() / 3);
  if (n < 3) throw InvalidArgument(path + ": cloud has fewer than 3 points");
  PointCloud c;
  c.points.resize(n, 3);
  for (int i = 0; i < n; ++i)
    c.points.row(i) << xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2];
  return c;
}

PointCloud load_ply(std::ifstream& in, const std::string& path) {
  std::string line;
  int lineno = 1;  // "ply" already consumed
  int vertex_count = -1;
  std::vector<std::string> vertex_props;
  std::string current_element;
  bool ascii = false;

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii")
        throw ParseError(path + ": only ASCII PLY is supported (got " + fmt + ")");
      ascii = true;
    } else if (kw == "element") {
      std::string name;
      int count;
      if (!(ss >> name >> count)) parse_fail(path, lineno, "bad element line");
      current_element = name;
      if (name == "vertex") vertex_count = count;
    } else if (kw == "property") {
      if (current_element == "vertex") {
        std::string type, name;
        ss >> type >> name;
        vertex_props.push_back(name);
      }
    } else if (kw == "end_header") {
      break;
    } else if (kw == "comment" || kw == "ply" || kw.empty()) {
      // skip
    }
  }
  if (!ascii) throw ParseError(path + ": missing 'format ascii 1.0' header");
  if (vertex_count < 0) throw ParseError(path + ": missing vertex element");
  int xi = -1, yi = -1, zi = -1;
  for (size_t i = 0; i < vertex_props.size(); ++i) {
    if (vertex_props[i] == "x") xi = static_cast<int>(i);
    if (vertex_props[i] == "y") yi = static_cast<int>(i);
    if (vertex_props[i] == "z") zi = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0 || zi < 0)
    throw ParseError(path + ": vertex element lacks x/y/z properties");

  std::vector<double> xyz;
  xyz.reserve(static_cast<size_t>(vertex_count) * 3);
  for (int v = 0; v < vertex_count; ++v) {
    if (!std::getline(in, line)) parse_fail(path, lineno, "truncated vertex list");
    ++lineno;
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    if (static_cast<int>(toks.size()) < static_cast<int>(vertex_props.size()))
      parse_fail(path, lineno, "short vertex line");
    double x, y, z;
    if (!parse_double(toks[xi], x) || !parse_double(toks[yi], y) ||
        !parse_double(toks[zi], z))
      parse_fail(path, lineno, "malformed vertex coordinate");
    xyz.push_back(x);
    xyz.push_back(y);
    xyz.push_back(z);
  }
  return finalize(xyz, path);
}

}  // namespace

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_cloud: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  // Strip a UTF-8 BOM / trailing CR before dispatching.
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line == "ply") return load_ply(in, path);

  // XYZ text: re-process from the first line.
  std::vector<double> xyz;
  int lineno = 0;
  do {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    size_t start = trimmed.find_first_not_of(" \t");
    if (start == std::string::npos || trimmed[start] == '#') continue;
    std::istringstream ss(trimmed);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    if (toks.size() != 3) parse_fail(path, lineno, "expected 3 coordinates");
    double v[3];
    for (int c = 0; c < 3; ++c)
      if (!parse_double(toks[c], v[c]))
        parse_fail(path, lineno, "malformed coordinate '" + toks[c] + "'");
    xyz.insert(xyz.end(), v, v + 3);
  } while (std::getline(in, line));
  return finalize(xyz, path);
}

void save_cloud(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_cloud: cannot write " + path);
  char buf[128];
  for (int i = 0; i < cloud.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", cloud.points(i, 0),
                  cloud.points(i, 1), cloud.points(i, 2));
    out << buf;
  }
}

void save_transform(const RigidTransform& T, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_transform: cannot write " + path);
  char buf[256];
  for (int r = 0; r < 4; ++r) {
    double row[4];
    for (int c = 0; c < 4; ++c) {
      if (r < 3)
        row[c] = c < 3 ? T.rotation(r, c) : T.translation(r);
      else
        row[c] = c == 3 ? 1.0 : 0.0;
    }
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", row[0], row[1],
                  row[2], row[3]);
    out << buf;
  }
}

RigidTransform load_transform(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_transform: cannot open " + path);
  RigidTransform T;
  double m[16];
  for (int i = 0; i < 16; ++i)
    if (!(in >> m[i])) throw ParseError(path + ": expected 16 numbers");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) T.rotation(r, c) = m[4 * r + c];
    T.translation(r) = m[4 * r + 3];
  }
  return T;
}

void save_weights(const ModelWeights& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_weights: cannot write " + path);
  out << "imatcher-weights " << kWeightsVersion << "\n";
  out << "d " << w.d << "\n";
  char buf[64];
  for (const Param& p : w.params) {
    out << "param " << p.name << " " << p.shape.size();
    for (int dim : p.shape) out << " " << dim;
    out << "\n";
    for (size_t i = 0; i < p.value.size(); ++i) {
      // %.9g round-trips binary32 exactly.
      std::snprintf(buf, sizeof(buf), "%.9g",
                    static_cast<double>(static_cast<float>(p.value[i])));
      out << buf << (i + 1 == p.value.size() ? "" : " ");
    }
    out << "\n";
  }
}

ModelWeights load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_weights: cannot open " + path);
  std::string magic;
  int version = -1;
  if (!(in >> magic >> version) || magic != "imatcher-weights")
    throw ParseError(path + ": not a weights file");
  if (version != kWeightsVersion)
    throw ParseError(path + ": incompatible weights version " +
                     std::to_string(version) + " (expected " +
                     std::to_string(kWeightsVersion) + ")");
  std::string kw;
  int d = 0;
  if (!(in >> kw >> d) || kw != "d")
    throw ParseError(path + ": missing model dimension");

  ModelWeights loaded;
  loaded.d = d;
  while (in >> kw) {
    if (kw != "param") throw ParseError(path + ": unexpected token " + kw);
    Param p;
    int rank = 0;
    if (!(in >> p.name >> rank) || rank < 0 || rank > 4)
      throw ParseError(path + ": bad parameter header");
    p.shape.resize(rank);
    for (int i = 0; i < rank; ++i)
      if (!(in >> p.shape[i])) throw ParseError(path + ": bad shape for " + p.name);
    int n = ad::shape_size(p.shape);
    p.value.resize(n);
    for (int i = 0; i < n; ++i) {
      float f;
      if (!(in >> f)) throw ParseError(path + ": truncated values for " + p.name);
      p.value[i] = static_cast<double>(f);
    }
    loaded.params.push_back(std::move(p));
  }

  // Validate the full inventory against the architecture for this d.
  ModelWeights expected = ModelWeights::init(d, 0);
  for (const Param& e : expected.params) {
    if (!loaded.has(e.name))
      throw ParseError(path + ": missing parameter " + e.name);
    const Param& got = loaded.find(e.name);
    if (got.shape != e.shape)
      throw ParseError(path + ": wrong shape for parameter " + e.name);
  }
  if (loaded.params.size() != expected.params.size())
    throw ParseError(path + ": unexpected extra parameters");
  return loaded;
}

void write_report(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_report: cannot write " + path);
  out << "pair_id,rre_deg,rte,rr,ir,fmr_flag,overlap,num_corr,runtime_s\n";
  char buf[256];
  for (const ReportRow& r : rows) {
    const MetricsReport& m = r.metrics;
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%d,%.6f,%d,%.6f,%d,%.6f\n",
                  r.pair_id.c_str(), m.rre_deg, m.rte, m.rr ? 1 : 0, m.ir,
                  m.fmr_flag ? 1 : 0, m.overlap, m.num_corr, m.runtime_s);
    out << buf;
  }
}

}  // namespace imatcher
