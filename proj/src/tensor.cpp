#include "imatcher/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "imatcher/errors.hpp"

namespace imatcher::ad {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

int shape_size(const Shape& s) {
  int n = 1;
  for (int d : s) {
    if (d < 0) throw InvalidArgument("tensor: negative dimension");
    n *= d;
  }
  return n;
}

double Tensor::scalar() const {
  if (size() != 1) throw InvalidArgument("tensor: scalar() on non-scalar");
  return (*values)[0];
}

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
  if (shape_size(shape) != static_cast<int>(data.size()))
    throw InvalidArgument("tensor: data length does not match shape");
  Tensor t;
  t.shape = std::move(shape);
  t.values = std::make_shared<std::vector<double>>(std::move(data));
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  return full(std::move(shape), 0.0);
}

Tensor Tensor::full(Shape shape, double v) {
  int n = shape_size(shape);
  return constant(std::move(shape), std::vector<double>(n, v));
}

Tensor Tape::leaf(Shape shape, std::vector<double> data) {
  Tensor t = Tensor::constant(std::move(shape), std::move(data));
  if (precision_ == Precision::f32)
    for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
  t.tape = this;
  t.node = push(t.size(), nullptr);
  return t;
}

int Tape::push(int out_size, BackwardFn fn) {
  nodes_.push_back({out_size, std::move(fn)});
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad_buf(int node) {
  auto& g = grads_[node];
  if (g.empty()) g.assign(nodes_[node].size, 0.0);
  return g;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape != this || loss.node < 0)
    throw InvalidArgument("backward: loss is not tracked on this tape");
  if (loss.size() != 1) throw InvalidArgument("backward: loss must be scalar");
  grads_.assign(nodes_.size(), {});
  grad_buf(loss.node)[0] = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (!nodes_[i].back) continue;
    if (grads_[i].empty()) continue;  // unreached from loss
    nodes_[i].back(*this, grads_[i]);
  }
}

std::vector<double> Tape::grad(const Tensor& t) const {
  if (t.tape != this || t.node < 0)
    throw InvalidArgument("grad: tensor is not tracked on this tape");
  if (t.node < static_cast<int>(grads_.size()) && !grads_[t.node].empty())
    return grads_[t.node];
  return std::vector<double>(t.size(), 0.0);
}

namespace {

Tape* common_tape(std::initializer_list<const Tensor*> ts) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (t->node < 0) continue;
    if (tape && t->tape != tape)
      throw InvalidArgument("op: inputs belong to different tapes");
    tape = t->tape;
  }
  return tape;
}

// Finalizes an op result: finiteness check, f32 rounding, node registration.
Tensor finish(Tape* tape, Shape shape, std::vector<double> vals,
              Tape::BackwardFn fn, const char* op) {
  if (tape && tape->precision() == Precision::f32)
    for (double& v : vals) v = static_cast<double>(static_cast<float>(v));
  for (double v : vals)
    if (!std::isfinite(v))
      throw NumericError(std::string("op ") + op + ": non-finite output");
  Tensor t = Tensor::constant(std::move(shape), std::move(vals));
  if (tape) {
    t.tape = tape;
    t.node = tape->push(t.size(), std::move(fn));
  }
  return t;
}

void accumulate(Tape& tape, const Tensor& t, int i, double g) {
  if (t.node >= 0) tape.grad_buf(t.node)[i] += g;
}

bool broadcastable(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape || a.size() == 1 || b.size() == 1;
}

double bval(const Tensor& t, int i) {
  return t.size() == 1 ? t.data()[0] : t.data()[i];
}

int bidx(const Tensor& t, int i) { return t.size() == 1 ? 0 : i; }

Tensor binary_op(const Tensor& a, const Tensor& b, const char* name,
                 double (*f)(double, double), double (*dfa)(double, double),
                 double (*dfb)(double, double)) {
  if (!broadcastable(a, b))
    throw InvalidArgument(std::string("op ") + name + ": shape mismatch");
  const Tensor& big = a.size() >= b.size() ? a : b;
  int n = big.size();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = f(bval(a, i), bval(b, i));
  Tape* tape = common_tape({&a, &b});
  auto back = [a, b, n, dfa, dfb](Tape& t, const std::vector<double>& g) {
    for (int i = 0; i < n; ++i) {
      double av = bval(a, i), bv = bval(b, i);
      accumulate(t, a, bidx(a, i), g[i] * dfa(av, bv));
      accumulate(t, b, bidx(b, i), g[i] * dfb(av, bv));
    }
  };
  return finish(tape, big.shape, std::move(out), back, name);
}

Tensor unary_op(const Tensor& x, const char* name, double (*f)(double),
                double (*df)(double, double) /* (x, y) -> dy/dx */) {
  int n = x.size();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = f(x.data()[i]);
  Tape* tape = common_tape({&x});
  std::vector<double> saved = out;
  auto back = [x, n, df, saved](Tape& t, const std::vector<double>& g) {
    for (int i = 0; i < n; ++i)
      accumulate(t, x, i, g[i] * df(x.data()[i], saved[i]));
  };
  return finish(tape, x.shape, std::move(out), back, name);
}

// Decomposes a shape around a reduction axis.
struct AxisSplit {
  int outer = 1, red = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, int axis) {
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw InvalidArgument("reduce: axis out of range");
  AxisSplit sp;
  for (int i = 0; i < axis; ++i) sp.outer *= s[i];
  sp.red = s[axis];
  for (int i = axis + 1; i < static_cast<int>(s.size()); ++i) sp.inner *= s[i];
  return sp;
}

Shape drop_axis(const Shape& s, int axis) {
  Shape out;
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (i != axis) out.push_back(s[i]);
  if (out.empty()) out.push_back(1);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "elementwise_mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor neg(const Tensor& x) {
  return unary_op(
      x, "neg", [](double v) { return -v; },
      [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& x, double c) {
  int n = x.size();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = c * x.data()[i];
  Tape* tape = common_tape({&x});
  auto back = [x, n, c](Tape& t, const std::vector<double>& g) {
    for (int i = 0; i < n; ++i) accumulate(t, x, i, c * g[i]);
  };
  return finish(tape, x.shape, std::move(out), back, "scale");
}

Tensor exp(const Tensor& x) {
  return unary_op(
      x, "exp", [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary_op(
      x, "log", [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
    throw InvalidArgument("matmul: incompatible shapes");
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  std::vector<double> out(static_cast<size_t>(m) * n);
  {
    CMapMat A(a.data().data(), m, k), B(b.data().data(), k, n);
    MapMat C(out.data(), m, n);
    C.noalias() = A * B;
  }
  Tape* tape = common_tape({&a, &b});
  auto back = [a, b, m, k, n](Tape& t, const std::vector<double>& g) {
    CMapMat A(a.data().data(), m, k), B(b.data().data(), k, n);
    CMapMat G(g.data(), m, n);
    if (a.node >= 0) {
      MapMat dA(t.grad_buf(a.node).data(), m, k);
      dA.noalias() += G * B.transpose();
    }
    if (b.node >= 0) {
      MapMat dB(t.grad_buf(b.node).data(), k, n);
      dB.noalias() += A.transpose() * G;
    }
  };
  return finish(tape, {m, n}, std::move(out), back, "matmul");
}

Tensor transpose(const Tensor& x) {
  if (x.shape.size() != 2) throw InvalidArgument("transpose: rank-2 only");
  const int m = x.shape[0], n = x.shape[1];
  std::vector<double> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j * m + i] = x.data()[i * n + j];
  Tape* tape = common_tape({&x});
  auto back = [x, m, n](Tape& t, const std::vector<double>& g) {
    if (x.node < 0) return;
    auto& gx = t.grad_buf(x.node);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) gx[i * n + j] += g[j * m + i];
  };
  return finish(tape, {n, m}, std::move(out), back, "transpose");
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  Tape* tape = common_tape({&a, &b});
  if (a.shape.size() != b.shape.size())
    throw InvalidArgument("concat: rank mismatch");
  if (a.shape.size() == 1) {
    if (axis != 0) throw InvalidArgument("concat: bad axis for rank 1");
    int na = a.size(), nb = b.size();
    std::vector<double> out;
    out.reserve(na + nb);
    out.insert(out.end(), a.data().begin(), a.data().end());
    out.insert(out.end(), b.data().begin(), b.data().end());
    auto back = [a, b, na, nb](Tape& t, const std::vector<double>& g) {
      for (int i = 0; i < na; ++i) accumulate(t, a, i, g[i]);
      for (int i = 0; i < nb; ++i) accumulate(t, b, i, g[na + i]);
    };
    return finish(tape, {na + nb}, std::move(out), back, "concat");
  }
  if (a.shape.size() != 2) throw InvalidArgument("concat: rank > 2 unsupported");
  const int ra = a.shape[0], ca = a.shape[1], rb = b.shape[0], cb = b.shape[1];
  if (axis == 0) {
    if (ca != cb) throw InvalidArgument("concat: column mismatch");
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.data().begin(), a.data().end());
    out.insert(out.end(), b.data().begin(), b.data().end());
    int na = a.size(), nb = b.size();
    auto back = [a, b, na, nb](Tape& t, const std::vector<double>& g) {
      for (int i = 0; i < na; ++i) accumulate(t, a, i, g[i]);
      for (int i = 0; i < nb; ++i) accumulate(t, b, i, g[na + i]);
    };
    return finish(tape, {ra + rb, ca}, std::move(out), back, "concat");
  }
  if (axis != 1) throw InvalidArgument("concat: bad axis");
  if (ra != rb) throw InvalidArgument("concat: row mismatch");
  std::vector<double> out(static_cast<size_t>(ra) * (ca + cb));
  for (int i = 0; i < ra; ++i) {
    for (int j = 0; j < ca; ++j) out[i * (ca + cb) + j] = a.data()[i * ca + j];
    for (int j = 0; j < cb; ++j)
      out[i * (ca + cb) + ca + j] = b.data()[i * cb + j];
  }
  auto back = [a, b, ra, ca, cb](Tape& t, const std::vector<double>& g) {
    for (int i = 0; i < ra; ++i) {
      for (int j = 0; j < ca; ++j)
        accumulate(t, a, i * ca + j, g[i * (ca + cb) + j]);
      for (int j = 0; j < cb; ++j)
        accumulate(t, b, i * cb + j, g[i * (ca + cb) + ca + j]);
    }
  };
  return finish(tape, {ra, ca + cb}, std::move(out), back, "concat");
}

Tensor softmax(const Tensor& x, int axis) {
  if (x.shape.size() != 2) throw InvalidArgument("softmax: rank-2 only");
  if (axis != 0 && axis != 1) throw InvalidArgument("softmax: bad axis");
  const int m = x.shape[0], n = x.shape[1];
  std::vector<double> out(x.size());
  const int lines = axis == 1 ? m : n;
  const int len = axis == 1 ? n : m;
  auto at = [axis, n](int line, int pos) {
    return axis == 1 ? line * n + pos : pos * n + line;
  };
  for (int l = 0; l < lines; ++l) {
    double mx = -1e300;
    for (int p = 0; p < len; ++p) mx = std::max(mx, x.data()[at(l, p)]);
    double sum = 0.0;
    for (int p = 0; p < len; ++p) {
      double e = std::exp(x.data()[at(l, p)] - mx);
      out[at(l, p)] = e;
      sum += e;
    }
    for (int p = 0; p < len; ++p) out[at(l, p)] /= sum;
  }
  Tape* tape = common_tape({&x});
  std::vector<double> y = out;
  auto back = [x, y, lines, len, at](Tape& t, const std::vector<double>& g) {
    if (x.node < 0) return;
    auto& gx = t.grad_buf(x.node);
    for (int l = 0; l < lines; ++l) {
      double dot = 0.0;
      for (int p = 0; p < len; ++p) dot += g[at(l, p)] * y[at(l, p)];
      for (int p = 0; p < len; ++p) {
        int i = at(l, p);
        gx[i] += y[i] * (g[i] - dot);
      }
    }
  };
  return finish(tape, x.shape, std::move(out), back, "softmax");
}

Tensor max_reduce(const Tensor& x, int axis) {
  AxisSplit sp = split_axis(x.shape, axis);
  Shape out_shape = drop_axis(x.shape, axis);
  std::vector<double> out(static_cast<size_t>(sp.outer) * sp.inner);
  std::vector<int> argmax(out.size());
  for (int o = 0; o < sp.outer; ++o)
    for (int in = 0; in < sp.inner; ++in) {
      double best = -1e300;
      int bi = 0;
      for (int r = 0; r < sp.red; ++r) {
        double v = x.data()[(o * sp.red + r) * sp.inner + in];
        if (v > best) {  // ties keep the lowest index
          best = v;
          bi = r;
        }
      }
      out[o * sp.inner + in] = best;
      argmax[o * sp.inner + in] = bi;
    }
  Tape* tape = common_tape({&x});
  auto back = [x, sp, argmax](Tape& t, const std::vector<double>& g) {
    for (int o = 0; o < sp.outer; ++o)
      for (int in = 0; in < sp.inner; ++in) {
        int r = argmax[o * sp.inner + in];
        accumulate(t, x, (o * sp.red + r) * sp.inner + in,
                   g[o * sp.inner + in]);
      }
  };
  return finish(tape, out_shape, std::move(out), back, "max_reduce");
}

Tensor mean_reduce(const Tensor& x, int axis) {
  AxisSplit sp = split_axis(x.shape, axis);
  Shape out_shape = drop_axis(x.shape, axis);
  std::vector<double> out(static_cast<size_t>(sp.outer) * sp.inner, 0.0);
  for (int o = 0; o < sp.outer; ++o)
    for (int r = 0; r < sp.red; ++r)
      for (int in = 0; in < sp.inner; ++in)
        out[o * sp.inner + in] +=
            x.data()[(o * sp.red + r) * sp.inner + in] / sp.red;
  Tape* tape = common_tape({&x});
  auto back = [x, sp](Tape& t, const std::vector<double>& g) {
    for (int o = 0; o < sp.outer; ++o)
      for (int r = 0; r < sp.red; ++r)
        for (int in = 0; in < sp.inner; ++in)
          accumulate(t, x, (o * sp.red + r) * sp.inner + in,
                     g[o * sp.inner + in] / sp.red);
  };
  return finish(tape, out_shape, std::move(out), back, "mean_reduce");
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tape* tape = common_tape({&x});
  int n = x.size();
  auto back = [x, n](Tape& t, const std::vector<double>& g) {
    for (int i = 0; i < n; ++i) accumulate(t, x, i, g[0]);
  };
  return finish(tape, {1}, {s}, back, "sum_all");
}

Tensor mean_all(const Tensor& x) {
  return scale(sum_all(x), 1.0 / x.size());
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size())
    throw InvalidArgument("reshape: size mismatch");
  int n = x.size();
  std::vector<double> out = x.data();
  Tape* tape = common_tape({&x});
  auto back = [x, n](Tape& t, const std::vector<double>& g) {
    for (int i = 0; i < n; ++i) accumulate(t, x, i, g[i]);
  };
  return finish(tape, std::move(shape), std::move(out), back, "reshape");
}

Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b) {
  if (x.shape.empty() || W.shape.size() != 2 || b.shape.size() != 1)
    throw InvalidArgument("linear: bad ranks");
  const int in = x.shape.back();
  const int out_dim = W.shape[0];
  if (W.shape[1] != in || b.shape[0] != out_dim)
    throw InvalidArgument("linear: weight shape mismatch");
  const int rows = x.size() / in;
  std::vector<double> out(static_cast<size_t>(rows) * out_dim);
  {
    CMapMat X(x.data().data(), rows, in), Wm(W.data().data(), out_dim, in);
    MapMat Y(out.data(), rows, out_dim);
    Y.noalias() = X * Wm.transpose();
    Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data().data(), out_dim);
  }
  Shape out_shape = x.shape;
  out_shape.back() = out_dim;
  Tape* tape = common_tape({&x, &W, &b});
  auto back = [x, W, b, rows, in, out_dim](Tape& t,
                                           const std::vector<double>& g) {
    CMapMat X(x.data().data(), rows, in), Wm(W.data().data(), out_dim, in);
    CMapMat G(g.data(), rows, out_dim);
    if (x.node >= 0) {
      MapMat dX(t.grad_buf(x.node).data(), rows, in);
      dX.noalias() += G * Wm;
    }
    if (W.node >= 0) {
      MapMat dW(t.grad_buf(W.node).data(), out_dim, in);
      dW.noalias() += G.transpose() * X;
    }
    if (b.node >= 0) {
      Eigen::Map<Eigen::RowVectorXd> db(t.grad_buf(b.node).data(), out_dim);
      db += G.colwise().sum();
    }
  };
  return finish(tape, out_shape, std::move(out), back, "linear");
}

namespace {

// Shared normalization backward: dx = s * (g - mean(g) - xhat * mean(g*xhat))
// applied over an index set of n strided elements.
struct NormGroup {
  std::vector<int> idx;
  double inv_std = 0.0;
};

Tensor norm_impl(const Tensor& x, std::vector<NormGroup> groups,
                 const char* name) {
  constexpr double eps = 1e-5;
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  for (auto& grp : groups) {
    const int n = static_cast<int>(grp.idx.size());
    double mean = 0.0;
    for (int i : grp.idx) mean += x.data()[i];
    mean /= n;
    double var = 0.0;
    for (int i : grp.idx) {
      double d = x.data()[i] - mean;
      var += d * d;
    }
    var /= n;
    grp.inv_std = 1.0 / std::sqrt(var + eps);
    for (int i : grp.idx) {
      xhat[i] = (x.data()[i] - mean) * grp.inv_std;
      out[i] = xhat[i];
    }
  }
  Tape* tape = common_tape({&x});
  auto back = [x, groups = std::move(groups), xhat](
                  Tape& t, const std::vector<double>& g) {
    if (x.node < 0) return;
    auto& gx = t.grad_buf(x.node);
    for (const auto& grp : groups) {
      const int n = static_cast<int>(grp.idx.size());
      double gmean = 0.0, gxmean = 0.0;
      for (int i : grp.idx) {
        gmean += g[i];
        gxmean += g[i] * xhat[i];
      }
      gmean /= n;
      gxmean /= n;
      for (int i : grp.idx)
        gx[i] += grp.inv_std * (g[i] - gmean - xhat[i] * gxmean);
    }
  };
  return finish(tape, x.shape, std::move(out), back, name);
}

}  // namespace

Tensor group_norm(const Tensor& x, int groups) {
  if (x.shape.empty()) throw InvalidArgument("group_norm: scalar input");
  const int channels = x.shape.back();
  if (groups <= 0 || channels % groups != 0)
    throw InvalidArgument("group_norm: groups must divide channel count");
  const int samples = x.size() / channels;
  const int cg = channels / groups;
  std::vector<NormGroup> gs;
  gs.reserve(static_cast<size_t>(samples) * groups);
  for (int s = 0; s < samples; ++s)
    for (int g = 0; g < groups; ++g) {
      NormGroup ng;
      ng.idx.reserve(cg);
      for (int c = 0; c < cg; ++c) ng.idx.push_back(s * channels + g * cg + c);
      gs.push_back(std::move(ng));
    }
  return norm_impl(x, std::move(gs), "group_norm");
}

Tensor instance_norm(const Tensor& x) {
  if (x.shape.size() != 2) throw InvalidArgument("instance_norm: rank-2 only");
  const int m = x.shape[0], c = x.shape[1];
  std::vector<NormGroup> gs(c);
  for (int j = 0; j < c; ++j) {
    gs[j].idx.reserve(m);
    for (int i = 0; i < m; ++i) gs[j].idx.push_back(i * c + j);
  }
  return norm_impl(x, std::move(gs), "instance_norm");
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
  if (x.shape.size() != 2) throw InvalidArgument("gather_rows: rank-2 only");
  const int n = x.shape[0], c = x.shape[1];
  const int m = static_cast<int>(idx.size());
  std::vector<double> out(static_cast<size_t>(m) * c);
  for (int i = 0; i < m; ++i) {
    if (idx[i] < 0 || idx[i] >= n)
      throw InvalidArgument("gather_rows: index out of range");
    for (int j = 0; j < c; ++j) out[i * c + j] = x.data()[idx[i] * c + j];
  }
  Tape* tape = common_tape({&x});
  auto back = [x, idx, m, c](Tape& t, const std::vector<double>& g) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < c; ++j)
        accumulate(t, x, idx[i] * c + j, g[i * c + j]);
  };
  return finish(tape, {m, c}, std::move(out), back, "gather_rows");
}

Tensor edge_features(const Tensor& F, const std::vector<std::vector<int>>& idx) {
  if (F.shape.size() != 2) throw InvalidArgument("edge_features: rank-2 only");
  const int m = F.shape[0], d = F.shape[1];
  if (static_cast<int>(idx.size()) != m)
    throw InvalidArgument("edge_features: index rows must match feature rows");
  const int k = idx.empty() ? 0 : static_cast<int>(idx[0].size());
  std::vector<double> out(static_cast<size_t>(m) * k * 2 * d);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(idx[i].size()) != k)
      throw InvalidArgument("edge_features: ragged index matrix");
    for (int j = 0; j < k; ++j) {
      int nb = idx[i][j];
      if (nb < 0 || nb >= m)
        throw InvalidArgument("edge_features: index out of range");
      double* row = out.data() + (static_cast<size_t>(i) * k + j) * 2 * d;
      for (int c = 0; c < d; ++c) {
        row[c] = F.data()[i * d + c];
        row[d + c] = F.data()[i * d + c] - F.data()[nb * d + c];
      }
    }
  }
  Tape* tape = common_tape({&F});
  auto back = [F, idx, m, k, d](Tape& t, const std::vector<double>& g) {
    if (F.node < 0) return;
    auto& gf = t.grad_buf(F.node);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < k; ++j) {
        int nb = idx[i][j];
        const double* row = g.data() + (static_cast<size_t>(i) * k + j) * 2 * d;
        for (int c = 0; c < d; ++c) {
          gf[i * d + c] += row[c] + row[d + c];
          gf[nb * d + c] -= row[d + c];
        }
      }
  };
  return finish(tape, {m, k, 2 * d}, std::move(out), back, "edge_features");
}

Tensor select_entries(const Tensor& S,
                      const std::vector<std::pair<int, int>>& ij) {
  if (S.shape.size() != 2) throw InvalidArgument("select_entries: rank-2 only");
  const int m = S.shape[0], n = S.shape[1];
  const int p = static_cast<int>(ij.size());
  std::vector<double> out(p);
  for (int q = 0; q < p; ++q) {
    auto [i, j] = ij[q];
    if (i < 0 || i >= m || j < 0 || j >= n)
      throw InvalidArgument("select_entries: index out of range");
    out[q] = S.data()[i * n + j];
  }
  Tape* tape = common_tape({&S});
  auto back = [S, ij, n, p](Tape& t, const std::vector<double>& g) {
    for (int q = 0; q < p; ++q)
      accumulate(t, S, ij[q].first * n + ij[q].second, g[q]);
  };
  return finish(tape, {p}, std::move(out), back, "select_entries");
}

Tensor outer(const Tensor& u, const Tensor& v) {
  if (u.shape.size() != 1 || v.shape.size() != 1)
    throw InvalidArgument("outer: rank-1 inputs required");
  const int m = u.size(), n = v.size();
  std::vector<double> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = u.data()[i] * v.data()[j];
  Tape* tape = common_tape({&u, &v});
  auto back = [u, v, m, n](Tape& t, const std::vector<double>& g) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        accumulate(t, u, i, g[i * n + j] * v.data()[j]);
        accumulate(t, v, j, g[i * n + j] * u.data()[i]);
      }
  };
  return finish(tape, {m, n}, std::move(out), back, "outer");
}

}  // namespace imatcher::ad
