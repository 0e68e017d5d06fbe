#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace imatcher::ad {

using Shape = std::vector<int>;

int shape_size(const Shape& s);

enum class Precision { f32, f64 };

class Tape;

/// Handle to a dense value, optionally tracked on a tape. Constants have
/// node == -1 and receive no gradient.
struct Tensor {
  Shape shape;
  std::shared_ptr<std::vector<double>> values;
  Tape* tape = nullptr;
  int node = -1;

  int size() const { return shape_size(shape); }
  const std::vector<double>& data() const { return *values; }
  std::vector<double>& data() { return *values; }
  double scalar() const;

  static Tensor constant(Shape shape, std::vector<double> data);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
};

/// Reverse-mode tape. Single-threaded; nodes are recorded in topological
/// (creation) order and backward visits each exactly once, in reverse.
class Tape {
 public:
  explicit Tape(Precision p = Precision::f64) : precision_(p) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Precision precision() const { return precision_; }

  /// Registers a parameter/input tensor.
  Tensor leaf(Shape shape, std::vector<double> data);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Loss must be a tracked scalar.
  void backward(const Tensor& loss);

  /// Gradient of the last backward() w.r.t. t (zeros if unreached).
  std::vector<double> grad(const Tensor& t) const;

  // -- used by op implementations --
  using BackwardFn =
      std::function<void(Tape&, const std::vector<double>& out_grad)>;
  int push(int out_size, BackwardFn fn);
  std::vector<double>& grad_buf(int node);
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    int size = 0;
    BackwardFn back;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  Precision precision_;
};

// ---- forward ops (all record backward rules when inputs are tracked) ----

Tensor add(const Tensor& a, const Tensor& b);          // same shape or scalar broadcast
Tensor sub(const Tensor& a, const Tensor& b);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor matmul(const Tensor& a, const Tensor& b);       // [m,k] x [k,n]
Tensor transpose(const Tensor& x);                     // rank 2
Tensor concat(const Tensor& a, const Tensor& b, int axis);  // rank 1 or 2
Tensor softmax(const Tensor& x, int axis);             // rank 2, axis 0 or 1
Tensor max_reduce(const Tensor& x, int axis);          // rank <= 3
Tensor mean_reduce(const Tensor& x, int axis);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

/// y = x * Wᵀ + b with W [out,in], b [out]; x rank 2 or 3 (last axis = in).
Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b);

/// Per-sample group normalization over the last axis (leading axes flattened
/// into samples); eps 1e-5, no affine parameters.
Tensor group_norm(const Tensor& x, int groups);

/// Per-channel normalization over the rows of a [m,C] tensor (batch-of-one
/// stand-in for batch norm); eps 1e-5, no affine parameters.
Tensor instance_norm(const Tensor& x);

/// out[i] = x[idx[i]] for rank-2 x; backward scatter-adds into x rows.
Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);

/// EdgeConv input tensor: out[i,j] = [f_i, f_i - f_{idx[i][j]}], shape [M,k,2d].
Tensor edge_features(const Tensor& F, const std::vector<std::vector<int>>& idx);

/// Picks S[i,j] for each (i, j) pair into a flat vector.
Tensor select_entries(const Tensor& S, const std::vector<std::pair<int, int>>& ij);

/// Outer product of two vectors: out[i,j] = u[i] * v[j].
Tensor outer(const Tensor& u, const Tensor& v);

}  // namespace imatcher::ad
