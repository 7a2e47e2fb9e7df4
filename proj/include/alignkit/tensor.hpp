#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "alignkit/common.hpp"

namespace alignkit::neural {

// Dense 2-D tensor of doubles, row-major. Vectors are 1xC or Rx1.
struct Tensor {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double val);
  static Tensor randn(int r, int c, double stddev, DetRng& rng);
};

class Node;
using Var = std::shared_ptr<Node>;

// A graph node. The backward callback reads this node's grad and accumulates
// into the inputs' grads; it must not allocate new nodes.
class Node {
 public:
  Tensor val;
  Tensor grad;  // allocated lazily by ensure_grad()
  bool needs_grad = false;
  std::vector<Var> inputs;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.rows != val.rows || grad.cols != val.cols) grad = Tensor(val.rows, val.cols);
  }
};

// Gradient recording is on by default; inference paths disable it so graphs
// collapse to plain value computation.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

Var constant(Tensor t);
Var parameter(Tensor t);  // leaf with needs_grad = true

// C = op_a(A) * op_b(B), transposes selected by flags.
Var matmul(const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);
Var add(const Var& a, const Var& b);             // same shape
Var add_rowvec(const Var& a, const Var& bias);   // bias 1xC broadcast over rows
Var scale(const Var& a, double s);
Var mul(const Var& a, const Var& b);             // elementwise
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var gather_rows(const Var& a, std::vector<int> idx);
Var slice_cols(const Var& a, int begin, int end);

// im2col for a 1-D convolution over rows: output row r is the concatenation
// of rows r-k/2 .. r+k/2 (zero padded), so output is R x (kernel*C).
Var unfold_rows(const Var& a, int kernel);
Var concat_cols(const std::vector<Var>& parts);
Var dropout(const Var& a, double rate, DetRng& rng, bool train);

// Mean over rows of label-smoothed cross entropy computed from logits.
Var ce_mean_rows(const Var& logits, std::vector<int> targets, double smoothing);

// Scalar sum(W .* A) for a fixed weight tensor.
Var weighted_sum(const Var& a, Tensor w);

// Scalar sum of coeff * scalar-term.
Var affine_combine(const std::vector<std::pair<double, Var>>& terms);

void backward(const Var& root);  // root must be 1x1

// --- parameters and optimization ---------------------------------------------

class ParamStore {
 public:
  Var add(const std::string& name, Tensor init);
  const Var& get(const std::string& name) const;
  bool has(const std::string& name) const { return by_name_.count(name) > 0; }
  std::size_t count() const { return vars_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Var& var(std::size_t i) const { return vars_[i]; }
  void zero_grads();
  std::size_t total_scalars() const;

 private:
  std::vector<std::string> names_;
  std::vector<Var> vars_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

struct AdamConfig {
  double lr_peak = 7e-4;
  double lr_start = 1e-7;
  int warmup_steps = 200;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

// Adam with the warmup-then-inverse-sqrt schedule: linear from lr_start to
// lr_peak over warmup_steps, then lr_peak * sqrt(warmup / t).
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig cfg);

  double lr_for_step(long long t) const;

  // Applies one update using grad * grad_scale, then zeroes gradients.
  void step(ParamStore& params, double grad_scale = 1.0);

  long long step_count() const { return step_; }
  void set_step_count(long long s) { step_ = s; }
  Tensor& moment1(std::size_t i) { return m_[i]; }
  Tensor& moment2(std::size_t i) { return v_[i]; }
  const Tensor& moment1(std::size_t i) const { return m_[i]; }
  const Tensor& moment2(std::size_t i) const { return v_[i]; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  long long step_ = 0;
};

}  // namespace alignkit::neural
