#include "alignkit/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace alignkit::neural {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

namespace {

thread_local bool g_grad_enabled = true;

Map map(Tensor& t) { return Map(t.v.data(), t.rows, t.cols); }
CMap cmap(const Tensor& t) { return CMap(t.v.data(), t.rows, t.cols); }

Var make_node(Tensor val, std::vector<Var> inputs, std::function<void(Node&)> bw) {
  auto node = std::make_shared<Node>();
  node->val = std::move(val);
  bool needs = false;
  if (g_grad_enabled)
    for (const auto& in : inputs) needs = needs || in->needs_grad;
  node->needs_grad = needs;
  if (needs) {
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(bw);
  }
  return node;
}

}  // namespace

Tensor Tensor::full(int r, int c, double val) {
  Tensor t(r, c);
  std::fill(t.v.begin(), t.v.end(), val);
  return t;
}

Tensor Tensor::randn(int r, int c, double stddev, DetRng& rng) {
  Tensor t(r, c);
  for (auto& x : t.v) x = stddev * rng.normal();
  return t;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var constant(Tensor t) {
  auto node = std::make_shared<Node>();
  node->val = std::move(t);
  return node;
}

Var parameter(Tensor t) {
  auto node = std::make_shared<Node>();
  node->val = std::move(t);
  node->needs_grad = true;
  return node;
}

Var matmul(const Var& a, const Var& b, bool trans_a, bool trans_b) {
  const int ar = a->val.rows, ac = a->val.cols, br = b->val.rows, bc = b->val.cols;
  const int m = trans_a ? ac : ar;
  const int k = trans_a ? ar : ac;
  const int k2 = trans_b ? bc : br;
  const int n = trans_b ? br : bc;
  if (k != k2) throw NumericError("matmul shape mismatch");
  Tensor out(m, n);
  {
    auto A = cmap(a->val);
    auto B = cmap(b->val);
    auto C = map(out);
    if (!trans_a && !trans_b)
      C.noalias() = A * B;
    else if (trans_a && !trans_b)
      C.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b)
      C.noalias() = A * B.transpose();
    else
      C.noalias() = A.transpose() * B.transpose();
  }
  return make_node(std::move(out), {a, b}, [trans_a, trans_b](Node& self) {
    auto& A = self.inputs[0];
    auto& B = self.inputs[1];
    auto G = cmap(self.grad);
    if (A->needs_grad) {
      A->ensure_grad();
      auto dA = map(A->grad);
      auto Bm = cmap(B->val);
      if (!trans_a && !trans_b)
        dA.noalias() += G * Bm.transpose();
      else if (trans_a && !trans_b)
        dA.noalias() += Bm * G.transpose();
      else if (!trans_a && trans_b)
        dA.noalias() += G * Bm;
      else
        dA.noalias() += (G * Bm).transpose();
    }
    if (B->needs_grad) {
      B->ensure_grad();
      auto dB = map(B->grad);
      auto Am = cmap(A->val);
      if (!trans_a && !trans_b)
        dB.noalias() += Am.transpose() * G;
      else if (trans_a && !trans_b)
        dB.noalias() += Am * G;
      else if (!trans_a && trans_b)
        dB.noalias() += G.transpose() * Am;
      else
        dB.noalias() += (Am * G).transpose();
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (!a->val.same_shape(b->val)) throw NumericError("add shape mismatch");
  Tensor out = a->val;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += b->val.v[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      auto& in = self.inputs[k];
      if (!in->needs_grad) continue;
      in->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad.v[i] += self.grad.v[i];
    }
  });
}

Var add_rowvec(const Var& a, const Var& bias) {
  if (bias->val.rows != 1 || bias->val.cols != a->val.cols)
    throw NumericError("add_rowvec shape mismatch");
  Tensor out = a->val;
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) += bias->val.at(0, c);
  return make_node(std::move(out), {a, bias}, [](Node& self) {
    auto& a_in = self.inputs[0];
    auto& b_in = self.inputs[1];
    if (a_in->needs_grad) {
      a_in->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) a_in->grad.v[i] += self.grad.v[i];
    }
    if (b_in->needs_grad) {
      b_in->ensure_grad();
      for (int r = 0; r < self.grad.rows; ++r)
        for (int c = 0; c < self.grad.cols; ++c) b_in->grad.at(0, c) += self.grad.at(r, c);
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a->val;
  for (auto& x : out.v) x *= s;
  return make_node(std::move(out), {a}, [s](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad.v[i] += s * self.grad.v[i];
  });
}

Var mul(const Var& a, const Var& b) {
  if (!a->val.same_shape(b->val)) throw NumericError("mul shape mismatch");
  Tensor out = a->val;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= b->val.v[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    auto& a_in = self.inputs[0];
    auto& b_in = self.inputs[1];
    if (a_in->needs_grad) {
      a_in->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        a_in->grad.v[i] += self.grad.v[i] * b_in->val.v[i];
    }
    if (b_in->needs_grad) {
      b_in->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        b_in->grad.v[i] += self.grad.v[i] * a_in->val.v[i];
    }
  });
}

Var relu(const Var& a) {
  Tensor out = a->val;
  for (auto& x : out.v) x = x > 0.0 ? x : 0.0;
  return make_node(std::move(out), {a}, [](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (in->val.v[i] > 0.0) in->grad.v[i] += self.grad.v[i];
  });
}

Var sigmoid(const Var& a) {
  Tensor out = a->val;
  for (auto& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  return make_node(std::move(out), {a}, [](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.val.v[i];
      in->grad.v[i] += self.grad.v[i] * y * (1.0 - y);
    }
  });
}

Var softplus(const Var& a) {
  Tensor out = a->val;
  for (auto& x : out.v) {
    if (x > 30.0)
      ;  // softplus(x) ~ x
    else if (x < -30.0)
      x = std::exp(x);
    else
      x = std::log1p(std::exp(x));
  }
  return make_node(std::move(out), {a}, [](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double x = in->val.v[i];
      in->grad.v[i] += self.grad.v[i] / (1.0 + std::exp(-x));
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const int R = x->val.rows, C = x->val.cols;
  if (gain->val.cols != C || bias->val.cols != C || gain->val.rows != 1 || bias->val.rows != 1)
    throw NumericError("layer_norm parameter shape mismatch");
  Tensor out(R, C);
  Tensor xhat(R, C);
  std::vector<double> inv_std(R);
  for (int r = 0; r < R; ++r) {
    double mean = 0.0;
    for (int c = 0; c < C; ++c) mean += x->val.at(r, c);
    mean /= C;
    double var = 0.0;
    for (int c = 0; c < C; ++c) {
      const double d = x->val.at(r, c) - mean;
      var += d * d;
    }
    var /= C;
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[r] = istd;
    for (int c = 0; c < C; ++c) {
      const double xh = (x->val.at(r, c) - mean) * istd;
      xhat.at(r, c) = xh;
      out.at(r, c) = gain->val.at(0, c) * xh + bias->val.at(0, c);
    }
  }
  return make_node(std::move(out), {x, gain, bias},
                   [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                     auto& x_in = self.inputs[0];
                     auto& g_in = self.inputs[1];
                     auto& b_in = self.inputs[2];
                     const int R = self.val.rows, C = self.val.cols;
                     if (g_in->needs_grad) {
                       g_in->ensure_grad();
                       for (int r = 0; r < R; ++r)
                         for (int c = 0; c < C; ++c)
                           g_in->grad.at(0, c) += self.grad.at(r, c) * xhat.at(r, c);
                     }
                     if (b_in->needs_grad) {
                       b_in->ensure_grad();
                       for (int r = 0; r < R; ++r)
                         for (int c = 0; c < C; ++c) b_in->grad.at(0, c) += self.grad.at(r, c);
                     }
                     if (x_in->needs_grad) {
                       x_in->ensure_grad();
                       for (int r = 0; r < R; ++r) {
                         double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                         for (int c = 0; c < C; ++c) {
                           const double dxh = self.grad.at(r, c) * g_in->val.at(0, c);
                           sum_dxh += dxh;
                           sum_dxh_xh += dxh * xhat.at(r, c);
                         }
                         for (int c = 0; c < C; ++c) {
                           const double dxh = self.grad.at(r, c) * g_in->val.at(0, c);
                           x_in->grad.at(r, c) += inv_std[r] * (dxh - sum_dxh / C -
                                                                xhat.at(r, c) * sum_dxh_xh / C);
                         }
                       }
                     }
                   });
}

namespace {

void softmax_row_inplace(double* row, int n) {
  double mx = row[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, row[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    row[i] = std::exp(row[i] - mx);
    sum += row[i];
  }
  for (int i = 0; i < n; ++i) row[i] /= sum;
}

}  // namespace

Var softmax_rows(const Var& a) {
  Tensor out = a->val;
  for (int r = 0; r < out.rows; ++r) softmax_row_inplace(&out.v[static_cast<std::size_t>(r) * out.cols], out.cols);
  return make_node(std::move(out), {a}, [](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    const int R = self.val.rows, C = self.val.cols;
    for (int r = 0; r < R; ++r) {
      double dot = 0.0;
      for (int c = 0; c < C; ++c) dot += self.grad.at(r, c) * self.val.at(r, c);
      for (int c = 0; c < C; ++c)
        in->grad.at(r, c) += self.val.at(r, c) * (self.grad.at(r, c) - dot);
    }
  });
}

Var log_softmax_rows(const Var& a) {
  const int R = a->val.rows, C = a->val.cols;
  Tensor out(R, C);
  for (int r = 0; r < R; ++r) {
    double mx = a->val.at(r, 0);
    for (int c = 1; c < C; ++c) mx = std::max(mx, a->val.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < C; ++c) sum += std::exp(a->val.at(r, c) - mx);
    const double lse = mx + std::log(sum);
    for (int c = 0; c < C; ++c) out.at(r, c) = a->val.at(r, c) - lse;
  }
  return make_node(std::move(out), {a}, [](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    const int R = self.val.rows, C = self.val.cols;
    for (int r = 0; r < R; ++r) {
      double gsum = 0.0;
      for (int c = 0; c < C; ++c) gsum += self.grad.at(r, c);
      for (int c = 0; c < C; ++c)
        in->grad.at(r, c) += self.grad.at(r, c) - std::exp(self.val.at(r, c)) * gsum;
    }
  });
}

Var gather_rows(const Var& a, std::vector<int> idx) {
  const int C = a->val.cols;
  Tensor out(static_cast<int>(idx.size()), C);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= a->val.rows) throw NumericError("gather_rows index out of range");
    for (int c = 0; c < C; ++c) out.at(static_cast<int>(i), c) = a->val.at(idx[i], c);
  }
  return make_node(std::move(out), {a}, [idx = std::move(idx)](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    const int C = self.val.cols;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int c = 0; c < C; ++c)
        in->grad.at(idx[i], c) += self.grad.at(static_cast<int>(i), c);
  });
}

Var slice_cols(const Var& a, int begin, int end) {
  if (begin < 0 || end > a->val.cols || begin >= end) throw NumericError("bad column slice");
  Tensor out(a->val.rows, end - begin);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) = a->val.at(r, begin + c);
  return make_node(std::move(out), {a}, [begin](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    for (int r = 0; r < self.grad.rows; ++r)
      for (int c = 0; c < self.grad.cols; ++c) in->grad.at(r, begin + c) += self.grad.at(r, c);
  });
}

Var unfold_rows(const Var& a, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw NumericError("unfold_rows needs an odd kernel");
  const int R = a->val.rows, C = a->val.cols, half = kernel / 2;
  Tensor out(R, kernel * C);
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < kernel; ++t) {
      const int src = r + t - half;
      if (src < 0 || src >= R) continue;
      for (int c = 0; c < C; ++c) out.at(r, t * C + c) = a->val.at(src, c);
    }
  return make_node(std::move(out), {a}, [kernel, half](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    const int R = in->val.rows, C = in->val.cols;
    for (int r = 0; r < R; ++r)
      for (int t = 0; t < kernel; ++t) {
        const int src = r + t - half;
        if (src < 0 || src >= R) continue;
        for (int c = 0; c < C; ++c) in->grad.at(src, c) += self.grad.at(r, t * C + c);
      }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw NumericError("concat_cols of nothing");
  const int R = parts[0]->val.rows;
  int total = 0;
  for (const auto& p : parts) {
    if (p->val.rows != R) throw NumericError("concat_cols row mismatch");
    total += p->val.cols;
  }
  Tensor out(R, total);
  int off = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < p->val.cols; ++c) out.at(r, off + c) = p->val.at(r, c);
    off += p->val.cols;
  }
  return make_node(std::move(out), parts, [](Node& self) {
    int off = 0;
    for (auto& in : self.inputs) {
      if (in->needs_grad) {
        in->ensure_grad();
        for (int r = 0; r < in->val.rows; ++r)
          for (int c = 0; c < in->val.cols; ++c) in->grad.at(r, c) += self.grad.at(r, off + c);
      }
      off += in->val.cols;
    }
  });
}

Var dropout(const Var& a, double rate, DetRng& rng, bool train) {
  if (!train || rate <= 0.0) return a;
  if (rate >= 1.0) throw NumericError("dropout rate must be < 1");
  const double keep = 1.0 - rate;
  Tensor mask(a->val.rows, a->val.cols);
  for (auto& m : mask.v) m = rng.uniform_real() < rate ? 0.0 : 1.0 / keep;
  Tensor out = a->val;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= mask.v[i];
  return make_node(std::move(out), {a}, [mask = std::move(mask)](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      in->grad.v[i] += self.grad.v[i] * mask.v[i];
  });
}

Var ce_mean_rows(const Var& logits, std::vector<int> targets, double smoothing) {
  const int R = logits->val.rows, K = logits->val.cols;
  if (static_cast<int>(targets.size()) != R) throw NumericError("target count mismatch");
  for (int t : targets)
    if (t < 0 || t >= K) throw NumericError("target class out of range");
  const double off = smoothing / K;
  const double on = 1.0 - smoothing + off;
  double total = 0.0;
  for (int r = 0; r < R; ++r) {
    double mx = logits->val.at(r, 0);
    for (int c = 1; c < K; ++c) mx = std::max(mx, logits->val.at(r, c));
    double sum = 0.0, zsum = 0.0;
    for (int c = 0; c < K; ++c) {
      sum += std::exp(logits->val.at(r, c) - mx);
      zsum += logits->val.at(r, c);
    }
    const double lse = mx + std::log(sum);
    total += lse - (on - off) * logits->val.at(r, targets[r]) - off * zsum;
  }
  Tensor out(1, 1);
  out.at(0, 0) = total / R;
  return make_node(std::move(out), {logits},
                   [targets = std::move(targets), on, off](Node& self) {
                     auto& in = self.inputs[0];
                     if (!in->needs_grad) return;
                     in->ensure_grad();
                     const int R = in->val.rows, K = in->val.cols;
                     const double g = self.grad.at(0, 0) / R;
                     for (int r = 0; r < R; ++r) {
                       double mx = in->val.at(r, 0);
                       for (int c = 1; c < K; ++c) mx = std::max(mx, in->val.at(r, c));
                       double sum = 0.0;
                       for (int c = 0; c < K; ++c) sum += std::exp(in->val.at(r, c) - mx);
                       for (int c = 0; c < K; ++c) {
                         const double p = std::exp(in->val.at(r, c) - mx) / sum;
                         const double q = c == targets[r] ? on : off;
                         in->grad.at(r, c) += g * (p - q);
                       }
                     }
                   });
}

Var weighted_sum(const Var& a, Tensor w) {
  if (!a->val.same_shape(w)) throw NumericError("weighted_sum shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.v[i] != 0.0) total += w.v[i] * a->val.v[i];
  }
  Tensor out(1, 1);
  out.at(0, 0) = total;
  return make_node(std::move(out), {a}, [w = std::move(w)](Node& self) {
    auto& in = self.inputs[0];
    if (!in->needs_grad) return;
    in->ensure_grad();
    const double g = self.grad.at(0, 0);
    for (std::size_t i = 0; i < w.size(); ++i) in->grad.v[i] += g * w.v[i];
  });
}

Var affine_combine(const std::vector<std::pair<double, Var>>& terms) {
  if (terms.empty()) throw NumericError("affine_combine of nothing");
  double total = 0.0;
  std::vector<Var> inputs;
  std::vector<double> coeffs;
  for (const auto& [w, t] : terms) {
    if (t->val.rows != 1 || t->val.cols != 1) throw NumericError("affine_combine expects scalars");
    total += w * t->val.at(0, 0);
    inputs.push_back(t);
    coeffs.push_back(w);
  }
  Tensor out(1, 1);
  out.at(0, 0) = total;
  return make_node(std::move(out), std::move(inputs), [coeffs = std::move(coeffs)](Node& self) {
    const double g = self.grad.at(0, 0);
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      auto& in = self.inputs[i];
      if (!in->needs_grad) continue;
      in->ensure_grad();
      in->grad.at(0, 0) += g * coeffs[i];
    }
  });
}

void backward(const Var& root) {
  if (root->val.rows != 1 || root->val.cols != 1)
    throw NumericError("backward root must be a scalar");
  // iterative post-order DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->needs_grad && !visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad.at(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

Var ParamStore::add(const std::string& name, Tensor init) {
  if (by_name_.count(name)) throw Error("duplicate parameter: " + name);
  Var p = parameter(std::move(init));
  by_name_[name] = vars_.size();
  names_.push_back(name);
  vars_.push_back(p);
  return p;
}

const Var& ParamStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw Error("unknown parameter: " + name);
  return vars_[it->second];
}

void ParamStore::zero_grads() {
  for (auto& p : vars_) {
    p->ensure_grad();
    std::fill(p->grad.v.begin(), p->grad.v.end(), 0.0);
  }
}

std::size_t ParamStore::total_scalars() const {
  std::size_t n = 0;
  for (const auto& p : vars_) n += p->val.size();
  return n;
}

Adam::Adam(const ParamStore& params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.count());
  v_.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& t = params.var(i)->val;
    m_.emplace_back(t.rows, t.cols);
    v_.emplace_back(t.rows, t.cols);
  }
}

double Adam::lr_for_step(long long t) const {
  if (cfg_.warmup_steps <= 0) return cfg_.lr_peak;
  if (t <= cfg_.warmup_steps)
    return cfg_.lr_start +
           (cfg_.lr_peak - cfg_.lr_start) * static_cast<double>(t) / cfg_.warmup_steps;
  return cfg_.lr_peak * std::sqrt(static_cast<double>(cfg_.warmup_steps) / static_cast<double>(t));
}

void Adam::step(ParamStore& params, double grad_scale) {
  ++step_;
  const double lr = lr_for_step(step_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto& p = *params.var(i);
    p.ensure_grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.val.size(); ++k) {
      const double g = p.grad.v[k] * grad_scale;
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient in parameter " + params.name(i));
      m.v[k] = cfg_.beta1 * m.v[k] + (1.0 - cfg_.beta1) * g;
      v.v[k] = cfg_.beta2 * v.v[k] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m.v[k] / bc1;
      const double vhat = v.v[k] / bc2;
      p.val.v[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    std::fill(p.grad.v.begin(), p.grad.v.end(), 0.0);
  }
}

}  // namespace alignkit::neural
