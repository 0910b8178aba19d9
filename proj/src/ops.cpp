#include "spgseg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spgseg::nn {

namespace {

using NodePtr = std::shared_ptr<TensorNode>;

void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape();
}

// wires parents + backward hook when recording is on and any input needs grad
Tensor make_op(std::vector<std::size_t> shape, std::vector<double> values,
               std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> backward_fn) {
  bool needs = false;
  if (grad_enabled())
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  auto node = detail::make_node(std::move(shape), std::move(values), needs);
  if (needs) {
    node->parents.reserve(inputs.size());
    for (auto& t : inputs) node->parents.push_back(t.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(node);
}

void accumulate(const NodePtr& parent, const std::vector<double>& delta) {
  if (!parent->requires_grad) return;
  parent->ensure_grad();
  for (std::size_t i = 0; i < delta.size(); ++i) parent->grad[i] += delta[i];
}

// (outer, axis_len, inner) decomposition for axis-wise loops
struct AxisSplit {
  std::size_t outer = 1, axis = 1, inner = 1;
};

AxisSplit split_axis(const std::vector<std::size_t>& shape, int axis) {
  check(axis >= 0 && axis < static_cast<int>(shape.size()),
        "axis out of range");
  AxisSplit s;
  for (int d = 0; d < axis; ++d) s.outer *= shape[d];
  s.axis = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check(same_shape(a, b), "add: shape mismatch");
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
    for (int p = 0; p < 2; ++p) {
      auto& parent = n.parents[p];
      if (!parent->requires_grad) continue;
      parent->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        parent->grad[i] += n.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check(same_shape(a, b), "sub: shape mismatch");
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
    auto& pa = n.parents[0];
    auto& pb = n.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check(same_shape(a, b), "mul: shape mismatch");
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
    auto& pa = n.parents[0];
    auto& pb = n.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        pa->grad[i] += n.grad[i] * pb->values[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        pb->grad[i] += n.grad[i] * pa->values[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  return make_op(a.shape(), std::move(out), {a}, [s](TensorNode& n) {
    auto& pa = n.parents[0];
    pa->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      pa->grad[i] += n.grad[i] * s;
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0 ? xv[i] : 0.0;
  return make_op(x.shape(), std::move(out), {x}, [](TensorNode& n) {
    auto& px = n.parents[0];
    px->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (px->values[i] > 0) px->grad[i] += n.grad[i];
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = xv[i] >= 0 ? 1.0 / (1.0 + std::exp(-xv[i]))
                        : std::exp(xv[i]) / (1.0 + std::exp(xv[i]));
  }
  return make_op(x.shape(), std::move(out), {x}, [](TensorNode& n) {
    auto& px = n.parents[0];
    px->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double s = n.values[i];
      px->grad[i] += n.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor tanh_op(const Tensor& x) {
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  return make_op(x.shape(), std::move(out), {x}, [](TensorNode& n) {
    auto& px = n.parents[0];
    px->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double t = n.values[i];
      px->grad[i] += n.grad[i] * (1.0 - t * t);
    }
  });
}

Tensor matmul(const Tensor& x, const Tensor& w) {
  check(x.rank() == 2 && w.rank() == 2, "matmul: rank-2 tensors required");
  const std::size_t R = x.shape()[0], K = x.shape()[1];
  check(w.shape()[0] == K, "matmul: inner dimensions differ");
  const std::size_t C = w.shape()[1];
  std::vector<double> out(R * C, 0.0);
  const double* xv = x.values().data();
  const double* wv = w.values().data();
  for (std::size_t r = 0; r < R; ++r) {
    double* orow = out.data() + r * C;
    const double* xrow = xv + r * K;
    for (std::size_t k = 0; k < K; ++k) {
      const double xk = xrow[k];
      const double* wrow = wv + k * C;
      for (std::size_t c = 0; c < C; ++c) orow[c] += xk * wrow[c];
    }
  }
  return make_op({R, C}, std::move(out), {x, w}, [R, K, C](TensorNode& n) {
    auto& px = n.parents[0];
    auto& pw = n.parents[1];
    const double* g = n.grad.data();
    if (px->requires_grad) {
      px->ensure_grad();
      const double* wv = pw->values.data();
      for (std::size_t r = 0; r < R; ++r) {
        double* dx = px->grad.data() + r * K;
        const double* grow = g + r * C;
        for (std::size_t k = 0; k < K; ++k) {
          const double* wrow = wv + k * C;
          double acc = 0.0;
          for (std::size_t c = 0; c < C; ++c) acc += grow[c] * wrow[c];
          dx[k] += acc;
        }
      }
    }
    if (pw->requires_grad) {
      pw->ensure_grad();
      const double* xv = px->values.data();
      for (std::size_t r = 0; r < R; ++r) {
        const double* xrow = xv + r * K;
        const double* grow = g + r * C;
        for (std::size_t k = 0; k < K; ++k) {
          double* dwrow = pw->grad.data() + k * C;
          const double xk = xrow[k];
          for (std::size_t c = 0; c < C; ++c) dwrow[c] += xk * grow[c];
        }
      }
    }
  });
}

Tensor add_bias_rows(const Tensor& x, const Tensor& bias) {
  check(x.rank() == 2 && bias.rank() == 1, "add_bias_rows: bad ranks");
  const std::size_t R = x.shape()[0], C = x.shape()[1];
  check(bias.shape()[0] == C, "add_bias_rows: bias width mismatch");
  std::vector<double> out(x.values());
  const auto& bv = bias.values();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out[r * C + c] += bv[c];
  return make_op({R, C}, std::move(out), {x, bias}, [R, C](TensorNode& n) {
    auto& px = n.parents[0];
    auto& pb = n.parents[1];
    if (px->requires_grad) {
      px->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        px->grad[i] += n.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c)
          pb->grad[c] += n.grad[r * C + c];
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_bias_rows(matmul(x, w), b);
}

Tensor softmax(const Tensor& x, int axis) {
  check(x.rank() >= 1 && x.rank() <= 3, "softmax: rank must be 1..3");
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<double> out(x.size());
  const auto& xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.axis * s.inner + in;
      double mx = xv[base];
      for (std::size_t a = 1; a < s.axis; ++a)
        mx = std::max(mx, xv[base + a * s.inner]);
      double denom = 0.0;
      for (std::size_t a = 0; a < s.axis; ++a) {
        const double e = std::exp(xv[base + a * s.inner] - mx);
        out[base + a * s.inner] = e;
        denom += e;
      }
      for (std::size_t a = 0; a < s.axis; ++a) out[base + a * s.inner] /= denom;
    }
  }
  return make_op(x.shape(), std::move(out), {x}, [s](TensorNode& n) {
    auto& px = n.parents[0];
    px->ensure_grad();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.axis * s.inner + in;
        double gy = 0.0;
        for (std::size_t a = 0; a < s.axis; ++a) {
          const std::size_t i = base + a * s.inner;
          gy += n.grad[i] * n.values[i];
        }
        for (std::size_t a = 0; a < s.axis; ++a) {
          const std::size_t i = base + a * s.inner;
          px->grad[i] += n.values[i] * (n.grad[i] - gy);
        }
      }
    }
  });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  check(logits.rank() == 2, "cross_entropy: logits must be [B,c]");
  const std::size_t B = logits.shape()[0], C = logits.shape()[1];
  check(targets.size() == B, "cross_entropy: target count mismatch");
  for (int t : targets)
    check(t >= 0 && t < static_cast<int>(C), "cross_entropy: target out of range");

  const auto& xv = logits.values();
  std::vector<double> probs(B * C);
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double* row = xv.data() + b * C;
    double mx = row[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      probs[b * C + c] = std::exp(row[c] - mx);
      denom += probs[b * C + c];
    }
    for (std::size_t c = 0; c < C; ++c) probs[b * C + c] /= denom;
    loss += std::log(denom) + mx - row[targets[b]];
  }
  loss /= static_cast<double>(B);

  return make_op({1}, {loss}, {logits},
                 [B, C, probs = std::move(probs), targets](TensorNode& n) {
                   auto& pl = n.parents[0];
                   pl->ensure_grad();
                   const double g = n.grad[0] / static_cast<double>(B);
                   for (std::size_t b = 0; b < B; ++b) {
                     for (std::size_t c = 0; c < C; ++c) {
                       double d = probs[b * C + c];
                       if (static_cast<int>(c) == targets[b]) d -= 1.0;
                       pl->grad[b * C + c] += g * d;
                     }
                   }
                 });
}

Tensor reduce_sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_op({1}, {s}, {x}, [](TensorNode& n) {
    auto& px = n.parents[0];
    px->ensure_grad();
    for (std::size_t i = 0; i < px->grad.size(); ++i)
      px->grad[i] += n.grad[0];
  });
}

Tensor reduce_mean(const Tensor& x) {
  check(x.size() > 0, "reduce_mean: empty tensor");
  double s = 0.0;
  for (double v : x.values()) s += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  return make_op({1}, {s * inv}, {x}, [inv](TensorNode& n) {
    auto& px = n.parents[0];
    px->ensure_grad();
    for (std::size_t i = 0; i < px->grad.size(); ++i)
      px->grad[i] += n.grad[0] * inv;
  });
}

Tensor reduce_sum_axis(const Tensor& x, int axis) {
  check(x.rank() >= 2, "reduce_sum_axis: rank must be >= 2");
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<std::size_t> out_shape;
  for (int d = 0; d < static_cast<int>(x.rank()); ++d)
    if (d != axis) out_shape.push_back(x.shape()[d]);
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto& xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t a = 0; a < s.axis; ++a)
      for (std::size_t in = 0; in < s.inner; ++in)
        out[o * s.inner + in] += xv[(o * s.axis + a) * s.inner + in];
  return make_op(std::move(out_shape), std::move(out), {x}, [s](TensorNode& n) {
    auto& px = n.parents[0];
    px->ensure_grad();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t a = 0; a < s.axis; ++a)
        for (std::size_t in = 0; in < s.inner; ++in)
          px->grad[(o * s.axis + a) * s.inner + in] += n.grad[o * s.inner + in];
  });
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape) {
  std::size_t p = 1;
  for (std::size_t d : shape) p *= d;
  check(p == x.size(), "reshape: element count mismatch");
  std::vector<double> out(x.values());
  return make_op(std::move(shape), std::move(out), {x}, [](TensorNode& n) {
    accumulate(n.parents[0], n.grad);
  });
}

Tensor gather_rows(const Tensor& x, std::vector<std::size_t> idx) {
  check(x.rank() == 2, "gather_rows: rank-2 tensor required");
  const std::size_t C = x.shape()[1];
  for (std::size_t r : idx)
    check(r < x.shape()[0], "gather_rows: row index out of range");
  std::vector<double> out(idx.size() * C);
  const auto& xv = x.values();
  for (std::size_t k = 0; k < idx.size(); ++k)
    std::copy_n(xv.data() + idx[k] * C, C, out.data() + k * C);
  const std::size_t rows = idx.size();
  return make_op({rows, C}, std::move(out), {x},
                 [C, idx = std::move(idx)](TensorNode& n) {
                   auto& px = n.parents[0];
                   px->ensure_grad();
                   for (std::size_t k = 0; k < idx.size(); ++k)
                     for (std::size_t c = 0; c < C; ++c)
                       px->grad[idx[k] * C + c] += n.grad[k * C + c];
                 });
}

Tensor scatter_sum_rows(const Tensor& x, std::vector<std::size_t> dst,
                        std::size_t out_rows) {
  check(x.rank() == 2, "scatter_sum_rows: rank-2 tensor required");
  check(dst.size() == x.shape()[0], "scatter_sum_rows: index count mismatch");
  const std::size_t C = x.shape()[1];
  for (std::size_t r : dst)
    check(r < out_rows, "scatter_sum_rows: destination out of range");
  std::vector<double> out(out_rows * C, 0.0);
  const auto& xv = x.values();
  for (std::size_t k = 0; k < dst.size(); ++k)
    for (std::size_t c = 0; c < C; ++c)
      out[dst[k] * C + c] += xv[k * C + c];
  return make_op({out_rows, C}, std::move(out), {x},
                 [C, dst = std::move(dst)](TensorNode& n) {
                   auto& px = n.parents[0];
                   px->ensure_grad();
                   for (std::size_t k = 0; k < dst.size(); ++k)
                     for (std::size_t c = 0; c < C; ++c)
                       px->grad[k * C + c] += n.grad[dst[k] * C + c];
                 });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && b.rank() == 2, "concat_cols: rank-2 tensors required");
  check(a.shape()[0] == b.shape()[0], "concat_cols: row count mismatch");
  const std::size_t R = a.shape()[0], Ca = a.shape()[1], Cb = b.shape()[1];
  std::vector<double> out(R * (Ca + Cb));
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t r = 0; r < R; ++r) {
    std::copy_n(av.data() + r * Ca, Ca, out.data() + r * (Ca + Cb));
    std::copy_n(bv.data() + r * Cb, Cb, out.data() + r * (Ca + Cb) + Ca);
  }
  return make_op({R, Ca + Cb}, std::move(out), {a, b},
                 [R, Ca, Cb](TensorNode& n) {
                   auto& pa = n.parents[0];
                   auto& pb = n.parents[1];
                   const std::size_t C = Ca + Cb;
                   if (pa->requires_grad) {
                     pa->ensure_grad();
                     for (std::size_t r = 0; r < R; ++r)
                       for (std::size_t c = 0; c < Ca; ++c)
                         pa->grad[r * Ca + c] += n.grad[r * C + c];
                   }
                   if (pb->requires_grad) {
                     pb->ensure_grad();
                     for (std::size_t r = 0; r < R; ++r)
                       for (std::size_t c = 0; c < Cb; ++c)
                         pb->grad[r * Cb + c] += n.grad[r * C + Ca + c];
                   }
                 });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  check(!parts.empty(), "concat_rows: no parts");
  const std::size_t C = parts[0].shape()[1];
  std::size_t R = 0;
  for (const auto& p : parts) {
    check(p.rank() == 2 && p.shape()[1] == C, "concat_rows: column mismatch");
    R += p.shape()[0];
  }
  std::vector<double> out;
  out.reserve(R * C);
  std::vector<std::size_t> row_counts;
  for (const auto& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
    row_counts.push_back(p.shape()[0]);
  }
  return make_op({R, C}, std::move(out), parts,
                 [C, row_counts = std::move(row_counts)](TensorNode& n) {
                   std::size_t offset = 0;
                   for (std::size_t p = 0; p < n.parents.size(); ++p) {
                     auto& parent = n.parents[p];
                     const std::size_t count = row_counts[p] * C;
                     if (parent->requires_grad) {
                       parent->ensure_grad();
                       for (std::size_t i = 0; i < count; ++i)
                         parent->grad[i] += n.grad[offset + i];
                     }
                     offset += count;
                   }
                 });
}

Tensor segment_max_rows(const Tensor& x, std::vector<std::size_t> offsets) {
  check(x.rank() == 2, "segment_max_rows: rank-2 tensor required");
  check(offsets.size() >= 2, "segment_max_rows: need at least one segment");
  check(offsets.front() == 0 && offsets.back() == x.shape()[0],
        "segment_max_rows: offsets must cover all rows");
  const std::size_t N = offsets.size() - 1, C = x.shape()[1];
  std::vector<double> out(N * C);
  std::vector<std::size_t> argmax(N * C);
  const auto& xv = x.values();
  for (std::size_t s = 0; s < N; ++s) {
    check(offsets[s] < offsets[s + 1], "segment_max_rows: empty segment");
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t best = offsets[s];
      double bv = xv[best * C + c];
      for (std::size_t r = offsets[s] + 1; r < offsets[s + 1]; ++r) {
        const double v = xv[r * C + c];
        if (v > bv) {
          bv = v;
          best = r;
        }
      }
      out[s * C + c] = bv;
      argmax[s * C + c] = best;
    }
  }
  return make_op({N, C}, std::move(out), {x},
                 [C, argmax = std::move(argmax)](TensorNode& n) {
                   auto& px = n.parents[0];
                   px->ensure_grad();
                   for (std::size_t i = 0; i < n.grad.size(); ++i) {
                     const std::size_t c = i % C;
                     px->grad[argmax[i] * C + c] += n.grad[i];
                   }
                 });
}

Tensor pairwise_diff(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && b.rank() == 2, "pairwise_diff: rank-2 tensors required");
  check(a.shape()[1] == b.shape()[1], "pairwise_diff: width mismatch");
  const std::size_t M = a.shape()[0], N = b.shape()[0], D = a.shape()[1];
  std::vector<double> out(M * N * D);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j)
      for (std::size_t d = 0; d < D; ++d)
        out[(i * N + j) * D + d] = av[i * D + d] - bv[j * D + d];
  return make_op({M, N, D}, std::move(out), {a, b}, [M, N, D](TensorNode& n) {
    auto& pa = n.parents[0];
    auto& pb = n.parents[1];
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < N; ++j)
          for (std::size_t d = 0; d < D; ++d)
            pa->grad[i * D + d] += n.grad[(i * N + j) * D + d];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < N; ++j)
          for (std::size_t d = 0; d < D; ++d)
            pb->grad[j * D + d] -= n.grad[(i * N + j) * D + d];
    }
  });
}

Tensor expand_axis0(const Tensor& x, std::size_t m) {
  check(x.rank() == 2, "expand_axis0: rank-2 tensor required");
  check(m >= 1, "expand_axis0: m must be >= 1");
  const std::size_t N = x.shape()[0], D = x.shape()[1];
  std::vector<double> out(m * N * D);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(x.values().data(), N * D, out.data() + i * N * D);
  return make_op({m, N, D}, std::move(out), {x}, [m, N, D](TensorNode& n) {
    auto& px = n.parents[0];
    px->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < N * D; ++k)
        px->grad[k] += n.grad[i * N * D + k];
  });
}

Tensor expand_axis1(const Tensor& x, std::size_t n_mid) {
  check(x.rank() == 2, "expand_axis1: rank-2 tensor required");
  check(n_mid >= 1, "expand_axis1: n must be >= 1");
  const std::size_t M = x.shape()[0], D = x.shape()[1];
  std::vector<double> out(M * n_mid * D);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < n_mid; ++j)
      std::copy_n(x.values().data() + i * D, D,
                  out.data() + (i * n_mid + j) * D);
  return make_op({M, n_mid, D}, std::move(out), {x},
                 [M, n_mid, D](TensorNode& n) {
                   auto& px = n.parents[0];
                   px->ensure_grad();
                   for (std::size_t i = 0; i < M; ++i)
                     for (std::size_t j = 0; j < n_mid; ++j)
                       for (std::size_t d = 0; d < D; ++d)
                         px->grad[i * D + d] +=
                             n.grad[(i * n_mid + j) * D + d];
                 });
}

Tensor gru_cell(const Tensor& h, const Tensor& m, const GruParams& p) {
  Tensor r = sigmoid(add(linear(m, p.wr, p.br), matmul(h, p.ur)));
  Tensor z = sigmoid(add(linear(m, p.wz, p.bz), matmul(h, p.uz)));
  Tensor cand = tanh_op(add(linear(m, p.wc, p.bc), matmul(mul(r, h), p.uc)));
  // h' = h + z * (cand - h)
  return add(h, mul(z, sub(cand, h)));
}

}  // namespace spgseg::nn
