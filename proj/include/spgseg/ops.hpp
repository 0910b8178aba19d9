#pragma once

#include <vector>

#include "spgseg/tensor.hpp"

namespace spgseg::nn {

// elementwise, shapes must match
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);

Tensor matmul(const Tensor& x, const Tensor& w);                 // [R,K]x[K,C]
Tensor add_bias_rows(const Tensor& x, const Tensor& bias);       // bias per column
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// numerically stable softmax along one axis (rank <= 3)
Tensor softmax(const Tensor& x, int axis);
inline Tensor softmax_lastdim(const Tensor& x) {
  return softmax(x, static_cast<int>(x.rank()) - 1);
}

// mean over rows of -log softmax(logits)[target]
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);

Tensor reduce_sum(const Tensor& x);   // scalar
Tensor reduce_mean(const Tensor& x);  // scalar
Tensor reduce_sum_axis(const Tensor& x, int axis);

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);

Tensor gather_rows(const Tensor& x, std::vector<std::size_t> idx);
Tensor scatter_sum_rows(const Tensor& x, std::vector<std::size_t> dst,
                        std::size_t out_rows);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);

// rows grouped into segments [offsets[s], offsets[s+1]); channel-wise max
Tensor segment_max_rows(const Tensor& x, std::vector<std::size_t> offsets);

// out[i,j,:] = a[i,:] - b[j,:]
Tensor pairwise_diff(const Tensor& a, const Tensor& b);

// replicate a [n,D] tensor along a new leading axis -> [m,n,D]
Tensor expand_axis0(const Tensor& x, std::size_t m);
// replicate a [m,D] tensor along a new middle axis -> [m,n,D]
Tensor expand_axis1(const Tensor& x, std::size_t n);

struct GruParams {
  Tensor wr, ur, br;
  Tensor wz, uz, bz;
  Tensor wc, uc, bc;
};

// gated recurrent update; update gate 0 leaves h unchanged
Tensor gru_cell(const Tensor& h, const Tensor& m, const GruParams& p);

}  // namespace spgseg::nn
