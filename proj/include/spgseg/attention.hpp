#pragma once

#include <utility>
#include <vector>

#include "spgseg/model.hpp"
#include "spgseg/propagate.hpp"

namespace spgseg::nn {

// Both weight blocks are [|S|, |E|, D]. w_es is normalized over the
// extended axis per (supervised row, channel); w_ese over the supervised
// axis per (extended row, channel).
struct ForwardAttention {
  Tensor x_s;   // [|S|, D]
  Tensor w_es;  // [|S|, |E|, D]
};

struct ReverseAttention {
  Tensor y_e;    // [|E|, D]
  Tensor w_ese;  // [|S|, |E|, D]
};

// supervised rows attend over extended rows:
// x_s[i] = sum_j softmax_j(phi(h_i - h_j)) * alpha(h_j), channel-wise
ForwardAttention forward_attention(const Tensor& h_s, const Tensor& h_e,
                                   const MlpParams& phi,
                                   const MlpParams& alpha);

// extended rows attend back over the refreshed supervised features:
// y_e[j] = sum_i softmax_i(psi(h_j - x_s[i])) * beta(x_s[i]), channel-wise
ReverseAttention reverse_attention(const Tensor& h_e, const Tensor& x_s,
                                   const MlpParams& psi, const MlpParams& beta);

// mean cross-entropy of head(x_s) against the supervised labels
Tensor loss_es(const Tensor& x_s, const std::vector<int>& labels,
               const Tensor& head_w, const Tensor& head_b);

// mean cross-entropy of head(y_e) against the pseudo labels
Tensor loss_ese(const Tensor& y_e, const std::vector<int>& pseudo_labels,
                const Tensor& head_w, const Tensor& head_b);

// Supervised/extended rows pooled across a batch of clouds in
// (cloud id, superpoint id) order, with provenance back-pointers.
struct BatchSets {
  Tensor h_s;  // [total |S|, D]
  Tensor h_e;  // [total |E|, D], zero rows when no cloud has extensions
  std::vector<int> labels;
  std::vector<int> pseudo_labels;
  std::vector<std::pair<int, int>> s_rows;  // (cloud, superpoint) per row
  std::vector<std::pair<int, int>> e_rows;
};

BatchSets gather_batch_sets(
    const std::vector<const SupervisionState*>& states,
    const std::vector<Tensor>& embeddings);

}  // namespace spgseg::nn
