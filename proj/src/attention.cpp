#include "spgseg/attention.hpp"

#include <stdexcept>

namespace spgseg::nn {

namespace {

// apply a row MLP to every (i, j) slice of a [m, n, D] tensor
Tensor mlp_rank3(const MlpParams& p, const Tensor& x) {
  const auto& s = x.shape();
  Tensor flat = reshape(x, {s[0] * s[1], s[2]});
  return reshape(mlp_forward(p, flat), {s[0], s[1], s[2]});
}

void check_sets(std::size_t ns, std::size_t ne) {
  if (ns == 0) throw std::invalid_argument("attention: supervised set empty");
  if (ne == 0) throw std::invalid_argument("attention: extended set empty");
}

}  // namespace

ForwardAttention forward_attention(const Tensor& h_s, const Tensor& h_e,
                                   const MlpParams& phi,
                                   const MlpParams& alpha) {
  const std::size_t ns = h_s.shape()[0], ne = h_e.shape()[0];
  check_sets(ns, ne);
  Tensor scores = mlp_rank3(phi, pairwise_diff(h_s, h_e));
  ForwardAttention out;
  out.w_es = softmax(scores, 1);
  Tensor alpha_e = expand_axis0(mlp_forward(alpha, h_e), ns);
  out.x_s = reduce_sum_axis(mul(out.w_es, alpha_e), 1);
  return out;
}

ReverseAttention reverse_attention(const Tensor& h_e, const Tensor& x_s,
                                   const MlpParams& psi,
                                   const MlpParams& beta) {
  const std::size_t ns = x_s.shape()[0], ne = h_e.shape()[0];
  check_sets(ns, ne);
  // scores[i,j,:] = psi(h_j - x_s[i])
  Tensor scores = mlp_rank3(psi, scale(pairwise_diff(x_s, h_e), -1.0));
  ReverseAttention out;
  out.w_ese = softmax(scores, 0);
  Tensor beta_s = expand_axis1(mlp_forward(beta, x_s), ne);
  out.y_e = reduce_sum_axis(mul(out.w_ese, beta_s), 0);
  return out;
}

Tensor loss_es(const Tensor& x_s, const std::vector<int>& labels,
               const Tensor& head_w, const Tensor& head_b) {
  return cross_entropy(linear(x_s, head_w, head_b), labels);
}

Tensor loss_ese(const Tensor& y_e, const std::vector<int>& pseudo_labels,
                const Tensor& head_w, const Tensor& head_b) {
  return cross_entropy(linear(y_e, head_w, head_b), pseudo_labels);
}

BatchSets gather_batch_sets(
    const std::vector<const SupervisionState*>& states,
    const std::vector<Tensor>& embeddings) {
  if (states.empty() || states.size() != embeddings.size())
    throw std::invalid_argument("gather_batch_sets: bad batch");
  BatchSets out;
  std::vector<Tensor> s_parts, e_parts;
  for (std::size_t c = 0; c < states.size(); ++c) {
    const SupervisionState& st = *states[c];
    std::vector<std::size_t> s_idx, e_idx;
    for (std::size_t i = 0; i < st.size(); ++i) {
      const int id = static_cast<int>(i);
      if (st.in_s(id)) {
        s_idx.push_back(i);
        out.labels.push_back(st.label_of(id));
        out.s_rows.emplace_back(static_cast<int>(c), id);
      } else if (st.in_e(id)) {
        e_idx.push_back(i);
        out.pseudo_labels.push_back(st.label_of(id));
        out.e_rows.emplace_back(static_cast<int>(c), id);
      }
    }
    if (!s_idx.empty()) s_parts.push_back(gather_rows(embeddings[c], s_idx));
    if (!e_idx.empty()) e_parts.push_back(gather_rows(embeddings[c], e_idx));
  }
  if (s_parts.empty())
    throw std::invalid_argument("gather_batch_sets: no supervised rows");
  out.h_s = concat_rows(s_parts);
  if (!e_parts.empty()) out.h_e = concat_rows(e_parts);
  return out;  // h_e stays undefined when no cloud has extensions
}

}  // namespace spgseg::nn
