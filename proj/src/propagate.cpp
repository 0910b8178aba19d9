#include "spgseg/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spgseg {

std::size_t SupervisionState::count(Membership m) const {
  std::size_t n = 0;
  for (Membership x : membership)
    if (x == m) ++n;
  return n;
}

int SupervisionState::label_of(int i) const {
  if (in_u(i)) throw std::logic_error("label_of: superpoint is unsupervised");
  return label[i];
}

void SupervisionState::validate() const {
  if (label.size() != membership.size())
    throw std::logic_error("state: size mismatch");
  for (std::size_t i = 0; i < membership.size(); ++i) {
    const bool labeled = label[i] >= 0;
    if (in_u(static_cast<int>(i)) == labeled)
      throw std::logic_error("state: label/membership inconsistent at " +
                             std::to_string(i));
  }
}

int ConfidenceField::argmax_row(std::size_t j) const {
  const double* row = probs.row(j);
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.cols; ++c)
    if (row[c] > row[best]) best = c;
  return static_cast<int>(best);
}

void ConfidenceField::validate() const {
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < probs.cols; ++c) {
      const double p = probs.at(r, c);
      if (p < 0.0) throw std::logic_error("confidence: negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::logic_error("confidence: row does not sum to 1");
  }
}

SupervisionState init_state(const SuperpointLabels& labels) {
  SupervisionState state;
  const std::size_t n = labels.supervised.size();
  state.membership.resize(n, Membership::Unsupervised);
  state.label.resize(n, -1);
  std::size_t supervised = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!labels.supervised[i]) continue;
    state.membership[i] = Membership::Supervised;
    state.label[i] = labels.label[i];
    ++supervised;
  }
  if (supervised == 0)
    throw std::invalid_argument("init_state: no supervised superpoints");
  return state;
}

std::vector<int> candidate_set(int i, const SupervisionState& state,
                               const SuperpointGraph& graph,
                               const ConfidenceField& conf) {
  const int want = state.label_of(i);
  std::vector<int> out;
  for (int j : graph.adjacency[i]) {
    if (!state.in_u(j)) continue;
    if (conf.argmax_row(static_cast<std::size_t>(j)) == want)
      out.push_back(j);
  }
  return out;  // adjacency is ascending already
}

std::vector<PropagationEvent> propagate_once(SupervisionState& state,
                                             const SuperpointGraph& graph,
                                             const ConfidenceField& conf,
                                             const PropagationParams& params) {
  std::vector<int> snapshot;
  for (std::size_t i = 0; i < state.size(); ++i)
    if (!state.in_u(static_cast<int>(i))) snapshot.push_back(static_cast<int>(i));

  std::vector<PropagationEvent> log;
  for (int i : snapshot) {
    const int cls = state.label_of(i);
    // candidate set is evaluated live, so targets claimed earlier in this
    // sweep are already out of U and skipped here
    const std::vector<int> cands = candidate_set(i, state, graph, conf);
    if (cands.empty()) continue;
    int best = cands[0];
    double best_conf = conf.probs.at(static_cast<std::size_t>(best),
                                     static_cast<std::size_t>(cls));
    for (std::size_t k = 1; k < cands.size(); ++k) {
      const double m = conf.probs.at(static_cast<std::size_t>(cands[k]),
                                     static_cast<std::size_t>(cls));
      if (m > best_conf) {
        best_conf = m;
        best = cands[k];
      }
    }
    if (best_conf < params.tau) continue;
    state.membership[best] = Membership::Extended;
    state.label[best] = cls;
    log.push_back({"extend", i, best, cls, best_conf});
  }
  return log;
}

std::vector<std::optional<std::vector<double>>> cluster_centers(
    const SupervisionState& state, const RowMatrix& features,
    int num_classes) {
  const std::size_t d = features.cols;
  std::vector<std::optional<std::vector<double>>> centers(num_classes);
  std::vector<std::size_t> counts(num_classes, 0);
  std::vector<std::vector<double>> sums(num_classes,
                                        std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (state.in_u(static_cast<int>(j))) continue;
    const int cls = state.label[j];
    const double* row = features.row(j);
    for (std::size_t k = 0; k < d; ++k) sums[cls][k] += row[k];
    ++counts[cls];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (auto& v : sums[c]) v *= inv;
    centers[c] = std::move(sums[c]);
  }
  return centers;
}

std::vector<PropagationEvent> dropout_superpoints(SupervisionState& state,
                                                  const RowMatrix& features,
                                                  int num_classes,
                                                  double drop_fraction) {
  const auto centers = cluster_centers(state, features, num_classes);
  std::vector<PropagationEvent> log;
  for (int cls = 0; cls < num_classes; ++cls) {
    std::vector<std::pair<double, int>> extended;  // (distance, id)
    for (std::size_t j = 0; j < state.size(); ++j) {
      if (!state.in_e(static_cast<int>(j)) || state.label[j] != cls) continue;
      const std::vector<double>& v = *centers[cls];
      const double* row = features.row(j);
      double sq = 0.0;
      for (std::size_t k = 0; k < features.cols; ++k) {
        const double diff = row[k] - v[k];
        sq += diff * diff;
      }
      extended.emplace_back(std::sqrt(sq), static_cast<int>(j));
    }
    const std::size_t k = static_cast<std::size_t>(
        std::floor(drop_fraction * static_cast<double>(extended.size())));
    if (k == 0) continue;
    std::sort(extended.begin(), extended.end(),
              [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second > b.second;  // ties drop the larger id first
              });
    for (std::size_t m = 0; m < k; ++m) {
      const auto [dist, id] = extended[m];
      state.membership[id] = Membership::Unsupervised;
      state.label[id] = -1;
      log.push_back({"drop", -1, id, cls, dist});
    }
  }
  return log;
}

}  // namespace spgseg
