#include "spgseg/metrics.hpp"

#include <stdexcept>

namespace spgseg {

Metrics evaluate(const std::vector<int>& pred, const std::vector<int>& gt,
                 int num_classes) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("evaluate: prediction/label length mismatch");
  if (pred.empty()) throw std::invalid_argument("evaluate: empty input");
  const std::size_t c = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> confusion(c * c, 0);  // [gt][pred]
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gt[i] < 0 || gt[i] >= num_classes || pred[i] < 0 ||
        pred[i] >= num_classes)
      throw std::invalid_argument("evaluate: class id out of range");
    ++confusion[static_cast<std::size_t>(gt[i]) * c +
                static_cast<std::size_t>(pred[i])];
  }

  Metrics m;
  std::size_t trace = 0;
  for (std::size_t k = 0; k < c; ++k) trace += confusion[k * c + k];
  m.oa = static_cast<double>(trace) / static_cast<double>(pred.size());

  m.per_class_iou.assign(c, -1.0);
  double iou_sum = 0.0, recall_sum = 0.0;
  std::size_t supported = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t tp = confusion[k * c + k], fn = 0, fp = 0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j == k) continue;
      fn += confusion[k * c + j];
      fp += confusion[j * c + k];
    }
    if (tp + fn == 0) continue;  // no ground-truth support
    ++supported;
    const double iou =
        static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    m.per_class_iou[k] = iou;
    iou_sum += iou;
    recall_sum += static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (supported == 0) throw std::invalid_argument("evaluate: no labeled class");
  m.miou = iou_sum / static_cast<double>(supported);
  m.macc = recall_sum / static_cast<double>(supported);
  return m;
}

std::vector<int> broadcast_labels(const std::vector<Superpoint>& superpoints,
                                  const std::vector<int>& sp_classes,
                                  std::size_t num_points) {
  if (sp_classes.size() != superpoints.size())
    throw std::invalid_argument("broadcast_labels: class count mismatch");
  std::vector<int> out(num_points, -1);
  for (std::size_t s = 0; s < superpoints.size(); ++s)
    for (int pi : superpoints[s].point_indices) out[pi] = sp_classes[s];
  return out;
}

std::optional<double> oa_extended(const SupervisionState& state,
                                  const std::vector<Superpoint>& superpoints,
                                  const std::vector<int>& gt) {
  std::size_t total = 0, correct = 0;
  for (std::size_t s = 0; s < superpoints.size(); ++s) {
    if (!state.in_e(static_cast<int>(s))) continue;
    const int pseudo = state.label[s];
    for (int pi : superpoints[s].point_indices) {
      ++total;
      if (gt[pi] == pseudo) ++correct;
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace spgseg
