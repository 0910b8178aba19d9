#pragma once

#include <optional>
#include <vector>

#include "spgseg/partition.hpp"
#include "spgseg/propagate.hpp"

namespace spgseg {

// Point-level segmentation scores. Per-class IoU is -1 for classes with no
// ground-truth support; such classes are excluded from mIoU and mAcc.
struct Metrics {
  double oa = 0.0;
  double miou = 0.0;
  double macc = 0.0;
  std::vector<double> per_class_iou;
};

Metrics evaluate(const std::vector<int>& pred, const std::vector<int>& gt,
                 int num_classes);

// per-superpoint classes expanded to their member points
std::vector<int> broadcast_labels(const std::vector<Superpoint>& superpoints,
                                  const std::vector<int>& sp_classes,
                                  std::size_t num_points);

// fraction of points inside extended superpoints whose ground-truth label
// matches the pseudo label; absent when E is empty
std::optional<double> oa_extended(const SupervisionState& state,
                                  const std::vector<Superpoint>& superpoints,
                                  const std::vector<int>& gt);

}  // namespace spgseg
