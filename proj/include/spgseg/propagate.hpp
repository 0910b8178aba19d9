#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spgseg/partition.hpp"
#include "spgseg/util.hpp"

namespace spgseg {

enum class Membership { Supervised, Unsupervised, Extended };

// S/U/E partition of superpoint ids plus the class assignments: z on S
// (immutable after init), pseudo labels on E. label is -1 on U.
struct SupervisionState {
  std::vector<Membership> membership;
  std::vector<int> label;

  std::size_t size() const { return membership.size(); }
  std::size_t count(Membership m) const;
  bool in_s(int i) const { return membership[i] == Membership::Supervised; }
  bool in_u(int i) const { return membership[i] == Membership::Unsupervised; }
  bool in_e(int i) const { return membership[i] == Membership::Extended; }
  int label_of(int i) const;  // requires i in S or E
  void validate() const;      // label/membership consistency
};

struct PropagationParams {
  double tau = 0.9;
  double drop_fraction = 0.05;
  int interval_m = 40;
};

// Softmax rows of the segmentation logits, detached from the tape.
struct ConfidenceField {
  RowMatrix probs;  // [N, c]

  int argmax_row(std::size_t j) const;  // ties -> smallest class
  void validate() const;                // rows sum to 1, entries >= 0
};

// one row of the event CSV: epoch,event,source,target,class,score
struct PropagationEvent {
  std::string event;  // "extend" or "drop"
  int source = -1;    // -1 for drops
  int target = -1;
  int cls = -1;
  double score = 0.0;  // confidence for extends, center distance for drops
};

// S from the supervised labels, E empty, U the rest; errors when S is empty
SupervisionState init_state(const SuperpointLabels& labels);

// neighbors j of i with j in U and predicted class equal to label_of(i)
std::vector<int> candidate_set(int i, const SupervisionState& state,
                               const SuperpointGraph& graph,
                               const ConfidenceField& conf);

// One sweep over a snapshot of S+E in ascending id order. Each source may
// claim at most one candidate (highest confidence, ties to the smallest id)
// and only when that confidence reaches tau. Returns the extension log.
std::vector<PropagationEvent> propagate_once(SupervisionState& state,
                                             const SuperpointGraph& graph,
                                             const ConfidenceField& conf,
                                             const PropagationParams& params);

// per-class mean of feature rows over S+E members; absent when the class
// has no members
std::vector<std::optional<std::vector<double>>> cluster_centers(
    const SupervisionState& state, const RowMatrix& features, int num_classes);

// Per class: drop the floor(drop_fraction * |E members|) extended
// superpoints farthest from the class center back to U. Distance ties drop
// the larger id first. Returns the drop log.
std::vector<PropagationEvent> dropout_superpoints(
    SupervisionState& state, const RowMatrix& features, int num_classes,
    double drop_fraction);

}  // namespace spgseg
