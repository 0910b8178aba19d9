#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spgseg/attention.hpp"
#include "spgseg/metrics.hpp"
#include "spgseg/model.hpp"
#include "spgseg/partition.hpp"
#include "spgseg/point_cloud.hpp"
#include "spgseg/propagate.hpp"

namespace spgseg {

// Flat run configuration. Every field has a default so a config file only
// needs to list overrides; unknown keys are rejected.
struct TrainConfig {
  int epochs = 400;
  double lr = 0.01;
  int batch_size = 4;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double tau = 0.9;
  double drop_fraction = 0.05;
  int interval_m = 40;
  std::uint64_t seed = 1;
  int embed_dim = 32;
  int hidden = 32;
  int t_steps = 3;
  int knn = 5;
  // data preparation (used by the CLI, not by train() itself)
  double rate = 0.001;
  double voxel_size = 0.5;
  double normal_angle_tol = 0.30;
  double color_tol = 0.10;
  int min_sp_size = 3;

  void validate() const;
};

TrainConfig parse_config(const std::string& path);
TrainConfig parse_config_text(const std::string& text);
// single key assignment; throws on unknown keys or malformed values
void apply_config_entry(TrainConfig& config, const std::string& key,
                        const std::string& value);
// "key value" lines in a fixed order, defaults included
std::vector<std::string> config_lines(const TrainConfig& config);

// One cloud ready for training: partitioned, labeled, with the constant
// network inputs prebuilt.
struct TrainCloud {
  PointCloud cloud;
  SuperpointGraph graph;
  SuperpointLabels labels;
  SupervisionState state;
  nn::EncoderBatch encoder_batch;
  nn::GraphTensors graph_tensors;
};

TrainCloud prepare_cloud(PointCloud cloud, const PartitionParams& params,
                         int knn, const SupervisionMask& mask);

struct EpochRecord {
  int epoch = 0;
  double loss_s = 0.0, loss_es = 0.0, loss_ese = 0.0, loss_final = 0.0;
  std::size_t s_count = 0, e_count = 0, u_count = 0;
  double oa = 0.0, miou = 0.0, macc = 0.0;
  std::optional<double> oa_es;
};

struct StampedEvent {
  int epoch = 0;
  PropagationEvent event;  // superpoint ids are cloud-local
  int cloud = 0;
};

struct TrainResult {
  nn::ModelParams model;
  std::vector<EpochRecord> records;
  std::vector<StampedEvent> events;
};

// Epoch loop: batched forward + combined loss + Adam step, with label
// propagation and superpoint dropout every interval_m epochs. Mutates the
// clouds' supervision states in place. Deterministic given the seed.
TrainResult train(std::vector<TrainCloud>& clouds, const TrainConfig& config);

// per-point classes: superpoint argmax broadcast to members (no attention)
std::vector<int> predict(const PointCloud& cloud, const SuperpointGraph& graph,
                         const nn::ModelParams& model);

// CSV writers; superpoint ids in the event log are offset per cloud so they
// stay unique across a multi-cloud run
std::string run_log_csv(const TrainConfig& config,
                        const std::vector<EpochRecord>& records);
std::string event_log_csv(const std::vector<StampedEvent>& events,
                          const std::vector<std::size_t>& cloud_id_offsets);
std::string set_size_csv(const std::vector<EpochRecord>& records);

std::vector<std::size_t> cloud_id_offsets(
    const std::vector<TrainCloud>& clouds);

}  // namespace spgseg
