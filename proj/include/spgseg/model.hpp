#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spgseg/checkpoint.hpp"
#include "spgseg/ops.hpp"
#include "spgseg/optim.hpp"
#include "spgseg/partition.hpp"
#include "spgseg/point_cloud.hpp"

namespace spgseg::nn {

struct ModelConfig {
  std::size_t embed_dim = 32;  // D
  std::size_t hidden = 32;     // encoder hidden width
  int t_steps = 3;             // GNN iterations
  int num_classes = 0;         // c, set from the data
};

// two dense layers with a ReLU in between
struct MlpParams {
  Tensor w1, b1, w2, b2;
};

Tensor mlp_forward(const MlpParams& p, const Tensor& x);

// Per-point inputs for one cloud, grouped by superpoint. Constant across
// epochs, so build once and reuse.
struct EncoderBatch {
  Tensor point_features;             // [P, 7]: scaled xyz, rgb, diameter
  std::vector<std::size_t> offsets;  // N+1 segment bounds into the rows
};

EncoderBatch make_encoder_batch(const PointCloud& cloud,
                                const std::vector<Superpoint>& superpoints);

// Directed edge lists with attributes seen from the destination node.
struct GraphTensors {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> src, dst;
  Tensor edge_attr;  // [2*|edges|, 4]: centroid offset, log size ratio
};

GraphTensors make_graph_tensors(const SuperpointGraph& graph);

struct GnnParams {
  Tensor msg_w, msg_b;  // (D+4) -> D, ReLU
  GruParams gru;
  int t_steps = 3;
};

// per-point MLP then channel-wise max over each superpoint's members
Tensor encode_superpoints(const EncoderBatch& batch, const MlpParams& encoder);
Tensor encode_superpoints(const PointCloud& cloud,
                          const std::vector<Superpoint>& superpoints,
                          const MlpParams& encoder);

// t_steps rounds of summed edge messages followed by a gated update;
// isolated nodes receive a zero message
Tensor gnn_forward(const GraphTensors& graph, const Tensor& features,
                   const GnnParams& params);

Tensor seg_logits(const Tensor& h, const Tensor& head_w, const Tensor& head_b);

// mean cross-entropy over supervised superpoints only
Tensor loss_s(const Tensor& logits, const SuperpointLabels& labels);

struct ModelParams {
  ModelConfig config;
  MlpParams encoder;  // 7 -> hidden -> D
  GnnParams gnn;
  Tensor head_w, head_b;  // D -> c
  // attention stack (training only)
  MlpParams phi, alpha, psi, beta;  // D -> D -> D
  Tensor head_es_w, head_es_b;
  Tensor head_ese_w, head_ese_b;

  // fixed order; tensors share storage with the fields above
  std::vector<Parameter> parameters();
};

ModelParams make_model(const ModelConfig& config, std::uint64_t seed);

std::map<std::string, std::string> model_meta(const ModelConfig& config);
ModelParams model_from_checkpoint(const LoadedCheckpoint& ckpt);

}  // namespace spgseg::nn
