#include "spgseg/model.hpp"

#include <cmath>
#include <stdexcept>

#include "spgseg/rng.hpp"

namespace spgseg::nn {

namespace {

constexpr double kScaleEps = 1e-6;  // degenerate-extent guard

Tensor init_matrix(rng::Engine& eng, std::size_t rows, std::size_t cols) {
  const double bound = std::sqrt(1.0 / static_cast<double>(rows));
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng::uniform(eng, -bound, bound);
  return Tensor::from_values({rows, cols}, std::move(v), true);
}

Tensor init_bias(rng::Engine& eng, std::size_t fan_in, std::size_t n) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::vector<double> v(n);
  for (auto& x : v) x = rng::uniform(eng, -bound, bound);
  return Tensor::from_values({n}, std::move(v), true);
}

MlpParams init_mlp(rng::Engine& eng, std::size_t din, std::size_t dh,
                   std::size_t dout) {
  MlpParams p;
  p.w1 = init_matrix(eng, din, dh);
  p.b1 = init_bias(eng, din, dh);
  p.w2 = init_matrix(eng, dh, dout);
  p.b2 = init_bias(eng, dh, dout);
  return p;
}

void push_mlp(std::vector<Parameter>& out, const std::string& prefix,
              const MlpParams& p) {
  out.push_back({prefix + ".w1", p.w1});
  out.push_back({prefix + ".b1", p.b1});
  out.push_back({prefix + ".w2", p.w2});
  out.push_back({prefix + ".b2", p.b2});
}

}  // namespace

Tensor mlp_forward(const MlpParams& p, const Tensor& x) {
  return linear(relu(linear(x, p.w1, p.b1)), p.w2, p.b2);
}

EncoderBatch make_encoder_batch(const PointCloud& cloud,
                                const std::vector<Superpoint>& superpoints) {
  EncoderBatch batch;
  std::size_t total = 0;
  for (const auto& sp : superpoints) {
    if (sp.point_indices.empty())
      throw std::invalid_argument("make_encoder_batch: empty superpoint");
    total += sp.point_indices.size();
  }
  std::vector<double> feats;
  feats.reserve(total * 7);
  batch.offsets.reserve(superpoints.size() + 1);
  batch.offsets.push_back(0);
  for (const auto& sp : superpoints) {
    const double inv = 1.0 / std::max(sp.diameter, kScaleEps);
    for (int pi : sp.point_indices) {
      const Vec3 d = cloud.positions[pi] - sp.centroid;
      feats.push_back(d[0] * inv);
      feats.push_back(d[1] * inv);
      feats.push_back(d[2] * inv);
      const Vec3& c = cloud.colors[pi];
      feats.push_back(c[0]);
      feats.push_back(c[1]);
      feats.push_back(c[2]);
      feats.push_back(sp.diameter);
    }
    batch.offsets.push_back(batch.offsets.back() + sp.point_indices.size());
  }
  batch.point_features = Tensor::from_values({total, 7}, std::move(feats));
  return batch;
}

GraphTensors make_graph_tensors(const SuperpointGraph& graph) {
  GraphTensors gt;
  gt.num_nodes = graph.num_nodes();
  const std::size_t m = graph.edges.size();
  gt.src.reserve(2 * m);
  gt.dst.reserve(2 * m);
  std::vector<double> attrs;
  attrs.reserve(2 * m * 4);
  for (std::size_t e = 0; e < m; ++e) {
    const auto [i, j] = graph.edges[e];
    const EdgeAttr& a = graph.edge_attrs[e];
    // message into i from j, attrs as seen from i
    gt.dst.push_back(static_cast<std::size_t>(i));
    gt.src.push_back(static_cast<std::size_t>(j));
    attrs.insert(attrs.end(), {a.centroid_offset[0], a.centroid_offset[1],
                               a.centroid_offset[2], a.log_size_ratio});
    gt.dst.push_back(static_cast<std::size_t>(j));
    gt.src.push_back(static_cast<std::size_t>(i));
    attrs.insert(attrs.end(), {-a.centroid_offset[0], -a.centroid_offset[1],
                               -a.centroid_offset[2], -a.log_size_ratio});
  }
  gt.edge_attr = Tensor::from_values({2 * m, 4}, std::move(attrs));
  return gt;
}

Tensor encode_superpoints(const EncoderBatch& batch, const MlpParams& encoder) {
  return segment_max_rows(mlp_forward(encoder, batch.point_features),
                          batch.offsets);
}

Tensor encode_superpoints(const PointCloud& cloud,
                          const std::vector<Superpoint>& superpoints,
                          const MlpParams& encoder) {
  return encode_superpoints(make_encoder_batch(cloud, superpoints), encoder);
}

Tensor gnn_forward(const GraphTensors& graph, const Tensor& features,
                   const GnnParams& params) {
  if (features.shape()[0] != graph.num_nodes)
    throw std::invalid_argument("gnn_forward: feature row count mismatch");
  const std::size_t d = features.shape()[1];
  Tensor h = features;
  for (int t = 0; t < params.t_steps; ++t) {
    Tensor messages;
    if (graph.src.empty()) {
      messages = Tensor::zeros({graph.num_nodes, d});
    } else {
      Tensor inputs = concat_cols(gather_rows(h, graph.src), graph.edge_attr);
      Tensor per_edge = relu(linear(inputs, params.msg_w, params.msg_b));
      messages = scatter_sum_rows(per_edge, graph.dst, graph.num_nodes);
    }
    h = gru_cell(h, messages, params.gru);
  }
  return h;
}

Tensor seg_logits(const Tensor& h, const Tensor& head_w, const Tensor& head_b) {
  return linear(h, head_w, head_b);
}

Tensor loss_s(const Tensor& logits, const SuperpointLabels& labels) {
  if (labels.supervised.size() != logits.shape()[0])
    throw std::invalid_argument("loss_s: label count mismatch");
  std::vector<std::size_t> rows;
  std::vector<int> targets;
  for (std::size_t i = 0; i < labels.supervised.size(); ++i) {
    if (!labels.supervised[i]) continue;
    rows.push_back(i);
    targets.push_back(labels.label[i]);
  }
  if (rows.empty())
    throw std::invalid_argument("loss_s: no supervised superpoints");
  return cross_entropy(gather_rows(logits, std::move(rows)), targets);
}

std::vector<Parameter> ModelParams::parameters() {
  std::vector<Parameter> out;
  push_mlp(out, "encoder", encoder);
  out.push_back({"gnn.msg_w", gnn.msg_w});
  out.push_back({"gnn.msg_b", gnn.msg_b});
  out.push_back({"gnn.gru.wr", gnn.gru.wr});
  out.push_back({"gnn.gru.ur", gnn.gru.ur});
  out.push_back({"gnn.gru.br", gnn.gru.br});
  out.push_back({"gnn.gru.wz", gnn.gru.wz});
  out.push_back({"gnn.gru.uz", gnn.gru.uz});
  out.push_back({"gnn.gru.bz", gnn.gru.bz});
  out.push_back({"gnn.gru.wc", gnn.gru.wc});
  out.push_back({"gnn.gru.uc", gnn.gru.uc});
  out.push_back({"gnn.gru.bc", gnn.gru.bc});
  out.push_back({"head.w", head_w});
  out.push_back({"head.b", head_b});
  push_mlp(out, "attn.phi", phi);
  push_mlp(out, "attn.alpha", alpha);
  push_mlp(out, "attn.psi", psi);
  push_mlp(out, "attn.beta", beta);
  out.push_back({"attn.head_es.w", head_es_w});
  out.push_back({"attn.head_es.b", head_es_b});
  out.push_back({"attn.head_ese.w", head_ese_w});
  out.push_back({"attn.head_ese.b", head_ese_b});
  return out;
}

ModelParams make_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.embed_dim < 2)
    throw std::invalid_argument("make_model: embed_dim must be >= 2");
  if (config.t_steps < 1)
    throw std::invalid_argument("make_model: t_steps must be >= 1");
  if (config.num_classes < 2)
    throw std::invalid_argument("make_model: num_classes must be >= 2");

  const std::size_t d = config.embed_dim;
  const std::size_t c = static_cast<std::size_t>(config.num_classes);
  rng::Engine eng = rng::make_engine(seed);

  ModelParams m;
  m.config = config;
  m.encoder = init_mlp(eng, 7, config.hidden, d);
  m.gnn.t_steps = config.t_steps;
  m.gnn.msg_w = init_matrix(eng, d + 4, d);
  m.gnn.msg_b = init_bias(eng, d + 4, d);
  m.gnn.gru.wr = init_matrix(eng, d, d);
  m.gnn.gru.ur = init_matrix(eng, d, d);
  m.gnn.gru.br = init_bias(eng, d, d);
  m.gnn.gru.wz = init_matrix(eng, d, d);
  m.gnn.gru.uz = init_matrix(eng, d, d);
  m.gnn.gru.bz = init_bias(eng, d, d);
  m.gnn.gru.wc = init_matrix(eng, d, d);
  m.gnn.gru.uc = init_matrix(eng, d, d);
  m.gnn.gru.bc = init_bias(eng, d, d);
  m.head_w = init_matrix(eng, d, c);
  m.head_b = init_bias(eng, d, c);
  m.phi = init_mlp(eng, d, d, d);
  m.alpha = init_mlp(eng, d, d, d);
  m.psi = init_mlp(eng, d, d, d);
  m.beta = init_mlp(eng, d, d, d);
  m.head_es_w = init_matrix(eng, d, c);
  m.head_es_b = init_bias(eng, d, c);
  m.head_ese_w = init_matrix(eng, d, c);
  m.head_ese_b = init_bias(eng, d, c);
  return m;
}

std::map<std::string, std::string> model_meta(const ModelConfig& config) {
  return {{"embed_dim", std::to_string(config.embed_dim)},
          {"hidden", std::to_string(config.hidden)},
          {"t_steps", std::to_string(config.t_steps)},
          {"num_classes", std::to_string(config.num_classes)}};
}

ModelParams model_from_checkpoint(const LoadedCheckpoint& ckpt) {
  ModelConfig config;
  auto meta_int = [&](const std::string& key) {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end())
      throw std::runtime_error("checkpoint missing meta key " + key);
    return std::stoll(it->second);
  };
  config.embed_dim = static_cast<std::size_t>(meta_int("embed_dim"));
  config.hidden = static_cast<std::size_t>(meta_int("hidden"));
  config.t_steps = static_cast<int>(meta_int("t_steps"));
  config.num_classes = static_cast<int>(meta_int("num_classes"));

  // template with the right shapes, then overwrite from the file
  ModelParams m = make_model(config, 0);
  auto params = m.parameters();
  if (params.size() != ckpt.params.size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& loaded = ckpt.params[i];
    if (loaded.name != params[i].name)
      throw std::runtime_error("checkpoint parameter order mismatch at " +
                               loaded.name);
    if (loaded.tensor.shape() != params[i].tensor.shape())
      throw std::runtime_error("checkpoint shape mismatch for " + loaded.name);
    params[i].tensor.leaf_values() = loaded.tensor.values();
  }
  return m;
}

}  // namespace spgseg::nn
