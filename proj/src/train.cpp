#include "spgseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "spgseg/ops.hpp"
#include "spgseg/optim.hpp"
#include "spgseg/rng.hpp"
#include "spgseg/util.hpp"

namespace spgseg {

namespace {

using nn::Tensor;

struct CloudForward {
  Tensor h;       // [N, D]
  Tensor logits;  // [N, c]
};

CloudForward forward_cloud(const TrainCloud& tc, const nn::ModelParams& m) {
  CloudForward f;
  Tensor feats = nn::encode_superpoints(tc.encoder_batch, m.encoder);
  f.h = nn::gnn_forward(tc.graph_tensors, feats, m.gnn);
  f.logits = nn::seg_logits(f.h, m.head_w, m.head_b);
  return f;
}

RowMatrix to_matrix(const Tensor& t) {
  RowMatrix m(t.shape()[0], t.shape()[1]);
  m.data = t.values();
  return m;
}

ConfidenceField confidence_from_logits(const RowMatrix& logits) {
  ConfidenceField cf;
  cf.probs = RowMatrix(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const double* row = logits.row(r);
    double mx = row[0];
    for (std::size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, row[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      cf.probs.at(r, c) = std::exp(row[c] - mx);
      denom += cf.probs.at(r, c);
    }
    for (std::size_t c = 0; c < logits.cols; ++c) cf.probs.at(r, c) /= denom;
  }
  return cf;
}

std::vector<int> argmax_rows(const RowMatrix& m) {
  std::vector<int> out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols; ++c)
      if (row[c] > row[best]) best = c;  // ties keep the smallest class
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace

void apply_config_entry(TrainConfig& c, const std::string& key,
                        const std::string& value) {
  auto as_int = [&] {
    std::size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size())
      throw std::runtime_error("bad integer for config key '" + key + "'");
    return v;
  };
  auto as_double = [&] {
    bool ok = false;
    double v = parse_double(value, ok);
    if (!ok) throw std::runtime_error("bad number for config key '" + key + "'");
    return v;
  };
  if (key == "epochs") c.epochs = static_cast<int>(as_int());
  else if (key == "lr") c.lr = as_double();
  else if (key == "batch_size") c.batch_size = static_cast<int>(as_int());
  else if (key == "lambda1") c.lambda1 = as_double();
  else if (key == "lambda2") c.lambda2 = as_double();
  else if (key == "tau") c.tau = as_double();
  else if (key == "drop_fraction") c.drop_fraction = as_double();
  else if (key == "interval_m") c.interval_m = static_cast<int>(as_int());
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(as_int());
  else if (key == "embed_dim") c.embed_dim = static_cast<int>(as_int());
  else if (key == "hidden") c.hidden = static_cast<int>(as_int());
  else if (key == "t_steps") c.t_steps = static_cast<int>(as_int());
  else if (key == "knn") c.knn = static_cast<int>(as_int());
  else if (key == "rate") c.rate = as_double();
  else if (key == "voxel_size") c.voxel_size = as_double();
  else if (key == "normal_angle_tol") c.normal_angle_tol = as_double();
  else if (key == "color_tol") c.color_tol = as_double();
  else if (key == "min_sp_size") c.min_sp_size = static_cast<int>(as_int());
  else throw std::runtime_error("unknown config key '" + key + "'");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::runtime_error("config: " + what);
  };
  if (epochs < 1) fail("epochs must be >= 1");
  if (lr <= 0) fail("lr must be positive");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (lambda1 < 0 || lambda2 < 0) fail("lambdas must be >= 0");
  if (tau <= 0 || tau >= 1) fail("tau must be in (0,1)");
  if (drop_fraction < 0 || drop_fraction >= 1)
    fail("drop_fraction must be in [0,1)");
  if (interval_m < 1) fail("interval_m must be >= 1");
  if (embed_dim < 2) fail("embed_dim must be >= 2");
  if (hidden < 1) fail("hidden must be >= 1");
  if (t_steps < 1) fail("t_steps must be >= 1");
  if (knn < 1) fail("knn must be >= 1");
  if (rate <= 0 || rate > 1) fail("rate must be in (0,1]");
  if (voxel_size <= 0) fail("voxel_size must be positive");
  if (normal_angle_tol <= 0) fail("normal_angle_tol must be positive");
  if (color_tol <= 0) fail("color_tol must be positive");
  if (min_sp_size < 1) fail("min_sp_size must be >= 1");
}

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key)) continue;  // blank
    if (!(ls >> value) || (ls >> extra))
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected 'key value'");
    apply_config_entry(config, key, value);
  }
  config.validate();
  return config;
}

TrainConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<std::string> config_lines(const TrainConfig& c) {
  std::vector<std::string> out;
  auto kv = [&out](const std::string& k, const std::string& v) {
    out.push_back(k + " " + v);
  };
  kv("epochs", std::to_string(c.epochs));
  kv("lr", format_double(c.lr));
  kv("batch_size", std::to_string(c.batch_size));
  kv("lambda1", format_double(c.lambda1));
  kv("lambda2", format_double(c.lambda2));
  kv("tau", format_double(c.tau));
  kv("drop_fraction", format_double(c.drop_fraction));
  kv("interval_m", std::to_string(c.interval_m));
  kv("seed", std::to_string(c.seed));
  kv("embed_dim", std::to_string(c.embed_dim));
  kv("hidden", std::to_string(c.hidden));
  kv("t_steps", std::to_string(c.t_steps));
  kv("knn", std::to_string(c.knn));
  kv("rate", format_double(c.rate));
  kv("voxel_size", format_double(c.voxel_size));
  kv("normal_angle_tol", format_double(c.normal_angle_tol));
  kv("color_tol", format_double(c.color_tol));
  kv("min_sp_size", std::to_string(c.min_sp_size));
  return out;
}

TrainCloud prepare_cloud(PointCloud cloud, const PartitionParams& params,
                         int knn, const SupervisionMask& mask) {
  TrainCloud tc;
  tc.cloud = std::move(cloud);
  tc.cloud.validate();
  tc.graph = build_graph(partition_cloud(tc.cloud, params), knn);
  tc.labels = superpoint_labels(tc.graph.nodes, tc.cloud, mask);
  tc.state = init_state(tc.labels);
  tc.encoder_batch = nn::make_encoder_batch(tc.cloud, tc.graph.nodes);
  tc.graph_tensors = nn::make_graph_tensors(tc.graph);
  return tc;
}

TrainResult train(std::vector<TrainCloud>& clouds, const TrainConfig& config) {
  config.validate();
  if (clouds.empty()) throw std::invalid_argument("train: no clouds");
  const int num_classes = clouds[0].cloud.num_classes;
  for (const auto& tc : clouds) {
    if (tc.cloud.num_classes != num_classes)
      throw std::invalid_argument("train: class count differs between clouds");
    if (tc.state.count(Membership::Supervised) == 0)
      throw std::invalid_argument("train: cloud without supervised superpoints");
  }

  nn::ModelConfig mc;
  mc.embed_dim = static_cast<std::size_t>(config.embed_dim);
  mc.hidden = static_cast<std::size_t>(config.hidden);
  mc.t_steps = config.t_steps;
  mc.num_classes = num_classes;

  TrainResult result;
  result.model = nn::make_model(mc, rng::mix(config.seed, 1));
  auto params = result.model.parameters();
  std::vector<nn::Parameter*> ptrs;
  ptrs.reserve(params.size());
  for (auto& p : params) ptrs.push_back(&p);
  nn::AdamState adam;
  nn::AdamConfig acfg;
  acfg.lr = config.lr;

  PropagationParams pp;
  pp.tau = config.tau;
  pp.drop_fraction = config.drop_fraction;
  pp.interval_m = config.interval_m;

  const std::size_t n = clouds.size();
  const std::uint64_t shuffle_base = rng::mix(config.seed, 2);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng::Engine shuffle_eng =
        rng::make_engine(rng::mix(shuffle_base, static_cast<std::uint64_t>(epoch)));
    rng::shuffle(shuffle_eng, order);

    double sum_s = 0, sum_es = 0, sum_ese = 0, sum_final = 0;
    int batches = 0;
    std::vector<RowMatrix> epoch_logits(n);

    const std::size_t bs = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0; start < n; start += bs) {
      std::vector<int> batch(order.begin() + start,
                             order.begin() + std::min(start + bs, n));
      std::sort(batch.begin(), batch.end());

      for (auto* p : ptrs) p->tensor.zero_grad();

      std::vector<Tensor> hs;
      std::vector<Tensor> logit_parts;
      std::vector<int> sup_targets;
      std::vector<const SupervisionState*> states;
      for (int ci : batch) {
        CloudForward f = forward_cloud(clouds[ci], result.model);
        hs.push_back(f.h);
        epoch_logits[ci] = to_matrix(f.logits);
        states.push_back(&clouds[ci].state);
        const auto& st = clouds[ci].state;
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < st.size(); ++i) {
          if (!st.in_s(static_cast<int>(i))) continue;
          rows.push_back(i);
          sup_targets.push_back(st.label[i]);
        }
        logit_parts.push_back(nn::gather_rows(f.logits, std::move(rows)));
      }
      Tensor ls = nn::cross_entropy(nn::concat_rows(logit_parts), sup_targets);

      Tensor lfinal = ls;
      double les_v = 0.0, lese_v = 0.0;
      nn::BatchSets sets = nn::gather_batch_sets(states, hs);
      if (sets.h_e.defined()) {
        auto fa = nn::forward_attention(sets.h_s, sets.h_e, result.model.phi,
                                        result.model.alpha);
        auto ra = nn::reverse_attention(sets.h_e, fa.x_s, result.model.psi,
                                        result.model.beta);
        Tensor les = nn::loss_es(fa.x_s, sets.labels, result.model.head_es_w,
                                 result.model.head_es_b);
        Tensor lese = nn::loss_ese(ra.y_e, sets.pseudo_labels,
                                   result.model.head_ese_w,
                                   result.model.head_ese_b);
        les_v = les.item();
        lese_v = lese.item();
        lfinal = nn::add(ls, nn::add(nn::scale(les, config.lambda1),
                                     nn::scale(lese, config.lambda2)));
      }
      lfinal.backward();
      nn::adam_step(ptrs, adam, acfg);

      sum_s += ls.item();
      sum_es += les_v;
      sum_ese += lese_v;
      sum_final += lfinal.item();
      ++batches;
    }

    if (epoch % config.interval_m == 0) {
      for (std::size_t ci = 0; ci < n; ++ci) {
        nn::NoGradGuard guard;
        CloudForward f = forward_cloud(clouds[ci], result.model);
        ConfidenceField conf = confidence_from_logits(to_matrix(f.logits));
        auto extensions = propagate_once(clouds[ci].state, clouds[ci].graph,
                                         conf, pp);
        RowMatrix feats = to_matrix(f.h);
        auto drops = dropout_superpoints(clouds[ci].state, feats, num_classes,
                                         config.drop_fraction);
        for (auto& e : extensions)
          result.events.push_back({epoch, std::move(e), static_cast<int>(ci)});
        for (auto& e : drops)
          result.events.push_back({epoch, std::move(e), static_cast<int>(ci)});
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double inv_b = 1.0 / static_cast<double>(batches);
    rec.loss_s = sum_s * inv_b;
    rec.loss_es = sum_es * inv_b;
    rec.loss_ese = sum_ese * inv_b;
    rec.loss_final = sum_final * inv_b;

    std::vector<int> all_pred, all_gt;
    std::size_t es_points = 0, es_correct = 0;
    for (std::size_t ci = 0; ci < n; ++ci) {
      const TrainCloud& tc = clouds[ci];
      const std::vector<int> sp_pred = argmax_rows(epoch_logits[ci]);
      const std::vector<int> pts =
          broadcast_labels(tc.graph.nodes, sp_pred, tc.cloud.size());
      all_pred.insert(all_pred.end(), pts.begin(), pts.end());
      all_gt.insert(all_gt.end(), tc.cloud.gt_labels.begin(),
                    tc.cloud.gt_labels.end());
      rec.s_count += tc.state.count(Membership::Supervised);
      rec.e_count += tc.state.count(Membership::Extended);
      rec.u_count += tc.state.count(Membership::Unsupervised);
      for (std::size_t s = 0; s < tc.graph.nodes.size(); ++s) {
        if (!tc.state.in_e(static_cast<int>(s))) continue;
        for (int pi : tc.graph.nodes[s].point_indices) {
          ++es_points;
          if (tc.cloud.gt_labels[pi] == tc.state.label[s]) ++es_correct;
        }
      }
    }
    const Metrics mm = evaluate(all_pred, all_gt, num_classes);
    rec.oa = mm.oa;
    rec.miou = mm.miou;
    rec.macc = mm.macc;
    if (es_points > 0)
      rec.oa_es =
          static_cast<double>(es_correct) / static_cast<double>(es_points);
    result.records.push_back(rec);
  }
  return result;
}

std::vector<int> predict(const PointCloud& cloud, const SuperpointGraph& graph,
                         const nn::ModelParams& model) {
  nn::NoGradGuard guard;
  const auto enc = nn::make_encoder_batch(cloud, graph.nodes);
  const auto gt = nn::make_graph_tensors(graph);
  Tensor feats = nn::encode_superpoints(enc, model.encoder);
  Tensor h = nn::gnn_forward(gt, feats, model.gnn);
  Tensor logits = nn::seg_logits(h, model.head_w, model.head_b);
  return broadcast_labels(graph.nodes, argmax_rows(to_matrix(logits)),
                          cloud.size());
}

std::string run_log_csv(const TrainConfig& config,
                        const std::vector<EpochRecord>& records) {
  std::ostringstream out;
  for (const auto& line : config_lines(config)) out << "# " << line << "\n";
  out << "epoch,L_s,L_es,L_ese,L_final,|S|,|E|,|U|,OA,mIoU,mAcc,OA_es\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << format_double(r.loss_s) << ','
        << format_double(r.loss_es) << ',' << format_double(r.loss_ese) << ','
        << format_double(r.loss_final) << ',' << r.s_count << ',' << r.e_count
        << ',' << r.u_count << ',' << format_double(r.oa) << ','
        << format_double(r.miou) << ',' << format_double(r.macc) << ',';
    if (r.oa_es) out << format_double(*r.oa_es);
    out << '\n';
  }
  return out.str();
}

std::string event_log_csv(const std::vector<StampedEvent>& events,
                          const std::vector<std::size_t>& cloud_id_offsets) {
  std::ostringstream out;
  out << "epoch,event,source,target,class,score\n";
  for (const auto& se : events) {
    const std::size_t base = cloud_id_offsets[se.cloud];
    const long long source =
        se.event.source >= 0
            ? static_cast<long long>(base) + se.event.source
            : -1;
    out << se.epoch << ',' << se.event.event << ',' << source << ','
        << static_cast<long long>(base) + se.event.target << ','
        << se.event.cls << ',' << format_double(se.event.score) << '\n';
  }
  return out.str();
}

std::string set_size_csv(const std::vector<EpochRecord>& records) {
  std::ostringstream out;
  out << "epoch,supervised_pct,extended_pct,unsupervised_pct\n";
  for (const auto& r : records) {
    const double total =
        static_cast<double>(r.s_count + r.e_count + r.u_count);
    out << r.epoch << ','
        << format_double(100.0 * static_cast<double>(r.s_count) / total) << ','
        << format_double(100.0 * static_cast<double>(r.e_count) / total) << ','
        << format_double(100.0 * static_cast<double>(r.u_count) / total)
        << '\n';
  }
  return out.str();
}

std::vector<std::size_t> cloud_id_offsets(
    const std::vector<TrainCloud>& clouds) {
  std::vector<std::size_t> offsets;
  offsets.reserve(clouds.size());
  std::size_t base = 0;
  for (const auto& tc : clouds) {
    offsets.push_back(base);
    base += tc.graph.num_nodes();
  }
  return offsets;
}

}  // namespace spgseg
