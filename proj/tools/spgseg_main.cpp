#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "spgseg/checkpoint.hpp"
#include "spgseg/metrics.hpp"
#include "spgseg/model.hpp"
#include "spgseg/partition.hpp"
#include "spgseg/point_cloud.hpp"
#include "spgseg/rng.hpp"
#include "spgseg/train.hpp"
#include "spgseg/util.hpp"

namespace fs = std::filesystem;
using namespace spgseg;

namespace {

PartitionParams partition_params(const TrainConfig& c) {
  PartitionParams p;
  p.voxel_size = c.voxel_size;
  p.normal_angle_tol = c.normal_angle_tol;
  p.color_tol = c.color_tol;
  p.min_sp_size = c.min_sp_size;
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<TrainCloud> prepare_clouds(const std::vector<std::string>& paths,
                                       const TrainConfig& config) {
  std::vector<TrainCloud> out;
  const PartitionParams pp = partition_params(config);
  const std::uint64_t base = rng::mix(config.seed, 3);
  for (std::size_t k = 0; k < paths.size(); ++k) {
    PointCloud cloud = load_cloud(paths[k]);
    const SupervisionMask mask =
        sample_supervision(cloud, config.rate, rng::mix(base, k));
    out.push_back(prepare_cloud(std::move(cloud), pp, config.knn, mask));
  }
  return out;
}

std::map<std::string, std::string> checkpoint_meta(const TrainConfig& config,
                                                   int num_classes) {
  std::map<std::string, std::string> meta;
  for (const auto& line : config_lines(config)) {
    const auto sp = line.find(' ');
    meta[line.substr(0, sp)] = line.substr(sp + 1);
  }
  meta["num_classes"] = std::to_string(num_classes);
  return meta;
}

TrainConfig config_from_meta(const std::map<std::string, std::string>& meta) {
  TrainConfig config;
  for (const auto& [key, value] : meta) {
    if (key == "num_classes") continue;
    apply_config_entry(config, key, value);
  }
  return config;
}

void save_model(const fs::path& path, nn::ModelParams& model,
                const TrainConfig& config) {
  auto params = model.parameters();
  std::vector<const nn::Parameter*> ptrs;
  ptrs.reserve(params.size());
  for (const auto& p : params) ptrs.push_back(&p);
  nn::save_checkpoint(path.string(),
                      checkpoint_meta(config, model.config.num_classes), ptrs);
}

TrainConfig load_config(const std::string& config_path, bool seed_set,
                        std::uint64_t seed, bool rate_set, double rate) {
  TrainConfig config =
      config_path.empty() ? TrainConfig{} : parse_config(config_path);
  if (seed_set) config.seed = seed;
  if (rate_set) config.rate = rate;
  config.validate();
  return config;
}

void print_metrics(const Metrics& m) {
  std::cout << "OA " << format_double(m.oa) << "\n"
            << "mIoU " << format_double(m.miou) << "\n"
            << "mAcc " << format_double(m.macc) << "\n";
  for (std::size_t k = 0; k < m.per_class_iou.size(); ++k)
    if (m.per_class_iou[k] >= 0)
      std::cout << "IoU_" << k << " " << format_double(m.per_class_iou[k])
                << "\n";
}

std::string metrics_csv(const Metrics& m) {
  std::string out = "metric,value\n";
  out += "OA," + format_double(m.oa) + "\n";
  out += "mIoU," + format_double(m.miou) + "\n";
  out += "mAcc," + format_double(m.macc) + "\n";
  for (std::size_t k = 0; k < m.per_class_iou.size(); ++k)
    if (m.per_class_iou[k] >= 0)
      out += "IoU_" + std::to_string(k) + "," +
             format_double(m.per_class_iou[k]) + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised superpoint-graph segmentation"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write synthetic scenes");
  int gen_count = 3, gen_classes = 4, gen_objects = 6, gen_points = 180;
  std::uint64_t gen_seed = 1;
  double gen_extent = 8.0;
  std::string gen_out;
  gen->add_option("--count", gen_count, "number of scenes");
  gen->add_option("--classes", gen_classes, "classes per scene");
  gen->add_option("--objects", gen_objects, "objects per scene");
  gen->add_option("--points-per-object", gen_points, "sampling density");
  gen->add_option("--extent", gen_extent, "scene side length");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->callback([&] {
    SceneSpec spec;
    spec.num_classes = gen_classes;
    spec.num_objects = gen_objects;
    spec.points_per_object = gen_points;
    spec.extent = gen_extent;
    fs::create_directories(gen_out);
    for (int k = 0; k < gen_count; ++k) {
      const PointCloud cloud =
          gen_synthetic(spec, rng::mix(gen_seed, static_cast<std::uint64_t>(k)));
      const fs::path path =
          fs::path(gen_out) / ("scene_" + std::to_string(k) + ".txt");
      save_cloud(cloud, path.string());
      std::cout << "wrote " << path.string() << " (" << cloud.size()
                << " points)\n";
    }
  });

  // partition
  auto* part = app.add_subcommand("partition", "superpoint graph dump");
  std::string part_cloud, part_config, part_out;
  part->add_option("cloud", part_cloud, "input cloud")->required();
  part->add_option("--config", part_config, "config file");
  part->add_option("--out", part_out, "dump file (default stdout)");
  part->callback([&] {
    const TrainConfig config = load_config(part_config, false, 0, false, 0);
    const PointCloud cloud = load_cloud(part_cloud);
    SuperpointGraph graph =
        build_graph(partition_cloud(cloud, partition_params(config)),
                    config.knn);
    SupervisionMask empty_mask;
    empty_mask.supervised.assign(cloud.size(), false);
    const SuperpointLabels labels =
        superpoint_labels(graph.nodes, cloud, empty_mask);
    const std::string dump = dump_graph(graph, labels);
    if (part_out.empty())
      std::cout << dump;
    else
      write_file(part_out, dump);
  });

  // train
  auto* tr = app.add_subcommand("train", "train on labeled clouds");
  std::vector<std::string> tr_clouds;
  std::string tr_config, tr_out;
  std::uint64_t tr_seed = 0;
  double tr_rate = 0.0;
  tr->add_option("clouds", tr_clouds, "input clouds")->required();
  tr->add_option("--config", tr_config, "config file");
  tr->add_option("--out", tr_out, "output directory")->required();
  auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "seed override");
  auto* tr_rate_opt = tr->add_option("--rate", tr_rate, "supervision rate");
  tr->callback([&] {
    const TrainConfig config =
        load_config(tr_config, tr_seed_opt->count() > 0, tr_seed,
                    tr_rate_opt->count() > 0, tr_rate);
    for (const auto& line : config_lines(config)) std::cout << line << "\n";
    fs::create_directories(tr_out);
    std::vector<TrainCloud> clouds = prepare_clouds(tr_clouds, config);
    TrainResult result = train(clouds, config);
    write_file(fs::path(tr_out) / "run_log.csv",
               run_log_csv(config, result.records));
    write_file(fs::path(tr_out) / "events.csv",
               event_log_csv(result.events, cloud_id_offsets(clouds)));
    save_model(fs::path(tr_out) / "checkpoint.txt", result.model, config);
    const EpochRecord& last = result.records.back();
    std::cout << "final OA " << format_double(last.oa) << " mIoU "
              << format_double(last.miou) << " mAcc "
              << format_double(last.macc) << "\n";
  });

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::vector<std::string> ev_clouds;
  std::string ev_ckpt, ev_config, ev_out;
  ev->add_option("clouds", ev_clouds, "input clouds")->required();
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--config", ev_config, "config file (partition overrides)");
  ev->add_option("--out", ev_out, "metrics CSV path");
  ev->callback([&] {
    const nn::LoadedCheckpoint ckpt = nn::load_checkpoint(ev_ckpt);
    const nn::ModelParams model = nn::model_from_checkpoint(ckpt);
    const TrainConfig config =
        ev_config.empty() ? config_from_meta(ckpt.meta) : parse_config(ev_config);
    std::vector<int> all_pred, all_gt;
    for (const auto& path : ev_clouds) {
      const PointCloud cloud = load_cloud(path);
      if (cloud.num_classes != model.config.num_classes)
        throw std::runtime_error("checkpoint expects " +
                                 std::to_string(model.config.num_classes) +
                                 " classes, " + path + " has " +
                                 std::to_string(cloud.num_classes));
      const SuperpointGraph graph =
          build_graph(partition_cloud(cloud, partition_params(config)),
                      config.knn);
      const std::vector<int> pred = predict(cloud, graph, model);
      all_pred.insert(all_pred.end(), pred.begin(), pred.end());
      all_gt.insert(all_gt.end(), cloud.gt_labels.begin(),
                    cloud.gt_labels.end());
    }
    const Metrics m = evaluate(all_pred, all_gt, model.config.num_classes);
    print_metrics(m);
    if (!ev_out.empty()) write_file(ev_out, metrics_csv(m));
  });

  // trace
  auto* trc = app.add_subcommand("trace", "propagation growth instrumentation");
  std::vector<std::string> trc_clouds;
  std::string trc_config, trc_out;
  std::uint64_t trc_seed = 0;
  double trc_rate = 0.0;
  trc->add_option("clouds", trc_clouds, "input clouds")->required();
  trc->add_option("--config", trc_config, "config file");
  trc->add_option("--out", trc_out, "output directory")->required();
  auto* trc_seed_opt = trc->add_option("--seed", trc_seed, "seed override");
  auto* trc_rate_opt = trc->add_option("--rate", trc_rate, "supervision rate");
  trc->callback([&] {
    const TrainConfig config =
        load_config(trc_config, trc_seed_opt->count() > 0, trc_seed,
                    trc_rate_opt->count() > 0, trc_rate);
    fs::create_directories(trc_out);
    std::vector<TrainCloud> clouds = prepare_clouds(trc_clouds, config);
    const TrainResult result = train(clouds, config);
    write_file(fs::path(trc_out) / "events.csv",
               event_log_csv(result.events, cloud_id_offsets(clouds)));
    write_file(fs::path(trc_out) / "set_sizes.csv",
               set_size_csv(result.records));
    std::cout << "events " << result.events.size() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
