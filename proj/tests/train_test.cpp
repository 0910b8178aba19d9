#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "spgseg/metrics.hpp"
#include "spgseg/rng.hpp"
#include "spgseg/train.hpp"

using namespace spgseg;

namespace {

std::vector<TrainCloud> make_clouds(int count, double rate,
                                    std::uint64_t seed) {
  SceneSpec spec;
  spec.num_objects = 3;
  spec.num_classes = 3;
  spec.points_per_object = 40;
  spec.extent = 6.0;
  PartitionParams pp;
  pp.voxel_size = 0.5;
  pp.normal_angle_tol = 0.3;
  pp.color_tol = 0.1;
  pp.min_sp_size = 3;

  std::vector<TrainCloud> clouds;
  for (int k = 0; k < count; ++k) {
    PointCloud cloud = gen_synthetic(spec, rng::mix(seed, 10 + k));
    SupervisionMask mask = sample_supervision(cloud, rate, rng::mix(seed, 50 + k));
    clouds.push_back(prepare_cloud(std::move(cloud), pp, 3, mask));
  }
  return clouds;
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 6;
  c.interval_m = 3;
  c.batch_size = 2;
  c.embed_dim = 6;
  c.hidden = 6;
  c.t_steps = 2;
  c.knn = 3;
  c.seed = 21;
  return c;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string f;
  while (std::getline(in, f, ',')) fields.push_back(f);
  return fields;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("an empty config file keeps every default") {
  TrainConfig c = parse_config_text("");
  CHECK(c.epochs == 400);
  CHECK(c.lr == 0.01);
  CHECK(c.batch_size == 4);
  CHECK(c.lambda1 == 1.0);
  CHECK(c.lambda2 == 1.0);
  CHECK(c.tau == 0.9);
  CHECK(c.drop_fraction == 0.05);
  CHECK(c.interval_m == 40);
  CHECK(c.seed == 1);
  CHECK(c.embed_dim == 32);
  CHECK(c.hidden == 32);
  CHECK(c.t_steps == 3);
  CHECK(c.knn == 5);
  CHECK(c.rate == 0.001);
  CHECK(c.voxel_size == 0.5);
}

TEST_CASE("config lines tolerate equals signs and comments") {
  TrainConfig c = parse_config_text(
      "epochs 12\n"
      "lr = 0.05\n"
      "# a full comment line\n"
      "\n"
      "tau=0.85 # trailing note\n");
  CHECK(c.epochs == 12);
  CHECK(c.lr == 0.05);
  CHECK(c.tau == 0.85);
  CHECK(c.interval_m == 40);  // untouched default
}

TEST_CASE("config parsing reports what went wrong") {
  CHECK_THROWS_WITH_AS(parse_config_text("momentum 0.9\n"),
                       doctest::Contains("unknown config key 'momentum'"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("epochs 3.5\n"),
                       doctest::Contains("bad integer for config key 'epochs'"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("lr abc\n"),
                       doctest::Contains("bad number for config key 'lr'"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("# ok\nepochs 10 extra\n"),
                       doctest::Contains("config line 2: expected 'key value'"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("tau 1.5\n"),
                       doctest::Contains("config: tau must be in (0,1)"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("epochs 0\n"),
                       doctest::Contains("config: epochs must be >= 1"),
                       std::runtime_error);
}

TEST_CASE("the config echo is a parseable fixed point") {
  TrainConfig c;
  c.epochs = 77;
  c.lr = 0.025;
  c.seed = 9;
  std::vector<std::string> lines = config_lines(c);
  REQUIRE(lines.size() == 18);
  CHECK(lines[0] == "epochs 77");
  CHECK(lines[1] == "lr 0.025");
  CHECK(lines[8] == "seed 9");

  std::string joined;
  for (const auto& l : lines) joined += l + "\n";
  TrainConfig back = parse_config_text(joined);
  CHECK(config_lines(back) == lines);
}

TEST_CASE("perfect predictions score one everywhere") {
  const std::vector<int> labels = {0, 1, 2, 0, 1};
  Metrics m = evaluate(labels, labels, 3);
  CHECK(m.oa == 1.0);
  CHECK(m.miou == 1.0);
  CHECK(m.macc == 1.0);
  for (double iou : m.per_class_iou) CHECK(iou == 1.0);
}

TEST_CASE("a symmetric two class confusion gives known scores") {
  // confusion [gt][pred] = [[3,1],[1,3]]
  const std::vector<int> gt = {0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<int> pred = {0, 0, 0, 1, 1, 1, 1, 0};
  Metrics m = evaluate(pred, gt, 2);
  CHECK(m.oa == 0.75);
  CHECK(m.per_class_iou[0] == 3.0 / 5.0);
  CHECK(m.per_class_iou[1] == 3.0 / 5.0);
  CHECK(m.miou == 3.0 / 5.0);
  CHECK(m.macc == 0.75);
}

TEST_CASE("classes without ground truth support are excluded") {
  const std::vector<int> gt = {0, 0, 1};
  const std::vector<int> pred = {0, 1, 1};
  Metrics m = evaluate(pred, gt, 4);
  CHECK(m.per_class_iou[0] == 0.5);
  CHECK(m.per_class_iou[1] == 0.5);
  CHECK(m.per_class_iou[2] == -1.0);
  CHECK(m.per_class_iou[3] == -1.0);
  CHECK(m.miou == 0.5);
  CHECK(m.macc == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("evaluate rejects broken input") {
  CHECK_THROWS_WITH_AS(evaluate({0, 1}, {0}, 2),
                       doctest::Contains("length mismatch"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(evaluate({}, {}, 2), doctest::Contains("empty input"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(evaluate({5}, {0}, 2),
                       doctest::Contains("class id out of range"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(evaluate({0}, {-1}, 2),
                       doctest::Contains("class id out of range"),
                       std::invalid_argument);
}

TEST_CASE("superpoint classes broadcast to their member points") {
  std::vector<Superpoint> sps(2);
  sps[0].id = 0;
  sps[0].point_indices = {0, 2};
  sps[1].id = 1;
  sps[1].point_indices = {1};
  CHECK(broadcast_labels(sps, {2, 0}, 4) == std::vector<int>{2, 0, 2, -1});
  CHECK_THROWS_WITH_AS(broadcast_labels(sps, {2}, 4),
                       doctest::Contains("class count mismatch"),
                       std::invalid_argument);
}

TEST_CASE("extended accuracy counts matching member points") {
  std::vector<Superpoint> sps(3);
  sps[0].point_indices = {0, 1, 2, 3, 4};
  sps[1].point_indices = {5, 6, 7, 8, 9};
  sps[2].point_indices = {10};
  SupervisionState state;
  state.membership = {Membership::Extended, Membership::Extended,
                      Membership::Supervised};
  state.label = {1, 0, 0};
  const std::vector<int> gt = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  auto oa = oa_extended(state, sps, gt);
  REQUIRE(oa.has_value());
  CHECK(*oa == doctest::Approx(0.9).epsilon(1e-12));

  state.membership[0] = Membership::Unsupervised;
  state.membership[1] = Membership::Unsupervised;
  state.label[0] = state.label[1] = -1;
  CHECK_FALSE(oa_extended(state, sps, gt).has_value());
}

TEST_CASE("training twice from the same inputs is bit identical") {
  TrainConfig config = small_config();
  auto run = [&] {
    auto clouds = make_clouds(2, 0.02, 77);
    return train(clouds, config);
  };
  TrainResult a = run();
  TrainResult b = run();

  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].loss_s == b.records[i].loss_s);
    CHECK(a.records[i].loss_final == b.records[i].loss_final);
    CHECK(a.records[i].oa == b.records[i].oa);
    CHECK(a.records[i].e_count == b.records[i].e_count);
  }
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].epoch == b.events[i].epoch);
    CHECK(a.events[i].cloud == b.events[i].cloud);
    CHECK(a.events[i].event.event == b.events[i].event.event);
    CHECK(a.events[i].event.target == b.events[i].event.target);
    CHECK(a.events[i].event.score == b.events[i].event.score);
  }
  auto pa = a.model.parameters();
  auto pb = b.model.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i].tensor.values() == pb[i].tensor.values());
}

TEST_CASE("nothing is extended before the first whole interval") {
  TrainConfig config = small_config();
  config.epochs = 5;
  config.interval_m = 40;
  auto clouds = make_clouds(1, 0.02, 31);
  TrainResult r = train(clouds, config);
  REQUIRE(r.records.size() == 5);
  CHECK(r.events.empty());
  for (const auto& rec : r.records) {
    CHECK(rec.e_count == 0);
    CHECK(rec.loss_es == 0.0);
    CHECK(rec.loss_ese == 0.0);
    CHECK(rec.loss_final == rec.loss_s);
    CHECK_FALSE(rec.oa_es.has_value());
  }
}

TEST_CASE("zero lambdas keep the attention path out of the optimizer") {
  TrainConfig config = small_config();
  config.lambda1 = 0.0;
  config.lambda2 = 0.0;
  config.tau = 0.4;  // provoke extensions early
  config.drop_fraction = 0.0;
  config.epochs = 8;
  config.interval_m = 2;

  auto with_prop = make_clouds(2, 0.02, 5);
  TrainResult a = train(with_prop, config);

  TrainConfig off = config;
  off.interval_m = 100;  // never propagates
  auto without = make_clouds(2, 0.02, 5);
  TrainResult b = train(without, off);

  // the comparison only means something if run A actually extended
  bool extended = false;
  for (const auto& rec : a.records) extended |= rec.e_count > 0;
  REQUIRE(extended);

  for (std::size_t i = 0; i < a.records.size(); ++i)
    CHECK(a.records[i].loss_s == b.records[i].loss_s);
  auto pa = a.model.parameters();
  auto pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i].tensor.values() == pb[i].tensor.values());
}

TEST_CASE("the combined loss is the weighted sum of its parts") {
  TrainConfig config = small_config();
  config.lambda1 = 0.7;
  config.lambda2 = 0.3;
  config.tau = 0.4;
  config.epochs = 8;
  config.interval_m = 2;
  auto clouds = make_clouds(2, 0.02, 13);
  TrainResult r = train(clouds, config);

  bool saw_attention = false;
  for (const auto& rec : r.records) {
    saw_attention |= rec.loss_es != 0.0;
    CHECK(std::abs(rec.loss_final -
                   (rec.loss_s + 0.7 * rec.loss_es + 0.3 * rec.loss_ese)) <
          1e-9);
  }
  REQUIRE(saw_attention);
}

TEST_CASE("the extended set only changes at whole intervals") {
  TrainConfig config = small_config();
  config.tau = 0.4;
  config.epochs = 9;
  config.interval_m = 3;
  auto clouds = make_clouds(2, 0.02, 19);
  TrainResult r = train(clouds, config);

  for (std::size_t i = 0; i < r.records.size(); ++i) {
    CHECK(r.records[i].epoch == static_cast<int>(i) + 1);
    const std::size_t prev = i == 0 ? 0 : r.records[i - 1].e_count;
    if (r.records[i].e_count != prev)
      CHECK(r.records[i].epoch % config.interval_m == 0);
  }
  for (const auto& se : r.events) CHECK(se.epoch % config.interval_m == 0);
}

TEST_CASE("the run log embeds the config above a row per epoch") {
  TrainConfig config = small_config();
  auto clouds = make_clouds(1, 0.02, 23);
  TrainResult r = train(clouds, config);

  const std::string csv = run_log_csv(config, r.records);
  auto lines = split_lines(csv);
  REQUIRE(lines.size() == 18 + 1 + r.records.size());
  for (int i = 0; i < 18; ++i) {
    REQUIRE(lines[i].size() > 2);
    CHECK(lines[i].substr(0, 2) == "# ");
  }
  CHECK(lines[0] == "# epochs 6");
  CHECK(lines[18] == "epoch,L_s,L_es,L_ese,L_final,|S|,|E|,|U|,OA,mIoU,mAcc,OA_es");
  auto first = split_csv(lines[19]);
  REQUIRE(first.size() >= 11);
  CHECK(first[0] == "1");
}

TEST_CASE("set size percentages always sum to one hundred") {
  TrainConfig config = small_config();
  config.tau = 0.4;
  auto clouds = make_clouds(2, 0.02, 29);
  TrainResult r = train(clouds, config);

  auto lines = split_lines(set_size_csv(r.records));
  REQUIRE(lines.size() == r.records.size() + 1);
  CHECK(lines[0] == "epoch,supervised_pct,extended_pct,unsupervised_pct");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = split_csv(lines[i]);
    REQUIRE(f.size() == 4);
    const double sum = std::stod(f[1]) + std::stod(f[2]) + std::stod(f[3]);
    CHECK(std::abs(sum - 100.0) < 1e-9);
  }
}

TEST_CASE("event rows use globally unique superpoint ids") {
  auto clouds = make_clouds(2, 0.02, 37);
  const auto offsets = cloud_id_offsets(clouds);
  REQUIRE(offsets.size() == 2);
  CHECK(offsets[0] == 0);
  CHECK(offsets[1] == clouds[0].graph.num_nodes());

  std::vector<StampedEvent> events;
  events.push_back({4, {"extend", 0, 1, 2, 0.95}, 0});
  events.push_back({8, {"drop", -1, 3, 0, 1.25}, 1});
  const std::string csv = event_log_csv(events, offsets);
  auto lines = split_lines(csv);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "epoch,event,source,target,class,score");
  CHECK(lines[1] == "4,extend,0,1,2,0.95");
  CHECK(lines[2] == "8,drop,-1," + std::to_string(offsets[1] + 3) + ",0,1.25");
}

TEST_CASE("prediction ignores the attention parameters") {
  TrainConfig config = small_config();
  config.epochs = 3;
  auto clouds = make_clouds(1, 0.02, 41);
  TrainResult r = train(clouds, config);

  const std::vector<int> before =
      predict(clouds[0].cloud, clouds[0].graph, r.model);
  REQUIRE(before.size() == clouds[0].cloud.size());

  for (auto& v : r.model.phi.w1.leaf_values()) v += 3.0;
  for (auto& v : r.model.head_es_w.leaf_values()) v = -v + 0.5;
  for (auto& v : r.model.beta.b2.leaf_values()) v = 9.0;
  CHECK(predict(clouds[0].cloud, clouds[0].graph, r.model) == before);
}

}  // TEST_SUITE
