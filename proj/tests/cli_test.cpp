#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <doctest.h>

#include "spgseg/point_cloud.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace spgseg;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(SPGSEG_BIN) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  RunResult r;
  if (WIFEXITED(raw)) r.code = WEXITSTATUS(raw);
  r.out = testutil::read_text(out);
  r.err = testutil::read_text(err);
  return r;
}

// two small scenes the train/eval tests share
void prepare_scenes(const fs::path& dir) {
  RunResult r = run_cli("gen --count 2 --classes 3 --objects 3 "
                        "--points-per-object 40 --extent 6 --seed 5 --out " +
                            (dir / "scenes").string(),
                        dir);
  REQUIRE(r.code == 0);
}

std::string small_config_text() {
  return "epochs 4\ninterval_m 2\ntau 0.5\nembed_dim 6\nhidden 6\n"
         "t_steps 2\nknn 3\nrate 0.05\nbatch_size 2\n";
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen writes the requested scenes and repeats bit for bit") {
  const fs::path dir = testutil::scratch_dir("cli_gen");
  prepare_scenes(dir);

  const fs::path s0 = dir / "scenes" / "scene_0.txt";
  const fs::path s1 = dir / "scenes" / "scene_1.txt";
  REQUIRE(fs::exists(s0));
  REQUIRE(fs::exists(s1));

  PointCloud cloud = load_cloud(s0.string());
  CHECK(cloud.size() == (3 + 2 + 3) * 40);
  CHECK(cloud.num_classes == 3);
  load_cloud(s1.string()).validate();

  RunResult again = run_cli(
      "gen --count 2 --classes 3 --objects 3 --points-per-object 40 "
      "--extent 6 --seed 5 --out " + (dir / "again").string(),
      dir);
  REQUIRE(again.code == 0);
  CHECK(contains(again.out, "wrote"));
  CHECK(testutil::read_text(dir / "again" / "scene_0.txt") ==
        testutil::read_text(s0));

  RunResult other = run_cli(
      "gen --count 1 --classes 3 --objects 3 --points-per-object 40 "
      "--extent 6 --seed 6 --out " + (dir / "other").string(),
      dir);
  REQUIRE(other.code == 0);
  CHECK(testutil::read_text(dir / "other" / "scene_0.txt") !=
        testutil::read_text(s0));
}

TEST_CASE("partition dumps the graph to stdout or a file") {
  const fs::path dir = testutil::scratch_dir("cli_partition");
  prepare_scenes(dir);
  const std::string scene = (dir / "scenes" / "scene_0.txt").string();

  RunResult r = run_cli("partition " + scene, dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.substr(0, 7) == "node 0 ");
  CHECK(contains(r.out, "\nedge "));

  const fs::path dump = dir / "graph.txt";
  RunResult f = run_cli("partition " + scene + " --out " + dump.string(), dir);
  REQUIRE(f.code == 0);
  CHECK(f.out.empty());
  CHECK(testutil::read_text(dump) == r.out);
}

TEST_CASE("train writes logs plus a checkpoint and reruns byte identical") {
  const fs::path dir = testutil::scratch_dir("cli_train");
  prepare_scenes(dir);
  const std::string scenes = (dir / "scenes" / "scene_0.txt").string() + " " +
                             (dir / "scenes" / "scene_1.txt").string();
  testutil::write_text(dir / "cfg.txt", small_config_text());

  const std::string common =
      "train " + scenes + " --config " + (dir / "cfg.txt").string();
  RunResult a = run_cli(common + " --out " + (dir / "run1").string(), dir);
  REQUIRE(a.code == 0);
  CHECK(contains(a.out, "epochs 4"));  // config echo
  CHECK(contains(a.out, "final OA "));

  const std::string log1 = testutil::read_text(dir / "run1" / "run_log.csv");
  CHECK(log1.substr(0, 11) == "# epochs 4\n");
  CHECK(contains(log1, "epoch,L_s,L_es,L_ese,L_final"));
  const std::string events1 = testutil::read_text(dir / "run1" / "events.csv");
  CHECK(events1.substr(0, 38) == "epoch,event,source,target,class,score\n");
  const std::string ckpt1 =
      testutil::read_text(dir / "run1" / "checkpoint.txt");
  CHECK(ckpt1.substr(0, 20) == "spgseg-checkpoint 1\n");

  RunResult b = run_cli(common + " --out " + (dir / "run2").string(), dir);
  REQUIRE(b.code == 0);
  CHECK(testutil::read_text(dir / "run2" / "run_log.csv") == log1);
  CHECK(testutil::read_text(dir / "run2" / "events.csv") == events1);
  CHECK(testutil::read_text(dir / "run2" / "checkpoint.txt") == ckpt1);

  // a different seed changes the run
  RunResult c = run_cli(common + " --seed 9 --out " + (dir / "run3").string(),
                        dir);
  REQUIRE(c.code == 0);
  CHECK(contains(c.out, "seed 9"));
  CHECK(testutil::read_text(dir / "run3" / "run_log.csv") != log1);
}

TEST_CASE("train fails loudly on a broken config") {
  const fs::path dir = testutil::scratch_dir("cli_badcfg");
  prepare_scenes(dir);
  testutil::write_text(dir / "cfg.txt", "bogus 1\n");
  RunResult r = run_cli("train " + (dir / "scenes" / "scene_0.txt").string() +
                            " --config " + (dir / "cfg.txt").string() +
                            " --out " + (dir / "run").string(),
                        dir);
  CHECK(r.code == 1);
  CHECK(contains(r.err, "error:"));
  CHECK(contains(r.err, "unknown config key 'bogus'"));
  CHECK_FALSE(fs::exists(dir / "run" / "run_log.csv"));
}

TEST_CASE("eval scores a checkpoint and guards the class count") {
  const fs::path dir = testutil::scratch_dir("cli_eval");
  prepare_scenes(dir);
  testutil::write_text(dir / "cfg.txt", small_config_text());
  const std::string scene = (dir / "scenes" / "scene_0.txt").string();
  RunResult t = run_cli("train " + scene + " --config " +
                            (dir / "cfg.txt").string() + " --out " +
                            (dir / "run").string(),
                        dir);
  REQUIRE(t.code == 0);
  const std::string ckpt = (dir / "run" / "checkpoint.txt").string();

  RunResult e = run_cli("eval " + scene + " --checkpoint " + ckpt + " --out " +
                            (dir / "metrics.csv").string(),
                        dir);
  REQUIRE(e.code == 0);
  CHECK(contains(e.out, "OA "));
  CHECK(contains(e.out, "mIoU "));
  const std::string csv = testutil::read_text(dir / "metrics.csv");
  CHECK(csv.substr(0, 13) == "metric,value\n");
  CHECK(contains(csv, "OA,"));
  CHECK(contains(csv, "mAcc,"));

  RunResult g = run_cli("gen --count 1 --classes 2 --objects 3 "
                        "--points-per-object 40 --extent 6 --seed 7 --out " +
                            (dir / "two").string(),
                        dir);
  REQUIRE(g.code == 0);
  RunResult bad = run_cli("eval " + (dir / "two" / "scene_0.txt").string() +
                              " --checkpoint " + ckpt,
                          dir);
  CHECK(bad.code == 1);
  CHECK(contains(bad.err, "checkpoint expects 3 classes"));
}

TEST_CASE("trace reports events and set growth") {
  const fs::path dir = testutil::scratch_dir("cli_trace");
  prepare_scenes(dir);
  testutil::write_text(dir / "cfg.txt", small_config_text());
  RunResult r = run_cli("trace " + (dir / "scenes" / "scene_0.txt").string() +
                            " " + (dir / "scenes" / "scene_1.txt").string() +
                            " --config " + (dir / "cfg.txt").string() +
                            " --out " + (dir / "t").string(),
                        dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.substr(0, 7) == "events ");

  CHECK(testutil::read_text(dir / "t" / "events.csv").substr(0, 38) ==
        "epoch,event,source,target,class,score\n");
  std::istringstream sizes(testutil::read_text(dir / "t" / "set_sizes.csv"));
  std::string line;
  REQUIRE(std::getline(sizes, line));
  CHECK(line == "epoch,supervised_pct,extended_pct,unsupervised_pct");
  int rows = 0;
  while (std::getline(sizes, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string epoch, s, e, u;
    REQUIRE(std::getline(ls, epoch, ','));
    REQUIRE(std::getline(ls, s, ','));
    REQUIRE(std::getline(ls, e, ','));
    REQUIRE(std::getline(ls, u, ','));
    CHECK(std::abs(std::stod(s) + std::stod(e) + std::stod(u) - 100.0) < 1e-9);
  }
  CHECK(rows == 4);  // one per epoch
}

TEST_CASE("the command line rejects missing or unknown subcommands") {
  const fs::path dir = testutil::scratch_dir("cli_usage");
  RunResult none = run_cli("", dir);
  CHECK(none.code == 1);
  CHECK(contains(none.err, "error:"));

  RunResult unknown = run_cli("frobnicate", dir);
  CHECK(unknown.code == 1);
  CHECK(contains(unknown.err, "error:"));
}

}  // TEST_SUITE
