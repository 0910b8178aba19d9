#include "spgseg/point_cloud.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spgseg/rng.hpp"

namespace spgseg {

void PointCloud::validate() const {
  const std::size_t n = positions.size();
  if (n == 0) throw std::invalid_argument("point cloud is empty");
  if (colors.size() != n || gt_labels.size() != n)
    throw std::invalid_argument("point cloud field lengths differ");
  if (num_classes <= 0) throw std::invalid_argument("num_classes must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (gt_labels[i] < 0 || gt_labels[i] >= num_classes)
      throw std::invalid_argument("gt label out of range at point " +
                                  std::to_string(i));
  }
}

std::size_t SupervisionMask::count() const {
  std::size_t c = 0;
  for (bool b : supervised) c += b ? 1 : 0;
  return c;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

}  // namespace

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  PointCloud cloud;
  int declared_classes = -1;
  int max_label = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto toks = split_ws(line);
      if (!toks.empty() && toks[0] == "#classes") {
        if (toks.size() != 2)
          throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                   ": malformed #classes header");
        declared_classes = std::stoi(toks[1]);
        if (declared_classes <= 0)
          throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                   ": #classes must be positive");
      }
      continue;
    }
    auto toks = split_ws(line);
    if (toks.size() != 7)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 7 fields, got " +
                               std::to_string(toks.size()));
    double f[6];
    for (int k = 0; k < 6; ++k) {
      bool ok = false;
      f[k] = parse_double(toks[k], ok);
      if (!ok)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad numeric field '" + toks[k] + "'");
    }
    int label;
    try {
      std::size_t used = 0;
      label = std::stoi(toks[6], &used);
      if (used != toks[6].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad label '" + toks[6] + "'");
    }
    if (label < 0)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": negative label");
    if (declared_classes >= 0 && label >= declared_classes)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": label " + std::to_string(label) +
                               " out of range [0," +
                               std::to_string(declared_classes) + ")");
    cloud.positions.push_back({f[0], f[1], f[2]});
    cloud.colors.push_back({f[3], f[4], f[5]});
    cloud.gt_labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  if (cloud.positions.empty())
    throw std::runtime_error(path + ": no points");
  cloud.num_classes = declared_classes >= 0 ? declared_classes : max_label + 1;
  cloud.validate();
  return cloud;
}

void save_cloud(const PointCloud& cloud, const std::string& path) {
  cloud.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "#classes " << cloud.num_classes << "\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out << format_double(cloud.positions[i][0]) << ' '
        << format_double(cloud.positions[i][1]) << ' '
        << format_double(cloud.positions[i][2]) << ' '
        << format_double(cloud.colors[i][0]) << ' '
        << format_double(cloud.colors[i][1]) << ' '
        << format_double(cloud.colors[i][2]) << ' ' << cloud.gt_labels[i]
        << "\n";
  }
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

namespace {

// fixed palette; object classes get saturated hues
Vec3 class_base_color(int cls) {
  static const Vec3 palette[] = {
      {0.45, 0.45, 0.45},  // floor
      {0.85, 0.80, 0.70},  // walls
      {0.90, 0.10, 0.10}, {0.10, 0.75, 0.15}, {0.10, 0.20, 0.90},
      {0.95, 0.85, 0.10}, {0.85, 0.10, 0.85}, {0.10, 0.85, 0.85},
      {0.95, 0.55, 0.10}, {0.55, 0.30, 0.10},
  };
  constexpr int np = sizeof(palette) / sizeof(palette[0]);
  return palette[cls % np];
}

Vec3 jitter_color(rng::Engine& eng, const Vec3& base) {
  Vec3 c;
  for (int k = 0; k < 3; ++k) {
    double v = base[k] + rng::uniform(eng, -0.05, 0.05);
    c[k] = std::clamp(v, 0.0, 1.0);
  }
  return c;
}

void emit_point(PointCloud& cloud, rng::Engine& eng, const Vec3& pos, int cls) {
  cloud.positions.push_back(pos);
  cloud.colors.push_back(jitter_color(eng, class_base_color(cls)));
  cloud.gt_labels.push_back(cls);
}

}  // namespace

PointCloud gen_synthetic(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.num_classes < 2)
    throw std::invalid_argument("need at least 2 classes");
  if (spec.points_per_object < 10)
    throw std::invalid_argument("points_per_object must be >= 10");
  if (spec.num_objects < 0)
    throw std::invalid_argument("num_objects must be >= 0");
  if (spec.extent <= 0.0) throw std::invalid_argument("extent must be positive");
  if (spec.num_classes > spec.num_objects + 2)
    throw std::invalid_argument(
        "infeasible scene: classes exceed num_objects + 2");

  rng::Engine eng = rng::make_engine(seed);
  PointCloud cloud;
  cloud.num_classes = spec.num_classes;
  const double ex = spec.extent;
  const double zjit = 0.004 * ex;  // surface roughness
  const int ppo = spec.points_per_object;

  // floor, class 0
  for (int i = 0; i < 3 * ppo; ++i) {
    Vec3 p = {rng::uniform(eng, 0.0, ex), rng::uniform(eng, 0.0, ex),
              rng::normal(eng, 0.0, zjit)};
    emit_point(cloud, eng, p, 0);
  }

  // two walls (x=0 and y=0 planes), class 1
  const double wall_h = 0.55 * ex;
  for (int i = 0; i < ppo; ++i) {
    Vec3 p = {rng::normal(eng, 0.0, zjit), rng::uniform(eng, 0.0, ex),
              rng::uniform(eng, 0.0, wall_h)};
    emit_point(cloud, eng, p, 1);
  }
  for (int i = 0; i < ppo; ++i) {
    Vec3 p = {rng::uniform(eng, 0.0, ex), rng::normal(eng, 0.0, zjit),
              rng::uniform(eng, 0.0, wall_h)};
    emit_point(cloud, eng, p, 1);
  }

  // objects resting on the floor; shapes alternate box/sphere
  for (int k = 0; k < spec.num_objects; ++k) {
    const int cls =
        spec.num_classes > 2 ? 2 + (k % (spec.num_classes - 2)) : 1;
    const double cx = rng::uniform(eng, 0.15 * ex, 0.85 * ex);
    const double cy = rng::uniform(eng, 0.15 * ex, 0.85 * ex);
    const double s = rng::uniform(eng, 0.10 * ex, 0.18 * ex);
    const bool box = (k % 2 == 0);
    for (int i = 0; i < ppo; ++i) {
      Vec3 p;
      if (box) {
        // point on a random face of an axis-aligned cube of side s
        const int face = rng::below_int(eng, 6);
        const double u = rng::uniform(eng, -0.5, 0.5) * s;
        const double v = rng::uniform(eng, -0.5, 0.5) * s;
        const double w = 0.5 * s;
        switch (face) {
          case 0: p = {+w, u, v + w}; break;
          case 1: p = {-w, u, v + w}; break;
          case 2: p = {u, +w, v + w}; break;
          case 3: p = {u, -w, v + w}; break;
          case 4: p = {u, v, 2 * w}; break;
          default: p = {u, v, 0.0}; break;
        }
        p = {p[0] + cx, p[1] + cy, p[2]};
      } else {
        // point on a sphere of radius s/2 resting on the floor
        Vec3 d = {rng::normal(eng), rng::normal(eng), rng::normal(eng)};
        double dn = norm(d);
        if (dn < 1e-12) d = {0, 0, 1}, dn = 1.0;
        const double r = 0.5 * s;
        p = {cx + d[0] / dn * r, cy + d[1] / dn * r, r + d[2] / dn * r};
      }
      p[2] += rng::normal(eng, 0.0, zjit);
      emit_point(cloud, eng, p, cls);
    }
  }

  cloud.validate();
  return cloud;
}

SupervisionMask sample_supervision(const PointCloud& cloud, double rate,
                                   std::uint64_t seed) {
  cloud.validate();
  if (rate <= 0.0 || rate > 1.0)
    throw std::invalid_argument("supervision rate must be in (0,1]");

  const std::size_t n = cloud.size();
  const int c = cloud.num_classes;
  std::vector<std::vector<int>> by_class(c);
  for (std::size_t i = 0; i < n; ++i)
    by_class[cloud.gt_labels[i]].push_back(static_cast<int>(i));

  const long long budget = std::max(
      1LL, static_cast<long long>(std::floor(rate * static_cast<double>(n) / c)));

  SupervisionMask mask;
  mask.supervised.assign(n, false);
  rng::Engine eng = rng::make_engine(seed);
  for (int cls = 0; cls < c; ++cls) {
    const auto& pool = by_class[cls];
    if (pool.empty()) continue;
    const int take = static_cast<int>(
        std::min<long long>(budget, static_cast<long long>(pool.size())));
    auto pick = rng::sample_without_replacement(
        eng, static_cast<int>(pool.size()), take);
    for (int idx : pick) mask.supervised[pool[idx]] = true;
  }
  return mask;
}

}  // namespace spgseg
