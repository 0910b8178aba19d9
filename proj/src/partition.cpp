#include "spgseg/partition.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace spgseg {

bool SuperpointGraph::is_connected() const {
  if (nodes.empty()) return true;
  std::vector<char> seen(nodes.size(), 0);
  std::deque<int> queue = {0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        queue.push_back(v);
      }
    }
  }
  return reached == nodes.size();
}

std::size_t SuperpointLabels::count_supervised() const {
  std::size_t c = 0;
  for (bool b : supervised) c += b ? 1 : 0;
  return c;
}

namespace {

struct VoxelKey {
  long long x, y, z;
  bool operator<(const VoxelKey& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
};

VoxelKey voxel_of(const Vec3& p, double vs) {
  return {static_cast<long long>(std::floor(p[0] / vs)),
          static_cast<long long>(std::floor(p[1] / vs)),
          static_cast<long long>(std::floor(p[2] / vs))};
}

// k nearest neighbor indices of each point (excluding self), ties by index
std::vector<std::vector<int>> knn_points(const std::vector<Vec3>& pts, int k) {
  const int n = static_cast<int>(pts.size());
  std::vector<std::vector<int>> out(n);
  std::vector<std::pair<double, int>> dist;
  for (int i = 0; i < n; ++i) {
    dist.clear();
    dist.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back(squared_distance(pts[i], pts[j]), j);
    }
    const int take = std::min(k, static_cast<int>(dist.size()));
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    out[i].reserve(take);
    for (int t = 0; t < take; ++t) out[i].push_back(dist[t].second);
  }
  return out;
}

Vec3 fit_plane_normal(const std::vector<Vec3>& pts,
                      const std::vector<int>& members) {
  if (members.size() < 3) return {0, 0, 1};
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int m : members) mean += Eigen::Vector3d(pts[m][0], pts[m][1], pts[m][2]);
  mean /= static_cast<double>(members.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int m : members) {
    Eigen::Vector3d d = Eigen::Vector3d(pts[m][0], pts[m][1], pts[m][2]) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  Eigen::Vector3d nv = solver.eigenvectors().col(0);  // smallest eigenvalue
  if (nv.norm() < 1e-12) return {0, 0, 1};
  nv.normalize();
  // orient toward +z, then +y, then +x
  if (nv.z() < 0)
    nv = -nv;
  else if (nv.z() == 0) {
    if (nv.y() < 0)
      nv = -nv;
    else if (nv.y() == 0 && nv.x() < 0)
      nv = -nv;
  }
  return {nv.x(), nv.y(), nv.z()};
}

double angle_between(const Vec3& a, const Vec3& b) {
  const double d = std::clamp(dot(a, b), -1.0, 1.0);
  return std::acos(d);
}

double color_distance(const Vec3& a, const Vec3& b) {
  return norm(a - b);
}

struct Region {
  std::vector<int> members;
  Vec3 centroid = {0, 0, 0};
  bool alive = true;
};

Vec3 mean_position(const std::vector<Vec3>& pts, const std::vector<int>& ids) {
  Vec3 s = {0, 0, 0};
  for (int i : ids) s = s + pts[i];
  return s * (1.0 / static_cast<double>(ids.size()));
}

}  // namespace

std::vector<Vec3> estimate_normals(const PointCloud& cloud) {
  const auto neighbors = knn_points(cloud.positions, 10);
  std::vector<Vec3> normals(cloud.size());
  std::vector<int> members;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    members.assign(neighbors[i].begin(), neighbors[i].end());
    members.push_back(static_cast<int>(i));
    normals[i] = fit_plane_normal(cloud.positions, members);
  }
  return normals;
}

std::vector<Superpoint> partition_cloud(const PointCloud& cloud,
                                        const PartitionParams& params) {
  cloud.validate();
  if (params.voxel_size <= 0.0)
    throw std::invalid_argument("voxel_size must be positive");

  const int n = static_cast<int>(cloud.size());
  const auto normals = estimate_normals(cloud);

  std::map<VoxelKey, std::vector<int>> grid;
  for (int i = 0; i < n; ++i)
    grid[voxel_of(cloud.positions[i], params.voxel_size)].push_back(i);

  // region growing over the 27-cell voxel neighborhood
  std::vector<int> region_of(n, -1);
  std::vector<Region> regions;
  for (int seed = 0; seed < n; ++seed) {
    if (region_of[seed] != -1) continue;
    const int rid = static_cast<int>(regions.size());
    regions.push_back({});
    region_of[seed] = rid;
    regions[rid].members.push_back(seed);
    std::deque<int> queue = {seed};
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      const VoxelKey key = voxel_of(cloud.positions[p], params.voxel_size);
      for (long long dx = -1; dx <= 1; ++dx)
        for (long long dy = -1; dy <= 1; ++dy)
          for (long long dz = -1; dz <= 1; ++dz) {
            auto it = grid.find({key.x + dx, key.y + dy, key.z + dz});
            if (it == grid.end()) continue;
            for (int q : it->second) {
              if (region_of[q] != -1) continue;
              if (angle_between(normals[p], normals[q]) >=
                  params.normal_angle_tol)
                continue;
              if (color_distance(cloud.colors[p], cloud.colors[q]) >=
                  params.color_tol)
                continue;
              region_of[q] = rid;
              regions[rid].members.push_back(q);
              queue.push_back(q);
            }
          }
    }
    std::sort(regions[rid].members.begin(), regions[rid].members.end());
    regions[rid].centroid = mean_position(cloud.positions, regions[rid].members);
  }

  // merge undersized regions into the nearest surviving region
  auto alive_count = [&] {
    return std::count_if(regions.begin(), regions.end(),
                         [](const Region& r) { return r.alive; });
  };
  while (alive_count() > 1) {
    int victim = -1;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (!regions[r].alive) continue;
      if (static_cast<int>(regions[r].members.size()) >= params.min_sp_size)
        continue;
      if (victim == -1 ||
          regions[r].members.size() < regions[victim].members.size())
        victim = static_cast<int>(r);
    }
    if (victim == -1) break;
    int target = -1;
    double best = 0.0;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (!regions[r].alive || static_cast<int>(r) == victim) continue;
      const double d =
          squared_distance(regions[r].centroid, regions[victim].centroid);
      if (target == -1 || d < best) {
        target = static_cast<int>(r);
        best = d;
      }
    }
    auto& t = regions[target];
    auto& v = regions[victim];
    t.members.insert(t.members.end(), v.members.begin(), v.members.end());
    std::sort(t.members.begin(), t.members.end());
    t.centroid = mean_position(cloud.positions, t.members);
    v.alive = false;
    v.members.clear();
  }

  // final superpoints ordered by smallest member index
  std::vector<const Region*> alive;
  for (const auto& r : regions)
    if (r.alive) alive.push_back(&r);
  std::sort(alive.begin(), alive.end(), [](const Region* a, const Region* b) {
    return a->members.front() < b->members.front();
  });

  std::vector<Superpoint> out;
  out.reserve(alive.size());
  for (std::size_t k = 0; k < alive.size(); ++k) {
    Superpoint sp;
    sp.id = static_cast<int>(k);
    sp.point_indices = alive[k]->members;
    sp.centroid = mean_position(cloud.positions, sp.point_indices);
    Vec3 csum = {0, 0, 0};
    Vec3 lo = cloud.positions[sp.point_indices.front()];
    Vec3 hi = lo;
    for (int i : sp.point_indices) {
      csum = csum + cloud.colors[i];
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], cloud.positions[i][a]);
        hi[a] = std::max(hi[a], cloud.positions[i][a]);
      }
    }
    sp.mean_color = csum * (1.0 / static_cast<double>(sp.point_indices.size()));
    sp.diameter = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
    out.push_back(std::move(sp));
  }
  return out;
}

SuperpointGraph build_graph(std::vector<Superpoint> superpoints, int k) {
  if (superpoints.empty()) throw std::invalid_argument("no superpoints");
  if (k < 1) throw std::invalid_argument("k must be >= 1");

  const int n = static_cast<int>(superpoints.size());
  std::set<std::pair<int, int>> edge_set;
  std::vector<std::pair<double, int>> dist;
  for (int i = 0; i < n; ++i) {
    dist.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back(
          squared_distance(superpoints[i].centroid, superpoints[j].centroid),
          j);
    }
    const int take = std::min<int>(k, static_cast<int>(dist.size()));
    std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
    for (int t = 0; t < take; ++t) {
      const int j = dist[t].second;
      edge_set.insert({std::min(i, j), std::max(i, j)});
    }
  }

  SuperpointGraph graph;
  graph.nodes = std::move(superpoints);
  graph.edges.assign(edge_set.begin(), edge_set.end());
  graph.edge_attrs.reserve(graph.edges.size());
  graph.adjacency.assign(n, {});
  for (const auto& [i, j] : graph.edges) {
    EdgeAttr attr;
    attr.centroid_offset = graph.nodes[j].centroid - graph.nodes[i].centroid;
    attr.log_size_ratio =
        std::log(static_cast<double>(graph.nodes[j].point_indices.size()) /
                 static_cast<double>(graph.nodes[i].point_indices.size()));
    graph.edge_attrs.push_back(attr);
    graph.adjacency[i].push_back(j);
    graph.adjacency[j].push_back(i);
  }
  for (auto& nbrs : graph.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return graph;
}

SuperpointLabels superpoint_labels(const std::vector<Superpoint>& superpoints,
                                   const PointCloud& cloud,
                                   const SupervisionMask& mask) {
  if (mask.supervised.size() != cloud.size())
    throw std::invalid_argument("mask length differs from cloud size");

  SuperpointLabels out;
  out.label.assign(superpoints.size(), -1);
  out.supervised.assign(superpoints.size(), false);
  std::vector<int> votes;
  for (std::size_t s = 0; s < superpoints.size(); ++s) {
    votes.assign(cloud.num_classes, 0);
    bool any = false;
    for (int i : superpoints[s].point_indices) {
      if (mask.supervised[i]) {
        ++votes[cloud.gt_labels[i]];
        any = true;
      }
    }
    if (!any) continue;
    int best = 0;
    for (int c = 1; c < cloud.num_classes; ++c)
      if (votes[c] > votes[best]) best = c;
    out.label[s] = best;
    out.supervised[s] = true;
  }
  return out;
}

std::string dump_graph(const SuperpointGraph& graph,
                       const SuperpointLabels& labels) {
  std::ostringstream os;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const int lab = i < labels.label.size() ? labels.label[i] : -1;
    os << "node " << graph.nodes[i].id << ' '
       << graph.nodes[i].point_indices.size() << ' ' << lab << "\n";
  }
  for (const auto& [i, j] : graph.edges) os << "edge " << i << ' ' << j << "\n";
  return os.str();
}

}  // namespace spgseg
