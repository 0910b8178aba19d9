#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spgseg/point_cloud.hpp"
#include "spgseg/util.hpp"

namespace spgseg {

struct Superpoint {
  int id = -1;
  std::vector<int> point_indices;  // ascending, non-empty
  Vec3 centroid = {0, 0, 0};
  Vec3 mean_color = {0, 0, 0};
  double diameter = 0.0;  // max extent along any axis
};

struct PartitionParams {
  double voxel_size = 0.5;
  double normal_angle_tol = 0.30;  // radians
  double color_tol = 0.10;         // euclidean rgb distance
  int min_sp_size = 3;
};

// attributes stored for the ordered pair (i, j) with i < j;
// the reverse direction negates both fields
struct EdgeAttr {
  Vec3 centroid_offset = {0, 0, 0};  // centroid_j - centroid_i
  double log_size_ratio = 0.0;       // log(|j| / |i|)
};

struct SuperpointGraph {
  std::vector<Superpoint> nodes;
  std::vector<std::pair<int, int>> edges;  // i < j, lexicographically sorted
  std::vector<EdgeAttr> edge_attrs;        // parallel to edges
  std::vector<std::vector<int>> adjacency; // per node, ascending

  std::size_t num_nodes() const { return nodes.size(); }
  bool is_connected() const;
};

struct SuperpointLabels {
  std::vector<int> label;        // -1 when unsupervised
  std::vector<bool> supervised;  // a_i

  std::size_t count_supervised() const;
};

// PCA plane-fit normals over each point's 10 nearest neighbors,
// sign fixed toward +z then lexicographic tie-break
std::vector<Vec3> estimate_normals(const PointCloud& cloud);

// deterministic voxel-seeded region growing on normals + color;
// regions below min_sp_size are merged into the nearest region
std::vector<Superpoint> partition_cloud(const PointCloud& cloud,
                                        const PartitionParams& params);

// symmetrized kNN over centroids
SuperpointGraph build_graph(std::vector<Superpoint> superpoints, int k);

// modal class among supervised member points, ties to the smallest id
SuperpointLabels superpoint_labels(const std::vector<Superpoint>& superpoints,
                                   const PointCloud& cloud,
                                   const SupervisionMask& mask);

// text dump: "node id size label_or_-1" lines then "edge i j" lines
std::string dump_graph(const SuperpointGraph& graph,
                       const SuperpointLabels& labels);

}  // namespace spgseg
