#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spgseg/util.hpp"

namespace spgseg {

struct PointCloud {
  std::vector<Vec3> positions;  // meters
  std::vector<Vec3> colors;     // rgb in [0,1]
  std::vector<int> gt_labels;   // class ids in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return positions.size(); }
  void validate() const;  // throws on broken invariants
};

struct SupervisionMask {
  std::vector<bool> supervised;

  std::size_t count() const;
};

struct SceneSpec {
  int num_objects = 6;
  int num_classes = 4;
  double extent = 8.0;         // scene side length, meters
  int points_per_object = 180;
};

// Text format: optional "#classes k" header, "#" comment lines,
// one point per line "x y z r g b label".
PointCloud load_cloud(const std::string& path);
void save_cloud(const PointCloud& cloud, const std::string& path);

// Deterministic synthetic scene: floor plane (class 0), wall planes
// (class 1), boxes/spheres for the remaining classes.
PointCloud gen_synthetic(const SceneSpec& spec, std::uint64_t seed);

// Per class: min(class size, max(1, floor(rate*n/c))) points, uniform
// without replacement.
SupervisionMask sample_supervision(const PointCloud& cloud, double rate,
                                   std::uint64_t seed);

}  // namespace spgseg
