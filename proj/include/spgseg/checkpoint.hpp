#pragma once

#include <map>
#include <string>
#include <vector>

#include "spgseg/optim.hpp"

namespace spgseg::nn {

// Text checkpoint; values round-trip bit-exactly.
//   spgseg-checkpoint 1
//   meta <key> <value>
//   param <name> <rank> <dims...>
//   <values on one line>
//   end
void save_checkpoint(const std::string& path,
                     const std::map<std::string, std::string>& meta,
                     const std::vector<const Parameter*>& params);

struct LoadedCheckpoint {
  std::map<std::string, std::string> meta;
  std::vector<Parameter> params;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace spgseg::nn
