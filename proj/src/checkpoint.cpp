#include "spgseg/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spgseg/util.hpp"

namespace spgseg::nn {

void save_checkpoint(const std::string& path,
                     const std::map<std::string, std::string>& meta,
                     const std::vector<const Parameter*>& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "spgseg-checkpoint 1\n";
  for (const auto& [k, v] : meta) out << "meta " << k << ' ' << v << "\n";
  for (const auto* p : params) {
    out << "param " << p->name << ' ' << p->tensor.rank();
    for (std::size_t d : p->tensor.shape()) out << ' ' << d;
    out << "\n";
    const auto& v = p->tensor.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ' ';
      out << format_double(v[i]);
    }
    out << "\n";
  }
  out << "end\n";
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "spgseg-checkpoint 1")
    throw std::runtime_error(path + ": not a spgseg checkpoint");

  LoadedCheckpoint ckpt;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "end") return ckpt;
    if (tag == "meta") {
      std::string k, v;
      is >> k;
      std::getline(is, v);
      if (!v.empty() && v.front() == ' ') v.erase(0, 1);
      ckpt.meta[k] = v;
      continue;
    }
    if (tag != "param")
      throw std::runtime_error(path + ": unexpected line '" + line + "'");
    std::string name;
    std::size_t rank = 0;
    is >> name >> rank;
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      if (!(is >> d)) throw std::runtime_error(path + ": truncated shape");
      count *= d;
    }
    if (!std::getline(in, line))
      throw std::runtime_error(path + ": missing values for " + name);
    std::istringstream vs(line);
    std::vector<double> values;
    values.reserve(count);
    std::string tok;
    while (vs >> tok) {
      bool ok = false;
      const double v = parse_double(tok, ok);
      if (!ok) throw std::runtime_error(path + ": bad value '" + tok + "'");
      values.push_back(v);
    }
    if (values.size() != count)
      throw std::runtime_error(path + ": value count mismatch for " + name);
    Parameter p;
    p.name = name;
    p.tensor = Tensor::from_values(std::move(shape), std::move(values), true);
    ckpt.params.push_back(std::move(p));
  }
  throw std::runtime_error(path + ": missing end marker");
}

}  // namespace spgseg::nn
