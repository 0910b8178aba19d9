#include "spgseg/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

namespace spgseg {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

double squared_distance(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return dot(d, d);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, bool& ok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  ok = (res.ec == std::errc{}) && (res.ptr == tok.data() + tok.size());
  return v;
}

}  // namespace spgseg
