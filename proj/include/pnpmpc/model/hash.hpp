#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace pnpmpc::model {

/// FNV-1a 64 over a canonical text rendering; doubles use %.17g.
struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;

  void bytes(std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
  void number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g;", v);
    bytes(buf);
  }
  void matrix(const Eigen::MatrixXd& m) {
    bytes(std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ":");
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) number(m(i, j));
  }
};

}  // namespace pnpmpc::model
