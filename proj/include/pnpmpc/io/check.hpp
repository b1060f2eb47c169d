#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pnpmpc/io/bundle.hpp"

namespace pnpmpc::io {

struct CheckItem {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool pass() const;
};

struct CheckConfig {
  /// Sampled (z, w) pairs per subsystem for the invariance suite and z
  /// samples for homogeneity; 0 runs the structural and inclusion checks only.
  int samples = 1000;
  std::uint64_t seed = 0;
  double invariance_tol = 1e-6;
  double inclusion_tol = 1e-8;
  double homogeneity_tol = 1e-7;
};

/// Random point of the aggregate: convex weights per block, a vertex with
/// probability 1/4.
Eigen::VectorXd sample_aggregate(const geom::VAggregate& z, std::mt19937_64& rng);

CheckReport check_bundle(const Bundle& b, const CheckConfig& cfg = {});
Json check_report_json(const CheckReport& r);

}  // namespace pnpmpc::io
