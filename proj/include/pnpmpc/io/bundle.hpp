#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pnpmpc/io/scenario.hpp"

namespace pnpmpc::io {

/// Design report line for one subsystem.
struct ReportEntry {
  pnp::DesignOutcome outcome;
  int k = 0;
  double alpha = 0.0;
  /// Smallest facet gap of Z inside X and of U_z inside U; positive when the
  /// design is admissible.
  double x_facet_slack = 0.0;
  double u_facet_slack = 0.0;
};

/// Scenario plus designed controllers, as saved to disk.
struct Bundle {
  Scenario scenario;
  std::map<int, ctrl::TubeController> controllers;
  std::vector<ReportEntry> report;
  /// As read from disk; empty for bundles built in memory.
  std::map<int, std::uint64_t> stored_fingerprints;

  pnp::Deployment deployment() const;
};

ReportEntry report_entry(const pnp::DesignOutcome& o, const ctrl::TubeController* c);

/// Designs every subsystem of the scenario. `ok` is false when any design
/// fails; `report` then names the failing subsystems.
struct DesignRun {
  bool ok = false;
  Bundle bundle;
};
DesignRun design_scenario(const Scenario& s, int threads = 1);

Json controller_json(const ctrl::TubeController& c);
/// `sub` supplies the plant data; `path` prefixes schema diagnostics.
ctrl::TubeController parse_controller_json(const Json& j, const model::Subsystem& sub, const std::string& path);

Json bundle_to_json(const Bundle& b);
/// With `verify`, a controller whose recomputed fingerprint differs from the
/// stored one raises FingerprintError.
Bundle parse_bundle(const Json& j, bool verify = true);
Bundle load_bundle(const std::string& file, bool verify = true);
void save_bundle(const std::string& file, const Bundle& b);

struct FingerprintError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pnpmpc::io
