#pragma once

#include <optional>
#include <string>

#include "pnpmpc/io/json_io.hpp"
#include "pnpmpc/pnp/pnp.hpp"
#include "pnpmpc/sim/sim.hpp"

namespace pnpmpc::io {

struct Scenario {
  std::string name;
  double sampling_time = 1.0;
  model::Network net;
  ctrl::ControllerConfig controller;
  std::map<int, ctrl::ControllerConfig> overrides;
  ctrl::Mode mode = ctrl::Mode::kDecentralized;
  sim::SimConfig simulation;
  /// When positive, the start is drawn by sim::perturbed_start with this
  /// scale and the simulation seed; x0 entries are ignored.
  double perturb = 0.0;
};

Scenario parse_scenario(const Json& j);
Scenario load_scenario(const std::string& file);
Json scenario_to_json(const Scenario& s);

model::Subsystem parse_subsystem(const Json& j, const std::string& path);
Json subsystem_to_json(const model::Subsystem& s);
model::Coupling parse_coupling(const Json& j, const std::string& path);
Json coupling_to_json(const model::Coupling& c);
/// Subsystems and couplings; shapes are cross-checked.
model::Network parse_network(const Json& subsystems, const Json& couplings, const std::string& path);

/// `base` supplies defaults for missing keys.
ctrl::ControllerConfig parse_controller(const Json& j, const std::string& path, const ctrl::ControllerConfig& base = {});
Json controller_to_json(const ctrl::ControllerConfig& c);

/// Plug or unplug request.
struct Delta {
  pnp::Operation op = pnp::Operation::kPlug;
  model::Subsystem subsystem;
  std::vector<model::Coupling> couplings;
  std::optional<ctrl::ControllerConfig> controller;
  int id = 0;
  pnp::RedesignPolicy policy = pnp::RedesignPolicy::kNone;
  pnp::TopologyUpdate update;
};

/// Matrices are checked against `net` (the network before the operation).
Delta parse_delta(const Json& j, const model::Network& net, const ctrl::ControllerConfig& base);
Json delta_to_json(const Delta& d);

std::string to_string(ctrl::Mode m);
ctrl::Mode parse_mode(const std::string& s, const std::string& path);

}  // namespace pnpmpc::io
