#include "pnpmpc/io/builtins.hpp"

#include <stdexcept>

#include "pnpmpc/model/builders.hpp"

namespace pnpmpc::io {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<model::PowerArea> first_areas(int count) {
  auto a = model::default_power_areas();
  a.resize(count);
  return a;
}

model::Network power4() { return model::build_power_network(first_areas(4), model::power_lines_four_area()); }
model::Network power5() {
  return model::build_power_network(model::default_power_areas(), model::power_lines_five_area());
}

Scenario trucks() {
  Scenario s;
  s.name = "trucks";
  s.sampling_time = model::TruckParams{}.ts;
  s.net = model::build_truck_network();
  s.controller.weights.N = 20;
  s.controller.weights.Q = Eigen::Vector2d(10.0, 1.0).asDiagonal();
  s.controller.weights.R = MatrixXd::Ones(1, 1);
  s.simulation.steps = 200;
  s.simulation.x0[2] = Eigen::Vector2d(3.0, 0.0);
  return s;
}

Scenario naive_pair() {
  Scenario s;
  s.name = "naive-pair";
  s.sampling_time = model::MassArrayParams{}.ts;
  s.net = model::naive_mass_pair();
  s.controller.weights.N = 20;
  s.controller.weights.Q = 10.0 * MatrixXd::Identity(4, 4);
  s.controller.weights.R = MatrixXd::Identity(2, 2);
  s.simulation.steps = 20;
  s.simulation.x0[1] = (VectorXd(4) << 1.5, 0.8, 0.0, 0.0).finished();
  s.simulation.x0[2] = (VectorXd(4) << 1.5, 0.0, 0.0, 0.0).finished();
  return s;
}

Scenario power(const std::string& name, model::Network net) {
  Scenario s;
  s.name = name;
  s.sampling_time = 1.0;
  s.net = std::move(net);
  s.controller.weights.N = 10;
  s.simulation.steps = 100;
  const double step = 0.15;
  int t = 5;
  for (int id : s.net.ids()) {
    s.simulation.loads.push_back({id, t, VectorXd::Constant(1, id % 2 ? step : -step)});
    t += 5;
  }
  return s;
}

Scenario mass_array() {
  Scenario s;
  s.name = "mass-array";
  s.sampling_time = model::MassArrayParams{}.ts;
  s.net = model::build_mass_array(8, 8, 1);
  s.controller.weights.N = 10;
  s.simulation.steps = 100;
  s.simulation.seed = 7;
  s.perturb = 0.5;
  return s;
}

std::vector<model::Coupling> touching(const model::Network& net, int id) {
  std::vector<model::Coupling> out;
  for (const auto& c : net.couplings())
    if (c.from == id || c.to == id) out.push_back(c);
  return out;
}

/// A, B, L of `ids` and their couplings from subsystems other than `skip`.
pnp::TopologyUpdate retained_update(const model::Network& after, const std::vector<int>& ids, int skip) {
  pnp::TopologyUpdate u;
  for (int j : ids) {
    const auto& s = after.subsystem(j);
    u.A[j] = s.A;
    u.B[j] = s.B;
    u.L[j] = s.L;
    for (int i : after.predecessors(j))
      if (i != skip) u.couplings.push_back(*after.coupling(j, i));
  }
  return u;
}

Delta plug_truck3() {
  const auto chain = model::build_truck_chain({2.0, 4.0, 3.0}, {0.4, 0.05}, {0.3, 0.05});
  Delta d;
  d.op = pnp::Operation::kPlug;
  d.subsystem = chain.subsystem(3);
  d.id = 3;
  d.couplings = touching(chain, 3);
  d.update = retained_update(chain, {2}, 3);
  return d;
}

Delta plug_strong() {
  Delta d;
  d.op = pnp::Operation::kPlug;
  d.subsystem = model::build_truck_network().subsystem(1);
  d.subsystem.id = 3;
  d.id = 3;
  // W_2 = 3 X_3 covers X_2.
  d.couplings = {{3, 2, 3.0 * MatrixXd::Identity(2, 2)}};
  return d;
}

Delta plug_area5() {
  const auto after = power5();
  Delta d;
  d.op = pnp::Operation::kPlug;
  d.subsystem = after.subsystem(5);
  d.id = 5;
  d.couplings = touching(after, 5);
  d.update = retained_update(after, {2, 4}, 5);
  return d;
}

Delta unplug_area4() {
  std::vector<model::PowerArea> rest;
  for (const auto& a : model::default_power_areas())
    if (a.id != 4) rest.push_back(a);
  const auto after = model::build_power_network(rest, {{1, 2, 2.0}, {2, 3, 1.0}, {2, 5, 1.5}});
  Delta d;
  d.op = pnp::Operation::kUnplug;
  d.id = 4;
  d.update = retained_update(after, {3, 5}, 4);
  return d;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"trucks",      "naive-pair",   "power4",     "power5",      "mass-array",
          "plug-truck3", "plug-strong", "plug-area5", "unplug-area4"};
}

bool is_builtin_delta(const std::string& name) { return name.rfind("plug-", 0) == 0 || name.rfind("unplug-", 0) == 0; }

Scenario builtin_scenario(const std::string& name) {
  if (name == "trucks") return trucks();
  if (name == "naive-pair") return naive_pair();
  if (name == "power4") return power("power4", power4());
  if (name == "power5") return power("power5", power5());
  if (name == "mass-array") return mass_array();
  throw std::invalid_argument("unknown builtin scenario '" + name + "'");
}

Json builtin(const std::string& name) {
  if (name == "plug-truck3") return delta_to_json(plug_truck3());
  if (name == "plug-strong") return delta_to_json(plug_strong());
  if (name == "plug-area5") return delta_to_json(plug_area5());
  if (name == "unplug-area4") return delta_to_json(unplug_area4());
  return scenario_to_json(builtin_scenario(name));
}

}  // namespace pnpmpc::io
