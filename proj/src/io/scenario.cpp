#include "pnpmpc/io/scenario.hpp"

#include <set>

namespace pnpmpc::io {

namespace {

std::string at(const std::string& path, size_t i) { return path + "/" + std::to_string(i); }

const Json& array_member(const Json& j, const std::string& key, const std::string& path) {
  const auto& a = member(j, key, path);
  if (!a.is_array()) throw SchemaError(path + "/" + key, "expected an array");
  return a;
}

int dim_of(const model::Network& net, const model::Subsystem* extra, int id, const std::string& path) {
  if (extra && extra->id == id) return extra->n();
  if (!net.contains(id)) throw SchemaError(path, "unknown subsystem " + std::to_string(id));
  return net.subsystem(id).n();
}

model::Coupling parse_coupling_checked(const Json& j, const std::string& path, const model::Network& net,
                                       const model::Subsystem* extra) {
  const int from = read_int(member(j, "from", path), path + "/from");
  const int to = read_int(member(j, "to", path), path + "/to");
  const int nt = dim_of(net, extra, to, path + "/to");
  const int nf = dim_of(net, extra, from, path + "/from");
  model::Coupling c{from, to, read_matrix(member(j, "A", path), path + "/A", nt, nf)};
  if (has(j, "tie_gain")) c.tie_gain = read_number(j.at("tie_gain"), path + "/tie_gain");
  return c;
}

Json terminal_to_json(const ctrl::TerminalData& t) {
  if (t.kind == ctrl::TerminalData::Kind::kZero) return "zero";
  Json j{{"S", write_matrix(t.S)}, {"K", write_matrix(t.K_aux)}, {"Xf", write_hpolytope(t.Xf)}};
  if (t.Xf_vertices) j["Xf"]["vertices"] = write_vpolytope(*t.Xf_vertices);
  return j;
}

std::vector<std::pair<int, Eigen::MatrixXd>> read_id_matrices(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of {id, value}");
  std::vector<std::pair<int, Eigen::MatrixXd>> out;
  for (size_t i = 0; i < j.size(); ++i) {
    const auto p = at(path, i);
    out.emplace_back(read_int(member(j[i], "id", p), p + "/id"), read_matrix(member(j[i], "value", p), p + "/value"));
  }
  return out;
}

pnp::TopologyUpdate parse_update(const Json& j, const std::string& path, const model::Network& net,
                                 const model::Subsystem* extra) {
  pnp::TopologyUpdate u;
  auto check = [&](const std::string& key, std::map<int, Eigen::MatrixXd>& dst, auto rows, auto cols) {
    if (!has(j, key)) return;
    const auto list = read_id_matrices(j.at(key), path + "/" + key);
    for (size_t i = 0; i < list.size(); ++i) {
      const auto& [id, m] = list[i];
      const auto p = at(path + "/" + key, i);
      if (!net.contains(id)) throw SchemaError(p + "/id", "unknown subsystem " + std::to_string(id));
      const auto& s = net.subsystem(id);
      if (m.rows() != rows(s) || m.cols() != cols(s))
        throw SchemaError(p + "/value", "expected " + std::to_string(rows(s)) + "x" + std::to_string(cols(s)) +
                                            " matrix");
      dst[id] = m;
    }
  };
  check("A", u.A, [](const model::Subsystem& s) { return s.n(); }, [](const model::Subsystem& s) { return s.n(); });
  check("B", u.B, [](const model::Subsystem& s) { return s.n(); }, [](const model::Subsystem& s) { return s.m(); });
  check("L", u.L, [](const model::Subsystem& s) { return s.n(); },
        [](const model::Subsystem& s) { return static_cast<int>(s.L.cols()); });
  if (has(j, "couplings")) {
    const auto& cs = array_member(j, "couplings", path);
    for (size_t i = 0; i < cs.size(); ++i)
      u.couplings.push_back(parse_coupling_checked(cs[i], at(path + "/couplings", i), net, extra));
  }
  return u;
}

Json update_to_json(const pnp::TopologyUpdate& u) {
  Json j = Json::object();
  for (auto [key, m] : {std::pair("A", &u.A), std::pair("B", &u.B), std::pair("L", &u.L)}) {
    if (m->empty()) continue;
    Json list = Json::array();
    for (const auto& [id, v] : *m) list.push_back({{"id", id}, {"value", write_matrix(v)}});
    j[key] = list;
  }
  if (!u.couplings.empty()) {
    j["couplings"] = Json::array();
    for (const auto& c : u.couplings) j["couplings"].push_back(coupling_to_json(c));
  }
  return j;
}

}  // namespace

std::string to_string(ctrl::Mode m) { return m == ctrl::Mode::kDistributed ? "distributed" : "decentralized"; }

ctrl::Mode parse_mode(const std::string& s, const std::string& path) {
  if (s == "decentralized") return ctrl::Mode::kDecentralized;
  if (s == "distributed") return ctrl::Mode::kDistributed;
  throw SchemaError(path, "mode must be \"decentralized\" or \"distributed\"");
}

model::Subsystem parse_subsystem(const Json& j, const std::string& path) {
  model::Subsystem s;
  s.id = read_int(member(j, "id", path), path + "/id");
  s.A = read_matrix(member(j, "A", path), path + "/A");
  const int n = static_cast<int>(s.A.rows());
  if (s.A.cols() != n || n == 0) throw SchemaError(path + "/A", "expected a nonempty square matrix");
  s.B = read_matrix(member(j, "B", path), path + "/B", n);
  const int m = static_cast<int>(s.B.cols());
  if (m == 0) throw SchemaError(path + "/B", "needs at least one column");
  const auto& x = member(j, "X", path);
  s.X = read_hpolytope(x, path + "/X", n);
  if (has(x, "vertices")) {
    const auto vp = path + "/X/vertices";
    s.X_vertices = read_vpolytope(x.at("vertices"), vp, n);
    // Every point lies in X and every facet of X is touched.
    const double tol = 1e-9 * (1.0 + s.X.d.cwiseAbs().maxCoeff());
    for (int i = 0; i < s.X_vertices->size(); ++i)
      if (((s.X.C * s.X_vertices->vertices[i] - s.X.d).array() > tol).any())
        throw SchemaError(vp + "/" + std::to_string(i), "vertex lies outside X");
    for (int r = 0; r < s.X.rows(); ++r)
      if (geom::support_value(*s.X_vertices, s.X.C.row(r).transpose()) < s.X.d(r) - tol)
        throw SchemaError(vp, "vertices do not reach facet " + std::to_string(r) + " of X");
  }
  s.U = read_hpolytope(member(j, "U", path), path + "/U", m);
  if (has(j, "L")) {
    s.L = read_matrix(j.at("L"), path + "/L", n);
    const int p = static_cast<int>(s.L.cols());
    if (has(j, "setpoint_x")) s.setpoint_x = read_matrix(j.at("setpoint_x"), path + "/setpoint_x", n, p);
    if (has(j, "setpoint_u")) s.setpoint_u = read_matrix(j.at("setpoint_u"), path + "/setpoint_u", m, p);
  }
  s.normalize();
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw SchemaError(path, e.what());
  }
  return s;
}

Json subsystem_to_json(const model::Subsystem& s) {
  Json j{{"id", s.id}, {"A", write_matrix(s.A)}, {"B", write_matrix(s.B)}, {"X", write_hpolytope(s.X)},
         {"U", write_hpolytope(s.U)}};
  if (s.X_vertices) j["X"]["vertices"] = write_vpolytope(*s.X_vertices);
  if (s.L.cols() > 0) {
    j["L"] = write_matrix(s.L);
    j["setpoint_x"] = write_matrix(s.setpoint_x);
    j["setpoint_u"] = write_matrix(s.setpoint_u);
  }
  return j;
}

model::Coupling parse_coupling(const Json& j, const std::string& path) {
  model::Coupling c{read_int(member(j, "from", path), path + "/from"), read_int(member(j, "to", path), path + "/to"),
                    read_matrix(member(j, "A", path), path + "/A")};
  if (has(j, "tie_gain")) c.tie_gain = read_number(j.at("tie_gain"), path + "/tie_gain");
  return c;
}

Json coupling_to_json(const model::Coupling& c) {
  Json j{{"from", c.from}, {"to", c.to}, {"A", write_matrix(c.A)}};
  if (c.tie_gain > 0.0) j["tie_gain"] = c.tie_gain;
  return j;
}

model::Network parse_network(const Json& subsystems, const Json& couplings, const std::string& path) {
  model::Network net;
  if (!subsystems.is_array() || subsystems.empty())
    throw SchemaError(path + "/subsystems", "expected a nonempty array");
  for (size_t i = 0; i < subsystems.size(); ++i) {
    const auto p = at(path + "/subsystems", i);
    auto s = parse_subsystem(subsystems[i], p);
    if (net.contains(s.id)) throw SchemaError(p + "/id", "duplicate id " + std::to_string(s.id));
    net.add_subsystem(std::move(s));
  }
  if (!couplings.is_null()) {
    if (!couplings.is_array()) throw SchemaError(path + "/couplings", "expected an array");
    for (size_t i = 0; i < couplings.size(); ++i) {
      const auto p = at(path + "/couplings", i);
      auto c = parse_coupling_checked(couplings[i], p, net, nullptr);
      try {
        net.add_coupling(std::move(c));
      } catch (const std::exception& e) {
        throw SchemaError(p, e.what());
      }
    }
  }
  return net;
}

ctrl::ControllerConfig parse_controller(const Json& j, const std::string& path, const ctrl::ControllerConfig& base) {
  ctrl::ControllerConfig c = base;
  if (j.is_null()) return c;
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  if (has(j, "horizon")) c.weights.N = read_int(j.at("horizon"), path + "/horizon");
  if (c.weights.N < 1) throw SchemaError(path + "/horizon", "must be at least 1");
  if (has(j, "Q")) c.weights.Q = read_matrix(j.at("Q"), path + "/Q");
  if (has(j, "R")) c.weights.R = read_matrix(j.at("R"), path + "/R");
  if (has(j, "cost")) {
    const auto s = read_string(j.at("cost"), path + "/cost");
    if (s == "quadratic")
      c.weights.cost = ctrl::CostMode::kQuadratic;
    else if (s == "l1")
      c.weights.cost = ctrl::CostMode::kL1;
    else
      throw SchemaError(path + "/cost", "must be \"quadratic\" or \"l1\"");
  }
  if (has(j, "terminal")) {
    const auto& t = j.at("terminal");
    const auto tp = path + "/terminal";
    if (t.is_string()) {
      if (t.get<std::string>() != "zero") throw SchemaError(tp, "must be \"zero\" or an object");
      c.terminal = {};
    } else {
      c.terminal.kind = ctrl::TerminalData::Kind::kCustom;
      c.terminal.S = read_matrix(member(t, "S", tp), tp + "/S");
      c.terminal.K_aux = read_matrix(member(t, "K", tp), tp + "/K");
      const auto& xf = member(t, "Xf", tp);
      c.terminal.Xf = read_hpolytope(xf, tp + "/Xf");
      if (has(xf, "vertices")) c.terminal.Xf_vertices = read_vpolytope(xf.at("vertices"), tp + "/Xf/vertices");
    }
  }
  if (has(j, "k")) {
    c.rci.k = read_int(j.at("k"), path + "/k");
    if (c.rci.k < 0) throw SchemaError(path + "/k", "must be nonnegative");
  }
  if (has(j, "omega")) c.rci.omega = read_number(j.at("omega"), path + "/omega");
  if (has(j, "retries")) c.rci.retries = read_int(j.at("retries"), path + "/retries");
  if (has(j, "objective")) {
    const auto s = read_string(j.at("objective"), path + "/objective");
    if (s == "min_alpha")
      c.rci.objective = rci::Objective::kMinAlpha;
    else if (s == "feasibility")
      c.rci.objective = rci::Objective::kFeasibility;
    else
      throw SchemaError(path + "/objective", "must be \"min_alpha\" or \"feasibility\"");
  }
  return c;
}

Json controller_to_json(const ctrl::ControllerConfig& c) {
  Json j{{"horizon", c.weights.N},
         {"cost", c.weights.cost == ctrl::CostMode::kL1 ? "l1" : "quadratic"},
         {"terminal", terminal_to_json(c.terminal)},
         {"k", c.rci.k},
         {"omega", c.rci.omega},
         {"retries", c.rci.retries},
         {"objective", c.rci.objective == rci::Objective::kMinAlpha ? "min_alpha" : "feasibility"}};
  if (c.weights.Q.size()) j["Q"] = write_matrix(c.weights.Q);
  if (c.weights.R.size()) j["R"] = write_matrix(c.weights.R);
  return j;
}

Scenario parse_scenario(const Json& j) {
  Scenario s;
  if (!j.is_object()) throw SchemaError("", "scenario must be a JSON object");
  s.name = has(j, "name") ? read_string(j.at("name"), "/name") : "";
  s.sampling_time = read_number(member(j, "sampling_time", ""), "/sampling_time");
  if (!(s.sampling_time > 0)) throw SchemaError("/sampling_time", "must be positive");
  s.net = parse_network(member(j, "subsystems", ""), has(j, "couplings") ? j.at("couplings") : Json(), "");

  const Json ctrl_json = has(j, "controller") ? j.at("controller") : Json();
  s.controller = parse_controller(ctrl_json, "/controller");
  if (has(ctrl_json, "mode")) s.mode = parse_mode(read_string(ctrl_json.at("mode"), "/controller/mode"), "/controller/mode");
  if (has(ctrl_json, "q")) {
    // Z0 always has the origin plus the 2^n box corners.
    const int q = read_int(ctrl_json.at("q"), "/controller/q");
    for (const auto& [id, sub] : s.net.subsystems())
      if (q != 1 + (1 << sub.n()))
        throw SchemaError("/controller/q", "Z0 has " + std::to_string(1 + (1 << sub.n())) + " vertices for subsystem " +
                                               std::to_string(id));
  }
  if (has(ctrl_json, "overrides")) {
    const auto& ov = array_member(ctrl_json, "overrides", "/controller");
    for (size_t i = 0; i < ov.size(); ++i) {
      const auto p = at("/controller/overrides", i);
      const int id = read_int(member(ov[i], "id", p), p + "/id");
      if (!s.net.contains(id)) throw SchemaError(p + "/id", "unknown subsystem " + std::to_string(id));
      s.overrides[id] = parse_controller(ov[i], p, s.controller);
    }
  }

  s.simulation.mode = s.mode;
  if (has(j, "simulation")) {
    const auto& sim = j.at("simulation");
    const std::string p = "/simulation";
    if (has(sim, "T")) s.simulation.steps = read_int(sim.at("T"), p + "/T");
    if (s.simulation.steps < 0) throw SchemaError(p + "/T", "must be nonnegative");
    if (has(sim, "seed")) {
      if (!sim.at("seed").is_number_unsigned()) throw SchemaError(p + "/seed", "expected a nonnegative integer");
      s.simulation.seed = sim.at("seed").get<std::uint64_t>();
    }
    if (has(sim, "mode")) s.simulation.mode = parse_mode(read_string(sim.at("mode"), p + "/mode"), p + "/mode");
    if (has(sim, "perturb")) {
      s.perturb = read_number(sim.at("perturb"), p + "/perturb");
      if (s.perturb < 0.0 || s.perturb > 1.0) throw SchemaError(p + "/perturb", "must lie in [0, 1]");
    }
    if (has(sim, "x0")) {
      const auto& x0 = sim.at("x0");
      if (!x0.is_array()) throw SchemaError(p + "/x0", "expected an array of {id, x}");
      for (size_t i = 0; i < x0.size(); ++i) {
        const auto ip = at(p + "/x0", i);
        const int id = read_int(member(x0[i], "id", ip), ip + "/id");
        if (!s.net.contains(id)) throw SchemaError(ip + "/id", "unknown subsystem " + std::to_string(id));
        s.simulation.x0[id] = read_vector(member(x0[i], "x", ip), ip + "/x", s.net.subsystem(id).n());
      }
    }
    if (has(sim, "loads")) {
      const auto& loads = sim.at("loads");
      if (!loads.is_array()) throw SchemaError(p + "/loads", "expected an array");
      for (size_t i = 0; i < loads.size(); ++i) {
        const auto ip = at(p + "/loads", i);
        sim::LoadStep l;
        l.id = read_int(member(loads[i], "id", ip), ip + "/id");
        if (!s.net.contains(l.id)) throw SchemaError(ip + "/id", "unknown subsystem " + std::to_string(l.id));
        l.time = read_int(member(loads[i], "time", ip), ip + "/time");
        if (l.time < 0 || l.time >= std::max(1, s.simulation.steps)) throw SchemaError(ip + "/time", "outside [0, T)");
        l.value = read_vector(member(loads[i], "value", ip), ip + "/value",
                              static_cast<int>(s.net.subsystem(l.id).L.cols()));
        s.simulation.loads.push_back(l);
      }
    }
  }
  return s;
}

Scenario load_scenario(const std::string& file) { return parse_scenario(read_json_file(file)); }

Json scenario_to_json(const Scenario& s) {
  Json j;
  j["name"] = s.name;
  j["sampling_time"] = s.sampling_time;
  j["subsystems"] = Json::array();
  for (const auto& [id, sub] : s.net.subsystems()) j["subsystems"].push_back(subsystem_to_json(sub));
  j["couplings"] = Json::array();
  for (const auto& c : s.net.couplings()) j["couplings"].push_back(coupling_to_json(c));
  j["controller"] = controller_to_json(s.controller);
  j["controller"]["mode"] = to_string(s.mode);
  if (!s.overrides.empty()) {
    j["controller"]["overrides"] = Json::array();
    for (const auto& [id, c] : s.overrides) {
      Json o = controller_to_json(c);
      o["id"] = id;
      j["controller"]["overrides"].push_back(o);
    }
  }
  Json sim{{"T", s.simulation.steps}, {"seed", s.simulation.seed}, {"mode", to_string(s.simulation.mode)}};
  if (s.perturb > 0.0) sim["perturb"] = s.perturb;
  sim["x0"] = Json::array();
  for (const auto& [id, x] : s.simulation.x0) sim["x0"].push_back({{"id", id}, {"x", write_vector(x)}});
  sim["loads"] = Json::array();
  for (const auto& l : s.simulation.loads)
    sim["loads"].push_back({{"id", l.id}, {"time", l.time}, {"value", write_vector(l.value)}});
  j["simulation"] = sim;
  return j;
}

Delta parse_delta(const Json& j, const model::Network& net, const ctrl::ControllerConfig& base) {
  Delta d;
  const auto op = read_string(member(j, "op", ""), "/op");
  if (op == "plug") {
    d.op = pnp::Operation::kPlug;
    d.subsystem = parse_subsystem(member(j, "subsystem", ""), "/subsystem");
    if (net.contains(d.subsystem.id))
      throw SchemaError("/subsystem/id", "subsystem " + std::to_string(d.subsystem.id) + " already exists");
    d.id = d.subsystem.id;
    if (has(j, "couplings")) {
      const auto& cs = array_member(j, "couplings", "");
      for (size_t i = 0; i < cs.size(); ++i) {
        const auto p = at("/couplings", i);
        auto c = parse_coupling_checked(cs[i], p, net, &d.subsystem);
        if (c.from != d.id && c.to != d.id) throw SchemaError(p, "coupling must involve the new subsystem");
        d.couplings.push_back(std::move(c));
      }
    }
    if (has(j, "controller")) d.controller = parse_controller(j.at("controller"), "/controller", base);
    if (has(j, "update")) d.update = parse_update(j.at("update"), "/update", net, &d.subsystem);
  } else if (op == "unplug") {
    d.op = pnp::Operation::kUnplug;
    d.id = read_int(member(j, "id", ""), "/id");
    if (!net.contains(d.id)) throw SchemaError("/id", "unknown subsystem " + std::to_string(d.id));
    if (has(j, "policy")) {
      const auto p = read_string(j.at("policy"), "/policy");
      if (p == "none")
        d.policy = pnp::RedesignPolicy::kNone;
      else if (p == "performance")
        d.policy = pnp::RedesignPolicy::kPerformance;
      else
        throw SchemaError("/policy", "must be \"none\" or \"performance\"");
    }
    if (has(j, "update")) d.update = parse_update(j.at("update"), "/update", net, nullptr);
  } else {
    throw SchemaError("/op", "must be \"plug\" or \"unplug\"");
  }
  return d;
}

Json delta_to_json(const Delta& d) {
  Json j;
  if (d.op == pnp::Operation::kPlug) {
    j["op"] = "plug";
    j["subsystem"] = subsystem_to_json(d.subsystem);
    j["couplings"] = Json::array();
    for (const auto& c : d.couplings) j["couplings"].push_back(coupling_to_json(c));
    if (d.controller) j["controller"] = controller_to_json(*d.controller);
  } else {
    j["op"] = "unplug";
    j["id"] = d.id;
    j["policy"] = d.policy == pnp::RedesignPolicy::kPerformance ? "performance" : "none";
  }
  if (!d.update.empty()) j["update"] = update_to_json(d.update);
  return j;
}

}  // namespace pnpmpc::io
