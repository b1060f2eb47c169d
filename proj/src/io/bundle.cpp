#include "pnpmpc/io/bundle.hpp"

#include <cinttypes>
#include <cstdio>
#include <limits>

#include "pnpmpc/model/network.hpp"

namespace pnpmpc::io {

namespace {

constexpr const char* kFormat = "pnpmpc-bundle";
constexpr int kVersion = 1;

Json blocks_json(const std::vector<geom::VPolytope>& blocks) {
  Json a = Json::array();
  for (const auto& b : blocks) a.push_back(write_vpolytope(b));
  return a;
}

std::vector<geom::VPolytope> read_blocks(const Json& j, const std::string& path, int dim) {
  if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a nonempty array of vertex lists");
  std::vector<geom::VPolytope> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(read_vpolytope(j[i], path + "/" + std::to_string(i), dim));
  return out;
}

double facet_slack(const geom::HPolytope& outer, const geom::VAggregate& inner) {
  double s = std::numeric_limits<double>::infinity();
  for (int r = 0; r < outer.rows(); ++r)
    s = std::min(s, outer.d(r) - geom::support_value(inner, outer.C.row(r).transpose()));
  return s;
}

std::uint64_t parse_hex(const Json& j, const std::string& path) {
  const auto s = read_string(j, path);
  std::uint64_t v = 0;
  if (s.size() != 16 || std::sscanf(s.c_str(), "%" SCNx64, &v) != 1) throw SchemaError(path, "expected 16 hex digits");
  return v;
}

}  // namespace

pnp::Deployment Bundle::deployment() const {
  pnp::Deployment d;
  d.net = scenario.net;
  d.config = scenario.controller;
  d.overrides = scenario.overrides;
  d.controllers = controllers;
  return d;
}

ReportEntry report_entry(const pnp::DesignOutcome& o, const ctrl::TubeController* c) {
  ReportEntry e;
  e.outcome = o;
  if (c) {
    e.k = c->rci.k;
    e.alpha = c->rci.alpha;
    e.x_facet_slack = facet_slack(c->sub.X, c->rci.Z);
    e.u_facet_slack = facet_slack(c->sub.U, c->rci.Uz);
  }
  return e;
}

DesignRun design_scenario(const Scenario& s, int threads) {
  DesignRun run;
  run.bundle.scenario = s;
  pnp::Deployment dep = run.bundle.deployment();
  const auto results = pnp::design_many(dep, dep.net, dep.net.ids(), threads);
  run.ok = true;
  for (const auto& [o, c] : results) {
    run.bundle.report.push_back(report_entry(o, c ? &*c : nullptr));
    if (c)
      run.bundle.controllers.emplace(o.id, *c);
    else
      run.ok = false;
  }
  if (!run.ok) run.bundle.controllers.clear();
  return run;
}

Json controller_json(const ctrl::TubeController& c) {
  const auto& r = c.rci;
  Json rci{{"k", r.k},
           {"alpha", r.alpha},
           {"omega", r.omega},
           {"W", {{"sigma", r.W.sigma}, {"blocks", blocks_json(r.W.blocks)}}},
           {"z0", write_vpolytope(r.z0)},
           {"z_blocks", blocks_json(r.z_blocks)},
           {"u_blocks", blocks_json(r.u_blocks)},
           {"z_terminal", write_vpolytope(r.z_terminal)},
           {"rho", write_matrix(r.rho)}};
  ctrl::ControllerConfig cfg;
  cfg.weights = c.weights;
  cfg.terminal = c.terminal;
  const Json w = controller_to_json(cfg);
  Json weights{{"horizon", w["horizon"]}, {"cost", w["cost"]}};
  if (w.contains("Q")) weights["Q"] = w["Q"];
  if (w.contains("R")) weights["R"] = w["R"];
  return Json{{"id", c.id()},
              {"fingerprint", hex(ctrl::fingerprint(c))},
              {"rci", rci},
              {"Xhat", write_hpolytope(c.Xhat)},
              {"V", write_hpolytope(c.V)},
              {"weights", weights},
              {"terminal", w["terminal"]}};
}

ctrl::TubeController parse_controller_json(const Json& j, const model::Subsystem& sub, const std::string& path) {
  ctrl::TubeController c;
  c.sub = sub;
  const int n = sub.n(), m = sub.m();
  const auto& r = member(j, "rci", path);
  const auto rp = path + "/rci";
  c.rci.k = read_int(member(r, "k", rp), rp + "/k");
  c.rci.alpha = read_number(member(r, "alpha", rp), rp + "/alpha");
  if (c.rci.alpha < 0.0 || c.rci.alpha >= 1.0) throw SchemaError(rp + "/alpha", "must lie in [0, 1)");
  c.rci.omega = read_number(member(r, "omega", rp), rp + "/omega");
  const auto& w = member(r, "W", rp);
  c.rci.W.sigma = read_number(member(w, "sigma", rp + "/W"), rp + "/W/sigma");
  c.rci.W.blocks = read_blocks(member(w, "blocks", rp + "/W"), rp + "/W/blocks", n);
  c.rci.z0 = read_vpolytope(member(r, "z0", rp), rp + "/z0", n);
  c.rci.z_blocks = read_blocks(member(r, "z_blocks", rp), rp + "/z_blocks", n);
  c.rci.u_blocks = read_blocks(member(r, "u_blocks", rp), rp + "/u_blocks", m);
  if (c.rci.z_blocks.size() != c.rci.u_blocks.size())
    throw SchemaError(rp + "/u_blocks", "must have as many blocks as z_blocks");
  c.rci.z_terminal = read_vpolytope(member(r, "z_terminal", rp), rp + "/z_terminal", n);
  c.rci.rho = read_matrix(member(r, "rho", rp), rp + "/rho");
  const double sigma = 1.0 / (1.0 - c.rci.alpha);
  c.rci.Z = {c.rci.z_blocks, sigma};
  c.rci.Uz = {c.rci.u_blocks, sigma};
  c.Xhat = read_hpolytope(member(j, "Xhat", path), path + "/Xhat", n);
  c.V = read_hpolytope(member(j, "V", path), path + "/V", m);

  Json cfg = member(j, "weights", path);
  if (!cfg.is_object()) throw SchemaError(path + "/weights", "expected an object");
  cfg["terminal"] = member(j, "terminal", path);
  const auto parsed = parse_controller(cfg, path + "/weights");
  c.weights = parsed.weights;
  c.terminal = parsed.terminal;
  if (c.weights.Q.size() && (c.weights.Q.rows() != n || c.weights.Q.cols() != n))
    throw SchemaError(path + "/weights/Q", "expected " + std::to_string(n) + "x" + std::to_string(n));
  if (c.weights.R.size() && (c.weights.R.rows() != m || c.weights.R.cols() != m))
    throw SchemaError(path + "/weights/R", "expected " + std::to_string(m) + "x" + std::to_string(m));
  return c;
}

Json bundle_to_json(const Bundle& b) {
  Json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["network_fingerprint"] = hex(model::fingerprint(b.scenario.net));
  j["scenario"] = scenario_to_json(b.scenario);
  j["controllers"] = Json::array();
  for (const auto& [id, c] : b.controllers) j["controllers"].push_back(controller_json(c));
  j["report"] = Json::array();
  for (const auto& e : b.report) {
    Json r{{"id", e.outcome.id},
           {"ok", e.outcome.ok},
           {"attempted_k", e.outcome.attempted_k},
           {"seconds", e.outcome.seconds}};
    if (e.outcome.ok) {
      r["k"] = e.k;
      r["alpha"] = e.alpha;
      r["x_facet_slack"] = e.x_facet_slack;
      r["u_facet_slack"] = e.u_facet_slack;
    } else {
      r["reason"] = e.outcome.reason;
    }
    j["report"].push_back(r);
  }
  return j;
}

Bundle parse_bundle(const Json& j, bool verify) {
  if (!j.is_object()) throw SchemaError("", "bundle must be a JSON object");
  if (read_string(member(j, "format", ""), "/format") != kFormat) throw SchemaError("/format", "not a bundle");
  if (read_int(member(j, "version", ""), "/version") != kVersion) throw SchemaError("/version", "unsupported version");
  Bundle b;
  try {
    b.scenario = parse_scenario(member(j, "scenario", ""));
  } catch (const SchemaError& e) {
    throw SchemaError("/scenario" + e.path, e.detail);
  }
  const auto net_fp = parse_hex(member(j, "network_fingerprint", ""), "/network_fingerprint");
  if (verify && net_fp != model::fingerprint(b.scenario.net))
    throw FingerprintError("network fingerprint does not match the stored scenario");

  const auto& cs = member(j, "controllers", "");
  if (!cs.is_array()) throw SchemaError("/controllers", "expected an array");
  for (size_t i = 0; i < cs.size(); ++i) {
    const auto p = "/controllers/" + std::to_string(i);
    const int id = read_int(member(cs[i], "id", p), p + "/id");
    if (!b.scenario.net.contains(id)) throw SchemaError(p + "/id", "unknown subsystem " + std::to_string(id));
    if (b.controllers.count(id)) throw SchemaError(p + "/id", "duplicate controller " + std::to_string(id));
    auto c = parse_controller_json(cs[i], b.scenario.net.subsystem(id), p);
    const auto fp = parse_hex(member(cs[i], "fingerprint", p), p + "/fingerprint");
    if (verify && fp != ctrl::fingerprint(c))
      throw FingerprintError("controller " + std::to_string(id) + " does not match its fingerprint");
    b.stored_fingerprints[id] = fp;
    b.controllers.emplace(id, std::move(c));
  }

  if (has(j, "report")) {
    const auto& rs = j.at("report");
    if (!rs.is_array()) throw SchemaError("/report", "expected an array");
    for (size_t i = 0; i < rs.size(); ++i) {
      const auto p = "/report/" + std::to_string(i);
      ReportEntry e;
      e.outcome.id = read_int(member(rs[i], "id", p), p + "/id");
      e.outcome.ok = member(rs[i], "ok", p).get<bool>();
      e.outcome.attempted_k = member(rs[i], "attempted_k", p).get<std::vector<int>>();
      e.outcome.seconds = read_number(member(rs[i], "seconds", p), p + "/seconds");
      if (e.outcome.ok) {
        e.k = read_int(member(rs[i], "k", p), p + "/k");
        e.alpha = read_number(member(rs[i], "alpha", p), p + "/alpha");
        e.x_facet_slack = read_number(member(rs[i], "x_facet_slack", p), p + "/x_facet_slack");
        e.u_facet_slack = read_number(member(rs[i], "u_facet_slack", p), p + "/u_facet_slack");
      } else if (has(rs[i], "reason")) {
        e.outcome.reason = read_string(rs[i].at("reason"), p + "/reason");
      }
      b.report.push_back(e);
    }
  }
  return b;
}

Bundle load_bundle(const std::string& file, bool verify) { return parse_bundle(read_json_file(file), verify); }

void save_bundle(const std::string& file, const Bundle& b) { write_json_file(file, bundle_to_json(b)); }

}  // namespace pnpmpc::io
