// Command-line front end: design, simulate, plug, unplug, check, export.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "pnpmpc/io/builtins.hpp"
#include "pnpmpc/io/bundle.hpp"
#include "pnpmpc/io/check.hpp"
#include "pnpmpc/sim/sim.hpp"

namespace {

using namespace pnpmpc;
using io::Json;

enum Exit { kOk = 0, kUsage = 1, kDesign = 2, kInfeasible = 3 };

int env_threads() {
  if (const char* s = std::getenv("PNPMPC_THREADS")) {
    const int t = std::atoi(s);
    if (t > 0) return t;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void print_report(const std::vector<io::ReportEntry>& report) {
  for (const auto& e : report) {
    if (e.outcome.ok)
      std::printf("subsystem %d: ok k=%d alpha=%.6g x_slack=%.3g u_slack=%.3g (%.2fs)\n", e.outcome.id, e.k, e.alpha,
                  e.x_facet_slack, e.u_facet_slack, e.outcome.seconds);
    else
      std::printf("subsystem %d: FAILED %s\n", e.outcome.id, e.outcome.reason.c_str());
  }
}

void print_transaction(const pnp::Transaction& tx) {
  std::string set;
  for (size_t i = 0; i < tx.redesign_set.size(); ++i) set += (i ? ", " : "") + std::to_string(tx.redesign_set[i]);
  std::printf("%s %d: %s\n", tx.op == pnp::Operation::kPlug ? "plug" : "unplug", tx.target,
              tx.committed ? "committed" : "rejected");
  std::printf("redesigned: [%s]\n", set.c_str());
  for (const auto& o : tx.outcomes)
    std::printf("  subsystem %d: %s%s\n", o.id, o.ok ? "ok" : "FAILED ", o.ok ? "" : o.reason.c_str());
  if (!tx.committed) std::printf("reason: %s\n", tx.reason.c_str());
}

struct DesignOpts {
  int k = -1;
  double omega = -1.0;
  bool minimize_alpha = false;
  bool feasibility = false;

  void apply(ctrl::ControllerConfig& c) const {
    if (k >= 0) c.rci.k = k;
    if (omega >= 0.0) c.rci.omega = omega;
    if (minimize_alpha) c.rci.objective = rci::Objective::kMinAlpha;
    if (feasibility) c.rci.objective = rci::Objective::kFeasibility;
  }
};

int cmd_design(const std::string& scenario_file, const std::string& out, const DesignOpts& opts, int threads) {
  auto s = io::load_scenario(scenario_file);
  opts.apply(s.controller);
  for (auto& [id, c] : s.overrides) opts.apply(c);
  const auto run = io::design_scenario(s, threads);
  print_report(run.bundle.report);
  if (!run.ok) {
    std::fprintf(stderr, "design failed; no bundle written\n");
    return kDesign;
  }
  io::save_bundle(out, run.bundle);
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

struct SimOpts {
  std::string scenario;
  std::string bundle;
  std::string mode;
  bool record_failure = false;
  std::string csv;
  std::string metrics;
  int steps = -1;
};

Json metrics_json(const sim::Metrics& m, bool has_phi) {
  Json j{{"eta", m.eta}, {"settling_95", m.settling_95}, {"max_slack", m.max_slack}};
  j["phi"] = has_phi ? Json(m.phi) : Json();
  return j;
}

bool all_ties(const model::Network& net) {
  if (net.couplings().empty()) return false;
  for (const auto& c : net.couplings())
    if (!(c.tie_gain > 0.0)) return false;
  return true;
}

int cmd_simulate(const SimOpts& o, int threads) {
  if (o.scenario.empty() && o.bundle.empty()) throw CLI::ValidationError("simulate needs a scenario or --bundle");
  io::Scenario s;
  std::map<int, ctrl::TubeController> controllers;
  if (!o.bundle.empty()) {
    auto b = io::load_bundle(o.bundle);
    if (!o.scenario.empty()) {
      s = io::load_scenario(o.scenario);
      if (model::fingerprint(s.net) != model::fingerprint(b.scenario.net))
        throw io::FingerprintError("bundle was designed for a different network than " + o.scenario);
    } else {
      s = b.scenario;
    }
    controllers = std::move(b.controllers);
  } else {
    s = io::load_scenario(o.scenario);
  }

  sim::SimConfig cfg = s.simulation;
  cfg.threads = threads;
  cfg.record_failure = o.record_failure;
  if (o.steps >= 0) cfg.steps = o.steps;
  const bool naive = o.mode == "naive";
  if (!o.mode.empty() && !naive) cfg.mode = io::parse_mode(o.mode, "--mode");

  pnp::Deployment dep;
  dep.net = s.net;
  dep.config = s.controller;
  dep.overrides = s.overrides;

  sim::SimTrace trace;
  sim::Metrics m;
  if (naive) {
    std::map<int, sim::NaiveMpc> cs;
    std::map<int, Eigen::MatrixXd> q, r;
    for (int id : s.net.ids()) {
      const auto& w = dep.config_for(id).weights;
      cs[id] = sim::naive_mpc_controller(s.net.subsystem(id), w.N, w.Q, w.R);
      q[id] = cs[id].Q;
      r[id] = cs[id].R;
    }
    trace = sim::run_naive(s.net, cs, cfg);
    if (!trace.steps.empty()) m.eta = sim::eta_index(trace, q, r);
    if (!trace.steps.empty() && all_ties(s.net)) m.phi = sim::phi_index(trace, sim::ties_of(s.net), s.sampling_time);
    m.settling_95 = sim::settling_95(trace);
    m.max_slack = sim::max_slack(trace, s.net);
  } else {
    if (controllers.empty()) {
      const auto run = io::design_scenario(s, threads);
      if (!run.ok) {
        print_report(run.bundle.report);
        std::fprintf(stderr, "design failed\n");
        return kDesign;
      }
      controllers = run.bundle.controllers;
    }
    if (s.perturb > 0.0) cfg.x0 = sim::perturbed_start(controllers, cfg.seed, s.perturb);
    trace = sim::run(s.net, controllers, cfg);
    const bool ties = all_ties(s.net);
    m = sim::metrics(trace, s.net, controllers, ties ? sim::ties_of(s.net) : std::vector<sim::Tie>{},
                     s.sampling_time);
  }

  if (!o.csv.empty()) {
    std::ofstream out(o.csv);
    if (!out) throw std::runtime_error("cannot write " + o.csv);
    sim::write_csv(trace, out);
  }
  if (!o.metrics.empty()) io::write_json_file(o.metrics, metrics_json(m, all_ties(s.net) && !trace.steps.empty()));

  std::printf("steps: %zu, infeasible: %d, violations: %d, eta: %.6g, settling_95: %d\n", trace.steps.size(),
              trace.infeasible_steps(), trace.violations(), m.eta, m.settling_95);
  if (!trace.completed) {
    std::fprintf(stderr, "infeasible at t=%d (subsystem %d): %s\n", trace.failed_step, trace.failed_id,
                 trace.message.c_str());
    return kInfeasible;
  }
  if (o.record_failure && trace.infeasible_steps() > 0)
    std::fprintf(stderr, "recorded %d infeasible steps\n", trace.infeasible_steps());
  return kOk;
}

void commit(io::Bundle& b, const pnp::Deployment& dep, const pnp::Transaction& tx) {
  b.scenario.net = dep.net;
  b.scenario.overrides = dep.overrides;
  b.controllers = dep.controllers;
  b.stored_fingerprints.clear();
  for (auto it = b.scenario.simulation.x0.begin(); it != b.scenario.simulation.x0.end();)
    it = dep.net.contains(it->first) ? std::next(it) : b.scenario.simulation.x0.erase(it);
  std::erase_if(b.scenario.simulation.loads, [&](const sim::LoadStep& l) { return !dep.net.contains(l.id); });
  std::erase_if(b.report, [&](const io::ReportEntry& e) { return !dep.net.contains(e.outcome.id); });
  for (const auto& o : tx.outcomes) {
    const auto* c = dep.controllers.count(o.id) ? &dep.controllers.at(o.id) : nullptr;
    auto e = io::report_entry(o, c);
    auto it = std::find_if(b.report.begin(), b.report.end(), [&](const auto& r) { return r.outcome.id == o.id; });
    if (it == b.report.end())
      b.report.push_back(e);
    else
      *it = e;
  }
  std::sort(b.report.begin(), b.report.end(), [](const auto& a, const auto& c) { return a.outcome.id < c.outcome.id; });
}

int cmd_plug(const std::string& delta_file, const std::string& bundle_file, std::string out, int threads) {
  auto b = io::load_bundle(bundle_file);
  auto dep = b.deployment();
  const auto d = io::parse_delta(io::read_json_file(delta_file), dep.net, dep.config);
  if (d.op != pnp::Operation::kPlug) throw io::SchemaError("/op", "plug expects a plug delta");
  const auto tx = pnp::plug_in(dep, d.subsystem, d.couplings, d.update, d.controller, threads);
  print_transaction(tx);
  if (!tx.committed) return kDesign;
  commit(b, dep, tx);
  if (out.empty()) out = bundle_file;
  io::save_bundle(out, b);
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

int cmd_unplug(const std::string& delta_file, const std::string& bundle_file, int id, const std::string& policy,
               std::string out, int threads) {
  auto b = io::load_bundle(bundle_file);
  auto dep = b.deployment();
  io::Delta d;
  d.op = pnp::Operation::kUnplug;
  if (!delta_file.empty()) {
    d = io::parse_delta(io::read_json_file(delta_file), dep.net, dep.config);
    if (d.op != pnp::Operation::kUnplug) throw io::SchemaError("/op", "unplug expects an unplug delta");
  }
  if (id > 0) d.id = id;
  if (!dep.net.contains(d.id)) throw CLI::ValidationError("unplug needs the id of an existing subsystem");
  if (!policy.empty())
    d.policy = policy == "performance" ? pnp::RedesignPolicy::kPerformance : pnp::RedesignPolicy::kNone;
  const auto tx = pnp::unplug(dep, d.id, d.policy, d.update, threads);
  print_transaction(tx);
  if (!tx.committed) return kDesign;
  commit(b, dep, tx);
  if (out.empty()) out = bundle_file;
  io::save_bundle(out, b);
  std::printf("wrote %s\n", out.c_str());
  return kOk;
}

int cmd_check(const std::string& bundle_file, const io::CheckConfig& cfg, const std::string& out) {
  const auto b = io::load_bundle(bundle_file, false);
  const auto rep = io::check_bundle(b, cfg);
  const auto j = io::check_report_json(rep);
  if (!out.empty()) io::write_json_file(out, j);
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_export(const std::string& name, const std::string& bundle_file, const std::string& out, bool list) {
  if (list) {
    for (const auto& n : io::builtin_names()) std::printf("%s%s\n", n.c_str(), io::is_builtin_delta(n) ? " (delta)" : "");
    return kOk;
  }
  if (out.empty()) throw CLI::ValidationError("export needs -o");
  Json j;
  if (!name.empty()) {
    try {
      j = io::builtin(name);
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError(e.what());
    }
  } else if (!bundle_file.empty()) {
    j = io::scenario_to_json(io::load_bundle(bundle_file).scenario);
  } else {
    throw CLI::ValidationError("export needs --builtin or --bundle");
  }
  io::write_json_file(out, j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plug-and-play tube MPC: design, simulate and reconfigure networks of constrained linear systems"};
  app.require_subcommand(1);
  int threads = env_threads();
  app.add_option("--threads", threads, "Worker threads (default: PNPMPC_THREADS or hardware)")->check(CLI::PositiveNumber);

  std::string scenario, bundle, out, csv, metrics_out, delta, policy, builtin_name;
  DesignOpts dopts;
  auto* design = app.add_subcommand("design", "Design controllers for every subsystem of a scenario");
  design->add_option("scenario", scenario, "Scenario JSON")->required();
  design->add_option("-o,--out", out, "Bundle to write")->required();
  design->add_option("--k", dopts.k, "RCI steps (0 picks the controllability index)")->check(CLI::NonNegativeNumber);
  design->add_option("--omega", dopts.omega, "Inflation radius of Z0 (0 picks a default)")->check(CLI::NonNegativeNumber);
  auto* ma = design->add_flag("--minimize-alpha", dopts.minimize_alpha, "Minimize alpha (default)");
  design->add_flag("--feasibility", dopts.feasibility, "Stop at the first feasible alpha < 1")->excludes(ma);

  SimOpts sopts;
  auto* simulate = app.add_subcommand("simulate", "Run a closed-loop simulation");
  simulate->add_option("scenario", sopts.scenario, "Scenario JSON (defaults to the one stored in the bundle)");
  simulate->add_option("--bundle", sopts.bundle, "Designed bundle; without it controllers are designed first");
  simulate->add_option("--mode", sopts.mode, "Control law")
      ->check(CLI::IsMember({"decentralized", "distributed", "naive"}));
  simulate->add_flag("--record-failure", sopts.record_failure, "Apply zero input and continue after infeasibility");
  simulate->add_option("--csv", sopts.csv, "Trace CSV to write");
  simulate->add_option("--metrics", sopts.metrics, "Metrics JSON to write");
  simulate->add_option("--steps", sopts.steps, "Override the scenario horizon T")->check(CLI::NonNegativeNumber);

  auto* plug = app.add_subcommand("plug", "Add a subsystem to a designed network");
  plug->add_option("delta", delta, "Plug-in delta JSON")->required();
  plug->add_option("--bundle", bundle, "Bundle to update")->required();
  plug->add_option("-o,--out", out, "Where to write the updated bundle (default: in place)");

  int unplug_id = 0;
  auto* unplug = app.add_subcommand("unplug", "Remove a subsystem from a designed network");
  unplug->add_option("delta", delta, "Unplug delta JSON with topology updates");
  unplug->add_option("--bundle", bundle, "Bundle to update")->required();
  unplug->add_option("--id", unplug_id, "Subsystem to remove");
  unplug->add_option("--policy", policy, "Successor redesign policy")
      ->check(CLI::IsMember({"none", "performance"}));
  unplug->add_option("-o,--out", out, "Where to write the updated bundle (default: in place)");

  io::CheckConfig ccfg;
  auto* check = app.add_subcommand("check", "Verify the invariance, inclusion and homogeneity of a bundle");
  check->add_option("bundle", bundle, "Bundle JSON")->required();
  check->add_option("--samples", ccfg.samples, "Samples per subsystem (0: structural checks only)")
      ->check(CLI::NonNegativeNumber);
  check->add_option("--seed", ccfg.seed, "Sampling seed");
  check->add_option("-o,--out", out, "Report JSON to write");

  bool list = false;
  auto* exp = app.add_subcommand("export", "Write a built-in scenario or the scenario stored in a bundle");
  exp->add_option("--builtin", builtin_name, "Built-in scenario or delta name");
  exp->add_option("--bundle", bundle, "Bundle whose scenario is exported");
  exp->add_option("-o,--out", out, "JSON to write");
  exp->add_flag("--list", list, "List built-in names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*design) return cmd_design(scenario, out, dopts, threads);
    if (*simulate) return cmd_simulate(sopts, threads);
    if (*plug) return cmd_plug(delta, bundle, out, threads);
    if (*unplug) return cmd_unplug(delta, bundle, unplug_id, policy, out, threads);
    if (*check) return cmd_check(bundle, ccfg, out);
    if (*exp) return cmd_export(builtin_name, bundle, out, list);
  } catch (const io::SchemaError& e) {
    std::fprintf(stderr, "schema error at %s\n", e.what());
    return kUsage;
  } catch (const io::FingerprintError& e) {
    std::fprintf(stderr, "fingerprint mismatch: %s\n", e.what());
    return kUsage;
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
