#include "pnpmpc/pnp/pnp.hpp"
#include "pnpmpc/util/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <stdexcept>

namespace pnpmpc::pnp {

namespace {

void apply_update(model::Network& net, const TopologyUpdate& update) {
  for (const auto& [id, a] : update.A) {
    auto& s = net.subsystem(id);
    if (a.rows() != s.n() || a.cols() != s.n() || !a.allFinite())
      throw std::invalid_argument("replacement A for subsystem " + std::to_string(id) + " has wrong shape");
    s.A = a;
  }
  for (const auto& [id, b] : update.B) {
    auto& s = net.subsystem(id);
    if (b.rows() != s.n() || b.cols() != s.m() || !b.allFinite())
      throw std::invalid_argument("replacement B for subsystem " + std::to_string(id) + " has wrong shape");
    s.B = b;
  }
  for (const auto& [id, l] : update.L) {
    auto& s = net.subsystem(id);
    if (l.rows() != s.n() || l.cols() != s.L.cols() || !l.allFinite())
      throw std::invalid_argument("replacement L for subsystem " + std::to_string(id) + " has wrong shape");
    s.L = l;
  }
  for (const auto& c : update.couplings) net.replace_coupling(c);
}

std::set<int> touched_by(const TopologyUpdate& update) {
  std::set<int> ids;
  for (const auto* m : {&update.A, &update.B, &update.L})
    for (const auto& [id, a] : *m) ids.insert(id);
  for (const auto& c : update.couplings) ids.insert(c.to);
  return ids;
}

// Designs `ids` in order; the first failure stops the transaction.
bool redesign(Deployment& next, const std::vector<int>& ids, int threads,
              Transaction& tx) {
  auto results = design_many(next, next.net, ids, threads);
  for (auto& [outcome, c] : results) {
    tx.outcomes.push_back(outcome);
    if (!outcome.ok) {
      tx.reason = "subsystem " + std::to_string(outcome.id) + ": " + outcome.reason;
      return false;
    }
    next.controllers[outcome.id] = std::move(*c);
  }
  return true;
}

}  // namespace

const ctrl::ControllerConfig& Deployment::config_for(int id) const {
  auto it = overrides.find(id);
  return it == overrides.end() ? config : it->second;
}

std::vector<std::pair<DesignOutcome, std::optional<ctrl::TubeController>>> design_many(
    const Deployment& dep, const model::Network& net, const std::vector<int>& ids, int threads) {
  std::vector<std::pair<DesignOutcome, std::optional<ctrl::TubeController>>> out(ids.size());
  util::parallel_for(ids.size(), threads, [&](size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto& [o, c] = out[i];
    o.id = ids[i];
    try {
      auto r = ctrl::design_controller(net, ids[i], dep.config_for(ids[i]));
      o.ok = r.ok;
      o.attempted_k = r.attempted_k;
      o.reason = r.reason;
      if (r.ok) c = std::move(r.controller);
    } catch (const std::exception& e) {
      o.reason = e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return out;
}

std::vector<DesignOutcome> design_all(Deployment& dep, int threads) {
  auto results = design_many(dep, dep.net, dep.net.ids(), threads);
  std::vector<DesignOutcome> outcomes;
  std::map<int, ctrl::TubeController> controllers;
  bool ok = true;
  for (auto& [o, c] : results) {
    ok = ok && o.ok;
    if (c) controllers.emplace(o.id, std::move(*c));
    outcomes.push_back(std::move(o));
  }
  if (ok) dep.controllers = std::move(controllers);
  return outcomes;
}

Transaction plug_in(Deployment& dep, model::Subsystem sub, const std::vector<model::Coupling>& couplings,
                    const TopologyUpdate& update, const std::optional<ctrl::ControllerConfig>& cfg, int threads) {
  Transaction tx;
  tx.op = Operation::kPlug;
  tx.target = sub.id;
  if (dep.net.contains(sub.id)) throw std::invalid_argument("subsystem " + std::to_string(sub.id) + " already exists");
  for (const auto& c : couplings)
    if (c.from != sub.id && c.to != sub.id)
      throw std::invalid_argument("plug-in couplings must involve the new subsystem");
  if (touched_by(update).count(sub.id)) throw std::invalid_argument("topology update cannot target the new subsystem");

  Deployment next = dep;
  sub.normalize();
  sub.validate();
  next.net.add_subsystem(sub);
  for (const auto& c : couplings) next.net.add_coupling(c);
  apply_update(next.net, update);
  if (cfg) next.overrides[sub.id] = *cfg;

  std::set<int> rest(next.net.successors(sub.id).begin(), next.net.successors(sub.id).end());
  for (int id : touched_by(update)) rest.insert(id);
  rest.erase(sub.id);
  tx.redesign_set.push_back(sub.id);
  tx.redesign_set.insert(tx.redesign_set.end(), rest.begin(), rest.end());

  // The new subsystem alone first: successors are only worth designing when it fits.
  if (!redesign(next, {sub.id}, 1, tx)) return tx;
  if (!redesign(next, {rest.begin(), rest.end()}, threads, tx)) return tx;
  dep = std::move(next);
  tx.committed = true;
  return tx;
}

Transaction unplug(Deployment& dep, int id, RedesignPolicy policy, const TopologyUpdate& update, int threads) {
  Transaction tx;
  tx.op = Operation::kUnplug;
  tx.target = id;
  if (!dep.net.contains(id)) throw std::invalid_argument("unknown subsystem " + std::to_string(id));

  Deployment next = dep;
  std::set<int> ids = touched_by(update);
  if (policy == RedesignPolicy::kPerformance) ids.insert(dep.net.successors(id).begin(), dep.net.successors(id).end());
  if (ids.count(id)) throw std::invalid_argument("topology update cannot target the removed subsystem");
  next.net.remove_subsystem(id);
  next.controllers.erase(id);
  next.overrides.erase(id);
  apply_update(next.net, update);

  tx.redesign_set.assign(ids.begin(), ids.end());
  if (!redesign(next, tx.redesign_set, threads, tx)) return tx;
  dep = std::move(next);
  tx.committed = true;
  return tx;
}

}  // namespace pnpmpc::pnp
