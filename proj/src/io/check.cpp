#include "pnpmpc/io/check.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace pnpmpc::io {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Largest h_P(c_r) + h_Q(c_r) - d_r over the facets of `outer`.
template <class P>
double sum_excess(const geom::HPolytope& outer, const P& inner, const geom::VAggregate& agg) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < outer.rows(); ++r) {
    const Eigen::VectorXd c = outer.C.row(r).transpose();
    worst = std::max(worst, geom::support_value(inner, c) + geom::support_value(agg, c) - outer.d(r));
  }
  return worst;
}

double facet_excess(const geom::HPolytope& outer, const geom::VAggregate& agg) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < outer.rows(); ++r)
    worst = std::max(worst, geom::support_value(agg, outer.C.row(r).transpose()) - outer.d(r));
  return worst;
}

}  // namespace

bool CheckReport::pass() const {
  for (const auto& i : items)
    if (!i.pass) return false;
  return true;
}

Eigen::VectorXd sample_aggregate(const geom::VAggregate& z, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(z.dim());
  for (const auto& b : z.blocks) {
    if (u(rng) < 0.25) {
      std::uniform_int_distribution<int> pick(0, b.size() - 1);
      x += b.vertices[pick(rng)];
      continue;
    }
    Eigen::VectorXd lam(b.size());
    for (int f = 0; f < b.size(); ++f) lam[f] = e(rng);
    lam /= lam.sum();
    for (int f = 0; f < b.size(); ++f) x += lam[f] * b.vertices[f];
  }
  return z.sigma * x;
}

CheckReport check_bundle(const Bundle& b, const CheckConfig& cfg) {
  CheckReport rep;
  auto add = [&](int id, std::string name, bool pass, std::string detail) {
    rep.items.push_back({id, std::move(name), pass, std::move(detail)});
  };

  for (const int id : b.scenario.net.ids())
    if (!b.controllers.count(id)) add(id, "controller_present", false, "no controller for subsystem");

  for (const auto& [id, c] : b.controllers) {
    const auto& r = c.rci;
    const int n = c.sub.n(), m = c.sub.m();

    // Structural.
    if (auto it = b.stored_fingerprints.find(id); it != b.stored_fingerprints.end()) {
      const auto fp = ctrl::fingerprint(c);
      add(id, "fingerprint", fp == it->second, "stored " + hex(it->second) + ", recomputed " + hex(fp));
    }
    bool shape = r.k >= 1 && static_cast<int>(r.z_blocks.size()) == r.k &&
                 static_cast<int>(r.u_blocks.size()) == r.k && c.Xhat.dim() == n && c.V.dim() == m;
    for (const auto& z : r.z_blocks) shape = shape && z.dim() == n;
    for (const auto& u : r.u_blocks) shape = shape && u.dim() == m;
    add(id, "shapes", shape, "k = " + std::to_string(r.k));
    add(id, "alpha_range", r.alpha >= 0.0 && r.alpha < 1.0, fmt("alpha = %.17g", r.alpha));
    const bool sig = std::abs(r.Z.sigma * (1.0 - r.alpha) - 1.0) <= 1e-12 && r.Uz.sigma == r.Z.sigma;
    add(id, "sigma", sig, fmt("sigma = %.17g", r.Z.sigma));
    if (!shape || !(r.alpha >= 0.0 && r.alpha < 1.0)) continue;

    // Inclusions.
    const double xz = facet_excess(c.sub.X, r.Z);
    add(id, "Z_inside_X", xz < 0.0, fmt("max facet excess %.3e", xz));
    const double uu = facet_excess(c.sub.U, r.Uz);
    add(id, "Uz_inside_U", uu < 0.0, fmt("max facet excess %.3e", uu));
    const double xt = sum_excess(c.sub.X, c.Xhat, r.Z);
    add(id, "Xhat_plus_Z_inside_X", xt <= cfg.inclusion_tol, fmt("max facet excess %.3e", xt));
    const double vt = sum_excess(c.sub.U, c.V, r.Uz);
    add(id, "V_plus_Uz_inside_U", vt <= cfg.inclusion_tol, fmt("max facet excess %.3e", vt));

    if (cfg.samples <= 0) continue;
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(id));

    // Invariance: A z + B kappa(z) + w stays in Z.
    int fails = 0;
    double worst = 0.0;
    for (int s = 0; s < cfg.samples; ++s) {
      const Eigen::VectorXd z = sample_aggregate(r.Z, rng);
      const Eigen::VectorXd w = sample_aggregate(r.W, rng);
      const auto k = ctrl::kappa_bar(r, z);
      if (!k.ok) {
        ++fails;
        continue;
      }
      const auto cert = geom::member_aggregate(r.Z, c.sub.A * z + c.sub.B * k.u + w, cfg.invariance_tol);
      worst = std::max(worst, cert.slack);
      if (!cert.feasible) ++fails;
    }
    add(id, "invariance", fails == 0,
        std::to_string(fails) + " of " + std::to_string(cfg.samples) + " failed, " + fmt("worst slack %.3e", worst));

    // Homogeneity of mu and the control law.
    int hfails = 0;
    double herr = 0.0;
    const int hs = std::min(cfg.samples, 100);
    for (int s = 0; s < hs; ++s) {
      const Eigen::VectorXd z = sample_aggregate(r.Z, rng);
      const auto base = ctrl::kappa_bar(r, z);
      for (double rho : {0.0, 0.3, 1.0, 2.0}) {
        const auto k = ctrl::kappa_bar(r, rho * z);
        if (!base.ok || !k.ok) {
          ++hfails;
          continue;
        }
        const double e = std::abs(k.mu - rho * base.mu);
        herr = std::max(herr, e);
        if (e > cfg.homogeneity_tol) ++hfails;
      }
    }
    const auto zero = ctrl::kappa_bar(r, Eigen::VectorXd::Zero(n));
    const bool zero_ok = zero.ok && zero.mu == 0.0 && (zero.u.array() == 0.0).all();
    add(id, "homogeneity", hfails == 0 && zero_ok,
        std::to_string(hfails) + " failures, " + fmt("max |mu(rz) - r mu(z)| %.3e", herr) +
            (zero_ok ? "" : ", kappa(0) != 0"));
  }
  return rep;
}

Json check_report_json(const CheckReport& r) {
  Json items = Json::array();
  for (const auto& i : r.items) items.push_back({{"id", i.id}, {"check", i.name}, {"pass", i.pass}, {"detail", i.detail}});
  return {{"pass", r.pass()}, {"checks", items}};
}

}  // namespace pnpmpc::io
