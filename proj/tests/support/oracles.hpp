#pragma once

// Independent reference computations for tests: none of these call into the
// solver code they are used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"

namespace oracle {

/// Euclidean projection of b onto {x >= 0, sum x = d} by trying every
/// support set: on support S, x_i = b_i - lambda with
/// lambda = (sum_S b - d) / |S|; the answer is the KKT-feasible candidate
/// (x_S >= 0, b_i <= lambda off S) closest to b.
inline std::vector<double> project_simplex_exhaustive(std::span<const double> b,
                                                      double d) {
  const std::size_t n = b.size();
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sum += b[i];
        ++count;
      }
    }
    const double lambda = (sum - d) / count;
    std::vector<double> x(n, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (mask & (1u << i)) {
        x[i] = b[i] - lambda;
        if (x[i] < -1e-12) ok = false;
        x[i] = std::max(x[i], 0.0);
      } else if (b[i] - lambda > 1e-12) {
        ok = false;
      }
    }
    if (!ok) continue;
    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) dist += (x[i] - b[i]) * (x[i] - b[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

/// Separable network: links with BPR costs, paths as link subsets, one
/// demand per OD block.
struct SeparableInstance {
  struct Link {
    double t0, alpha, beta, capacity;
  };
  std::vector<Link> links;
  std::vector<std::vector<std::size_t>> paths;  // link indices
  std::vector<std::size_t> block_begin;         // paths of block i:
  std::vector<std::size_t> block_end;           //   [begin, end)
  std::vector<double> demand;

  double link_cost(std::size_t a, double f) const {
    const auto& l = links[a];
    return l.t0 * (1.0 + l.alpha * std::pow(f / l.capacity, l.beta));
  }
  std::vector<double> link_flows(std::span<const double> x) const {
    std::vector<double> f(links.size(), 0.0);
    for (std::size_t p = 0; p < paths.size(); ++p) {
      for (std::size_t a : paths[p]) f[a] += x[p];
    }
    return f;
  }
  std::vector<double> path_costs(std::span<const double> x) const {
    const auto f = link_flows(x);
    std::vector<double> c(paths.size(), 0.0);
    for (std::size_t p = 0; p < paths.size(); ++p) {
      for (std::size_t a : paths[p]) c[p] += link_cost(a, f[a]);
    }
    return c;
  }
};

/// Random instance: up to 4 blocks, up to 6 paths in total, at least one
/// path per block; paths draw 1-3 links from a shared pool.
inline SeparableInstance random_separable(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nblocks(1, 4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  SeparableInstance inst;
  const int blocks = nblocks(rng);
  const int max_paths = 6;
  std::vector<int> per_block(blocks, 1);
  for (int extra = max_paths - blocks; extra > 0; --extra) {
    if (u01(rng) < 0.7) ++per_block[std::uniform_int_distribution<int>(0, blocks - 1)(rng)];
  }
  const int num_links = std::uniform_int_distribution<int>(3, 8)(rng);
  for (int a = 0; a < num_links; ++a) {
    inst.links.push_back({0.5 + 2.0 * u01(rng), 0.15 + u01(rng),
                          static_cast<double>(std::uniform_int_distribution<int>(1, 4)(rng)),
                          5.0 + 20.0 * u01(rng)});
  }
  for (int b = 0; b < blocks; ++b) {
    inst.block_begin.push_back(inst.paths.size());
    for (int k = 0; k < per_block[b]; ++k) {
      std::vector<std::size_t> links;
      const int len = std::uniform_int_distribution<int>(1, 3)(rng);
      while (static_cast<int>(links.size()) < len) {
        const auto a = static_cast<std::size_t>(
            std::uniform_int_distribution<int>(0, num_links - 1)(rng));
        if (std::find(links.begin(), links.end(), a) == links.end()) links.push_back(a);
      }
      std::sort(links.begin(), links.end());
      inst.paths.push_back(links);
    }
    inst.block_end.push_back(inst.paths.size());
    inst.demand.push_back(2.0 + 18.0 * u01(rng));
  }
  return inst;
}

/// Frank-Wolfe on the Beckmann objective with exact (bisection) line search.
/// Returns equilibrium link flows.
inline std::vector<double> frank_wolfe_link_flows(const SeparableInstance& inst,
                                                  int max_iterations = 200000,
                                                  double gap_tol = 1e-11) {
  const std::size_t n = inst.paths.size();
  auto all_or_nothing = [&](const std::vector<double>& costs) {
    std::vector<double> y(n, 0.0);
    for (std::size_t b = 0; b < inst.demand.size(); ++b) {
      std::size_t best = inst.block_begin[b];
      for (std::size_t p = inst.block_begin[b]; p < inst.block_end[b]; ++p) {
        if (costs[p] < costs[best]) best = p;
      }
      y[best] = inst.demand[b];
    }
    return y;
  };
  std::vector<double> x = all_or_nothing(inst.path_costs(std::vector<double>(n, 0.0)));
  for (int it = 0; it < max_iterations; ++it) {
    const auto c = inst.path_costs(x);
    const auto y = all_or_nothing(c);
    double tt = 0.0, sp = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      tt += c[p] * x[p];
      sp += c[p] * y[p];
    }
    if ((tt - sp) / std::max(sp, 1e-300) < gap_tol) break;
    // d/ds Beckmann(x + s(y - x)) = sum_a c_a(f + s(g - f)) (g_a - f_a).
    const auto f = inst.link_flows(x);
    const auto g = inst.link_flows(y);
    auto slope = [&](double s) {
      double v = 0.0;
      for (std::size_t a = 0; a < f.size(); ++a) {
        v += inst.link_cost(a, f[a] + s * (g[a] - f[a])) * (g[a] - f[a]);
      }
      return v;
    };
    double lo = 0.0, hi = 1.0;
    if (slope(1.0) <= 0.0) {
      lo = 1.0;
    } else {
      for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? hi : lo) = mid;
      }
    }
    for (std::size_t p = 0; p < n; ++p) x[p] += lo * (y[p] - x[p]);
  }
  return inst.link_flows(x);
}

/// Tour H -> W -> H with a private car on a congestible road and a bus.
/// Car tour cost 4 + 2 (F/10)^2 against 7 by bus: F = 10 sqrt(1.5) of 20.
inline nlohmann::json mini_scenario() {
  return nlohmann::json::parse(R"({
    "name": "mini",
    "locations": ["H", "W"],
    "congestion_groups": ["road"],
    "modes": [
      {"id": "car", "congestion_group": "road", "private_vehicle": true},
      {"id": "bus"}
    ],
    "subscriptions": [
      {"id": "ticket", "kind": "mode", "daily_cost": 1, "member_modes": ["bus"]}
    ],
    "classes": [
      {"id": "k1", "trip_chain": ["H", "W", "H"], "demand": 20,
       "allowed_modes": ["car", "bus"],
       "unit_costs": {"car": {"main": 10}, "bus": {"wait": 10, "main": 10}}}
    ],
    "trip_links": [
      {"from": "H", "to": "W", "length_km": 2},
      {"from": "W", "to": "H", "length_km": 2}
    ],
    "cost_params": {
      "car": {"fuel_per_km": 0.5,
              "main": {"t0": 0.1, "alpha": 1, "beta": 2, "capacity": 10}},
      "bus": {"fuel_paid_by_user": false,
              "wait": {"t0": 0.1},
              "main": {"t0": 0.2}}
    },
    "solver": {"psi": 0.5, "gap_tolerance": 1e-9, "max_iterations": 200000}
  })");
}

}  // namespace oracle
