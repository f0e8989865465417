// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mmeq/costlib.hpp"
#include "mmeq/mpec.hpp"
#include "mmeq/msp.hpp"
#include "mmeq/netmodel.hpp"
#include "mmeq/pathset.hpp"
#include "mmeq/report.hpp"
#include "mmeq/supernet.hpp"
#include "mmeq/ue.hpp"

#include "../support/oracles.hpp"

using namespace mmeq;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kDir = MMEQ_SCENARIO_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- 1 -------------------------------------------------------------------

Outcome projection_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240101);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_real_distribution<double> entry(-5.0, 5.0);
  std::uniform_real_distribution<double> demand(0.0, 10.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> b(static_cast<std::size_t>(size(rng)));
    for (auto& v : b) v = entry(rng);
    double d = demand(rng);
    if (d == 0.0) d = 10.0;  // (0, 10]
    const auto got = project_block(b, d);
    const auto want = oracle::project_simplex_exhaustive(b, d);
    for (std::size_t i = 0; i < b.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0,
          fmt::format("1000 blocks, max |diff| = {:.3g} (<= 1e-9), {:.3f} s (< 5 s)", worst, secs)};
}

// ---- 2 -------------------------------------------------------------------

Outcome closed_form_wardrop() {
  std::vector<Block> blocks(1);
  blocks[0].end = 2;
  blocks[0].demand = 3.0;
  const CostOperator op = [](std::span<const double> x, std::span<double> c) {
    c[0] = 1.0 + x[0];
    c[1] = 2.0 + x[1];
  };
  SolverSettings s;
  s.gap_tolerance = 1e-9;
  s.step_tolerance = 1e-14;
  const auto sol = solve_vi(op, blocks, 2, s);
  const double dx = std::max(std::abs(sol.x[0] - 2.0), std::abs(sol.x[1] - 1.0));
  const double dc = std::max(std::abs(sol.path_costs[0] - 3.0), std::abs(sol.path_costs[1] - 3.0));
  return {sol.converged && dx <= 1e-4 && dc <= 1e-4 && sol.gap < 1e-6,
          fmt::format("x = ({:.8f}, {:.8f}), costs = ({:.8f}, {:.8f}), gap = {:.3g}",
                      sol.x[0], sol.x[1], sol.path_costs[0], sol.path_costs[1], sol.gap)};
}

// ---- 3 -------------------------------------------------------------------

Outcome beckmann_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(777);
  double worst = 0.0;
  bool all_converged = true;
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_separable(rng);
    std::vector<Block> blocks;
    for (std::size_t b = 0; b < inst.demand.size(); ++b) {
      Block blk;
      blk.class_index = b;
      blk.begin = inst.block_begin[b];
      blk.end = inst.block_end[b];
      blk.demand = inst.demand[b];
      blocks.push_back(blk);
    }
    const CostOperator op = [&inst](std::span<const double> x, std::span<double> c) {
      const auto costs = inst.path_costs(x);
      std::copy(costs.begin(), costs.end(), c.begin());
    };
    SolverSettings s;
    s.gap_tolerance = 1e-10;
    s.step_tolerance = 1e-14;
    const auto sol = solve_vi(op, blocks, inst.paths.size(), s);
    all_converged = all_converged && sol.converged;
    const auto mpm = inst.link_flows(sol.x);
    const auto fw = oracle::frank_wolfe_link_flows(inst);
    for (std::size_t a = 0; a < fw.size(); ++a) {
      worst = std::max(worst, std::abs(mpm[a] - fw[a]) / std::max(std::abs(fw[a]), 1e-9));
    }
  }
  const double secs = seconds_since(t0);
  return {all_converged && worst <= 1e-3 && secs < 60.0,
          fmt::format("20 instances, max relative link-flow diff = {:.3g} (<= 1e-3), {:.2f} s (< 60 s)",
                      worst, secs)};
}

// ---- 4 -------------------------------------------------------------------

Outcome golden_wardrop() {
  const auto cfg = load_scenario(kDir + "/ex1.json");
  const auto net = build_supernetwork(cfg);
  const auto ps = build_path_set(net, cfg);
  CostModel model(cfg, net, ps);
  const auto v = default_fleet(cfg, net);

  // At the configured stopping rule the summed relative gap is below 1e-4;
  // the per-path check is then run on an equilibrium solved to 1e-9.
  const auto coarse = solve_ue(model, v, cfg.solver);
  auto tight_settings = cfg.solver;
  tight_settings.gap_tolerance = 1e-9;
  tight_settings.step_tolerance = 1e-300;
  const auto sol = solve_ue(model, v, tight_settings);

  double conservation = 0.0;
  for (const auto& b : ps.blocks()) {
    double sum = 0.0;
    for (std::size_t p = b.begin; p < b.end; ++p) sum += sol.x[p];
    conservation = std::max(conservation, std::abs(sum - b.demand));
  }
  const double viol = wardrop_violation(sol.x, sol.path_costs, ps.blocks());
  const double coarse_viol = wardrop_violation(coarse.x, coarse.path_costs, ps.blocks());
  return {sol.converged && viol <= 1e-4 && conservation <= 1e-9,
          fmt::format("v = 36; used-path violation {:.3g} (<= 1e-4) at gap {:.2g}, conservation {:.2g} "
                      "(<= 1e-9); at the configured gap 1e-4: {} iterations, violation {:.3g} "
                      "(reference run: 2033 iterations)",
                      viol, sol.gap, conservation, coarse.iterations, coarse_viol)};
}

// ---- 5 -------------------------------------------------------------------

Outcome golden_mpec(double& level_out, double& pr_out) {
  const auto t0 = Clock::now();
  const auto cfg = load_scenario(kDir + "/ex1.json");
  MpecProblem problem(cfg);
  const auto r = solve_mpec(problem);
  level_out = r.levels.front();
  pr_out = r.profit.pr;

  // 1-D brute-force grid of the common fleet level.
  std::vector<double> grid;
  for (double l = cfg.mpec->v_lower; l <= cfg.mpec->v_upper + 1e-9; l += 1.0) grid.push_back(l);
  const auto curve = profit_curve(problem, grid);
  std::size_t best = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].profit.pr > curve[best].profit.pr) best = i;
  }
  const double lo = curve[best == 0 ? 0 : best - 1].level;
  const double hi = curve[std::min(best + 1, curve.size() - 1)].level;
  const bool bracketed = level_out >= lo - 1e-9 && level_out <= hi + 1e-9;
  const bool in_range = level_out >= 29.0 && level_out <= 43.0;
  const double secs = seconds_since(t0);
  return {r.reliable && in_range && bracketed && secs < 600.0,
          fmt::format("v* = {:.4g} vehicles per car-sharing link ({:.4g} in total), Pr = {:.4g}; "
                      "required [29, 43]; grid best at {:.4g} (Pr {:.4g}), bracket [{:.4g}, {:.4g}] {}; {:.2f} s",
                      level_out, r.fleet_total, r.profit.pr, curve[best].level,
                      curve[best].profit.pr, lo, hi, bracketed ? "holds" : "misses", secs)};
}

// ---- 6 -------------------------------------------------------------------

Outcome non_separability(double level_ns, double pr_ns) {
  const auto doc = read_json_file(kDir + "/ex1.json");
  bool pass = true;
  std::string detail = fmt::format("non-separable v* = {:.4g}, Pr = {:.6g}", level_ns, pr_ns);
  for (const auto& [car, cs] : {std::pair{220.0, 30.0}, std::pair{210.0, 40.0}}) {
    const auto r = solve_mpec(load_scenario_json(separable_split(doc, car, cs)));
    const double margin = std::abs(r.profit.pr - pr_ns);
    const bool differs = margin > 1e-6 * std::max(1.0, std::abs(pr_ns));
    const bool fewer = r.levels.front() < level_ns;
    pass = pass && r.reliable && differs && fewer;
    detail += fmt::format("; split {}-{}: v* = {:.4g}, Pr = {:.6g}, |dPr| = {:.3g}, {}",
                          car, cs, r.levels.front(), r.profit.pr, margin,
                          fewer ? "fewer vehicles" : "not fewer vehicles");
  }
  return {pass, detail};
}

// ---- 7 -------------------------------------------------------------------

Outcome package_trends() {
  auto doc = read_json_file(kDir + "/ex2.json");
  const auto cfg = load_scenario_json(doc);
  // Index of the package subscription, for the price axis.
  std::size_t pkg = 0;
  for (std::size_t i = 0; i < cfg.subscriptions.size(); ++i) {
    if (cfg.subscriptions[i].kind == Subscription::Kind::Package) pkg = i;
  }
  const std::string pkg_id = cfg.subscriptions[pkg].id;
  const std::string price_axis = "/subscriptions/" + std::to_string(pkg) + "/daily_cost";
  const std::vector<double> demands{500, 700, 900};
  const auto prices = parse_grid("0.5:1.5:0.1");
  // Shares are compared at a tight equilibrium so solver noise stays far
  // below the monotonicity slack.
  doc = apply_overrides(doc, {{"/solver/gap_tolerance", 1e-9}, {"/solver/step_tolerance", 1e-300}});
  const double slack = 1e-6;

  const std::vector<SweepAxis> axes{{"total_demand", demands}, {price_axis, prices}};
  SweepOptions ue_only;
  ue_only.optimize = false;
  ue_only.jobs = 4;
  const auto shares = profit_response_sweep(doc, axes, ue_only);
  SweepOptions optimized;
  optimized.jobs = 4;
  const auto profits = profit_response_sweep(doc, axes, optimized);

  bool pass = true;
  std::string detail;
  for (std::size_t d = 0; d < demands.size(); ++d) {
    bool pkg_ok = true, car_ok = true;
    double worst_pkg = 0.0, worst_car = 0.0;
    std::size_t max_subs = 0, max_pr = 0;
    for (std::size_t i = 0; i < prices.size(); ++i) {
      const auto& row = shares[d * prices.size() + i];
      pass = pass && row.reliable && profits[d * prices.size() + i].reliable;
      if (i > 0) {
        const auto& prev = shares[d * prices.size() + i - 1];
        const double up = row.subscriber_share.at(pkg_id) - prev.subscriber_share.at(pkg_id);
        const double down = prev.mode_share.at("car") - row.mode_share.at("car");
        worst_pkg = std::max(worst_pkg, up);
        worst_car = std::max(worst_car, down);
        pkg_ok = pkg_ok && up <= slack;
        car_ok = car_ok && down <= slack;
      }
      const auto& pr = profits[d * prices.size() + i];
      const auto& best_subs = profits[d * prices.size() + max_subs];
      if (pr.subscriber_share.at(pkg_id) > best_subs.subscriber_share.at(pkg_id)) max_subs = i;
      if (pr.pr > profits[d * prices.size() + max_pr].pr) max_pr = i;
    }
    const double pr_at_subs = profits[d * prices.size() + max_subs].pr;
    const double pr_best = profits[d * prices.size() + max_pr].pr;
    const bool profit_ok = pr_at_subs >= pr_best - 1e-6 * std::max(1.0, std::abs(pr_best));
    pass = pass && pkg_ok && car_ok && profit_ok;
    const auto& lo = shares[d * prices.size()];
    const auto& hi = shares[d * prices.size() + prices.size() - 1];
    detail += fmt::format(
        "{}demand {}: package share {:.4f} -> {:.4f} (largest rise {:.2g}), car share {:.4f} -> {:.4f} "
        "(largest drop {:.2g}), most subscribers at price {:.2g} with Pr {:.6g}, max Pr {:.6g} at price {:.2g}",
        detail.empty() ? "" : "; ", demands[d], lo.subscriber_share.at(pkg_id),
        hi.subscriber_share.at(pkg_id), worst_pkg, lo.mode_share.at("car"), hi.mode_share.at("car"),
        worst_car, prices[max_subs], pr_at_subs, pr_best, prices[max_pr]);
  }
  return {pass, detail};
}

// ---- 8 -------------------------------------------------------------------

Outcome competition() {
  const auto base = solve_mpec(load_scenario(kDir + "/ex3.json"));
  const auto entrant = solve_mpec(load_scenario(kDir + "/ex3_entrant.json"));
  bool pass = base.reliable && entrant.reliable && entrant.profit.pr < base.profit.pr;
  std::string detail = fmt::format("incumbent max Pr {:.4g} (v* {:.4g}) -> {:.4g} (v* {:.4g}) with entrant",
                                   base.profit.pr, base.levels.front(), entrant.profit.pr,
                                   entrant.levels.front());
  std::vector<double> pr;
  for (const auto& v : load_variants(kDir + "/ex3_variants.json")) {
    const auto r = solve_mpec(load_scenario_json(v.doc));
    pass = pass && r.reliable;
    pr.push_back(r.profit.pr);
    detail += fmt::format("; {} Pr {:.4g} (v* {:.4g})", v.name, r.profit.pr, r.levels.front());
  }
  pass = pass && pr.size() == 4 && pr[3] > pr[0] && pr[3] > pr[1] && pr[3] > pr[2];
  return {pass, detail};
}

// ---- 9 -------------------------------------------------------------------

Outcome property_suite() {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  for (const char* file : {"/ex1.json", "/ex2.json", "/ex3_entrant.json"}) {
    const auto cfg = load_scenario(kDir + file);
    const auto net = build_supernetwork(cfg);
    const auto ps = build_path_set(net, cfg);
    CostModel model(cfg, net, ps);
    const auto v = default_fleet(cfg, net);
    const auto demands = ps.demands();
    const std::string tag = std::string(file).substr(1);

    // Feasibility of every flow the solver evaluates.
    bool feasible = true;
    auto bound = model.bind(v);
    const CostOperator watched = [&](std::span<const double> x, std::span<double> c) {
      for (const auto& b : ps.blocks()) {
        double sum = 0.0;
        for (std::size_t p = b.begin; p < b.end; ++p) {
          feasible = feasible && x[p] >= 0.0;
          sum += x[p];
        }
        feasible = feasible && std::abs(sum - b.demand) <= 1e-9 * std::max(1.0, b.demand);
      }
      bound(x, c);
    };
    auto settings = cfg.solver;
    settings.initial_flow = SolverSettings::InitialFlow::AllOnFirstPath;
    const auto sol = solve_vi(watched, ps.blocks(), ps.size(), settings);
    if (!feasible) failed.push_back(tag + " feasibility");

    // Own-flow monotonicity and linearity of the link-path map.
    bool monotone = true, linear = true;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(ps.size()), y(ps.size()), z(ps.size());
      const double a = 4 * u(rng) - 2, b = 4 * u(rng) - 2;
      for (std::size_t p = 0; p < ps.size(); ++p) {
        x[p] = 50 * u(rng);
        y[p] = 50 * u(rng);
        z[p] = a * x[p] + b * y[p];
      }
      const auto c0 = model.cost_operator(x, v);
      const std::size_t p = rng() % ps.size();
      auto xp = x;
      xp[p] += 1.0 + 10 * u(rng);
      const auto c1 = model.cost_operator(xp, v);
      monotone = monotone && c1[p] >= c0[p] - 1e-12;
      const auto fx = path_link_flows(x, ps), fy = path_link_flows(y, ps), fz = path_link_flows(z, ps);
      for (std::size_t l = 0; l < ps.num_links(); ++l) {
        const double want = a * fx.total[l] + b * fy.total[l];
        linear = linear && std::abs(fz.total[l] - want) <= 1e-9 * std::max(1.0, std::abs(want));
      }
    }
    if (!monotone) failed.push_back(tag + " monotonicity");
    if (!linear) failed.push_back(tag + " linearity");

    // Profit decomposition at random feasible states and at equilibrium.
    bool identity = true;
    EquilibriumSolution at_eq;
    at_eq.x = sol.x;
    at_eq.link_flows = path_link_flows(sol.x, ps);
    for (const auto& m : cfg.msps) {
      const auto spec = compile_msp(cfg, net, ps, m.id);
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> raw(ps.size());
        for (auto& r : raw) r = u(rng);
        EquilibriumSolution s;
        s.x = project_feasible(raw, ps, demands);
        s.link_flows = path_link_flows(s.x, ps);
        const auto pr = profit(spec, model, trial == 0 ? at_eq : s, v);
        identity = identity && std::abs(pr.pr - (pr.fr + pr.vr - pr.fc - pr.vc)) <=
                                   1e-9 * std::max(1.0, std::abs(pr.fr) + std::abs(pr.vr) + std::abs(pr.fc) + std::abs(pr.vc));
      }
    }
    if (!identity) failed.push_back(tag + " profit identity");

    // Determinism: identical runs give identical bytes.
    const auto run = [&] {
      const auto e = solve_ue(model, v, cfg.solver);
      return equilibrium_csv(net, ps, e) + link_flows_csv(net, model, e, v) + gap_trace_csv(e);
    };
    if (run() != run()) failed.push_back(tag + " determinism");
  }

  // Determinism of the threaded sweep.
  const auto doc = read_json_file(kDir + "/ex2.json");
  const std::vector<SweepAxis> axes{{"/subscriptions/2/daily_cost", {0.5, 1.0, 1.5}}};
  SweepOptions one, many;
  one.optimize = many.optimize = false;
  many.jobs = 3;
  if (sweep_csv(axes, profit_response_sweep(doc, axes, one)) !=
      sweep_csv(axes, profit_response_sweep(doc, axes, many))) {
    failed.push_back("sweep determinism");
  }

  const double secs = seconds_since(t0);
  std::string which;
  for (const auto& f : failed) which += (which.empty() ? "" : ", ") + f;
  return {failed.empty() && secs < 300.0,
          fmt::format("feasibility, own-flow monotonicity, linearity, profit identity, determinism on "
                      "three scenarios: {}; {:.2f} s (< 300 s)",
                      failed.empty() ? "all hold" : "failed: " + which, secs)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    fmt::print("{} {}. {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
    std::fflush(stdout);
  };

  double level_ns = 0.0, pr_ns = 0.0;
  report(1, "projection oracle", projection_oracle);
  report(2, "closed-form Wardrop", closed_form_wardrop);
  report(3, "Beckmann equivalence", beckmann_equivalence);
  report(4, "Wardrop conditions, golden example", golden_wardrop);
  report(5, "fleet optimum, golden example", [&] { return golden_mpec(level_ns, pr_ns); });
  report(6, "non-separability", [&] { return non_separability(level_ns, pr_ns); });
  report(7, "package price trends", package_trends);
  report(8, "competition and subsidy", competition);
  report(9, "property suite", property_suite);
  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
