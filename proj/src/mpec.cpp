#include "mmeq/mpec.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

namespace mmeq {

namespace {

std::vector<double> clamp_to(std::vector<double> x,
                             const std::vector<double>& lower,
                             const std::vector<double>& upper) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::clamp(x[i], lower[i], upper[i]);
  }
  return x;
}

}  // namespace

OptimizeResult pattern_search_max(const Objective& f, std::vector<double> x0,
                                  const std::vector<double>& lower,
                                  const std::vector<double>& upper,
                                  const PatternSearchOptions& opt) {
  OptimizeResult res;
  res.x = clamp_to(std::move(x0), lower, upper);
  res.value = f(res.x);
  res.evaluations = 1;
  double step = opt.initial_step;
  res.trace.push_back({0, res.x, res.value, step});
  const std::size_t n = res.x.size();
  while (res.iterations < opt.max_iterations && step >= opt.min_step) {
    ++res.iterations;
    bool moved = false;
    for (std::size_t i = 0; i < n && !moved; ++i) {
      for (double dir : {1.0, -1.0}) {
        auto trial = res.x;
        trial[i] = std::clamp(trial[i] + dir * step, lower[i], upper[i]);
        if (trial[i] == res.x[i]) continue;
        const double value = f(trial);
        ++res.evaluations;
        if (value > res.value + opt.improvement_tol) {
          res.x = std::move(trial);
          res.value = value;
          moved = true;
          break;
        }
      }
    }
    if (!moved) step *= opt.contraction;
    res.trace.push_back({res.iterations, res.x, res.value, step});
  }
  return res;
}

OptimizeResult fd_quasi_newton_max(const Objective& f, std::vector<double> x0,
                                   const std::vector<double>& lower,
                                   const std::vector<double>& upper,
                                   const QuasiNewtonOptions& opt) {
  OptimizeResult res;
  const std::size_t n = x0.size();
  res.x = clamp_to(std::move(x0), lower, upper);
  res.value = f(res.x);
  res.evaluations = 1;
  res.trace.push_back({0, res.x, res.value, 0.0});

  auto gradient = [&](const std::vector<double>& x) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double h = opt.fd_step * std::max(1.0, std::abs(x[i]));
      auto xp = x, xm = x;
      xp[i] = std::min(x[i] + h, upper[i]);
      xm[i] = std::max(x[i] - h, lower[i]);
      const double fp = xp[i] == x[i] ? res.value : f(xp);
      const double fm = xm[i] == x[i] ? res.value : f(xm);
      res.evaluations += (xp[i] != x[i]) + (xm[i] != x[i]);
      g[i] = xp[i] > xm[i] ? (fp - fm) / (xp[i] - xm[i]) : 0.0;
    }
    return g;
  };

  // Inverse Hessian of -f.
  std::vector<double> H(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
  auto g = gradient(res.x);
  double max_range = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_range = std::max(max_range, upper[i] - lower[i]);
  }

  while (res.iterations < opt.max_iterations) {
    ++res.iterations;
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i] += H[i * n + j] * g[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if ((res.x[i] <= lower[i] && d[i] < 0) ||
          (res.x[i] >= upper[i] && d[i] > 0)) {
        d[i] = 0.0;
      }
    }
    double dmax = 0.0;
    for (double di : d) dmax = std::max(dmax, std::abs(di));
    if (dmax == 0.0) break;
    double t = std::min(1.0, 0.25 * max_range / dmax);

    bool accepted = false;
    std::vector<double> xn;
    double fn = 0.0;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      xn = res.x;
      for (std::size_t i = 0; i < n; ++i) xn[i] += t * d[i];
      xn = clamp_to(std::move(xn), lower, upper);
      fn = f(xn);
      ++res.evaluations;
      if (fn > res.value) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    const double improvement = fn - res.value;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = xn[i] - res.x[i];
    res.x = std::move(xn);
    res.value = fn;
    auto gn = gradient(res.x);
    res.trace.push_back({res.iterations, res.x, res.value, t});
    if (improvement < opt.tol * std::max(1.0, std::abs(res.value))) break;

    // BFGS on -f: y = -(gn - g).
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = g[i] - gn[i];
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sy += s[i] * y[i];
    if (sy > 1e-12) {
      std::vector<double> Hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
      }
      double yHy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yHy += y[i] * Hy[i];
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          H[i * n + j] += (1.0 + yHy * rho) * rho * s[i] * s[j] -
                          rho * (Hy[i] * s[j] + s[i] * Hy[j]);
        }
      }
    }
    g = std::move(gn);
  }
  return res;
}

MpecProblem::MpecProblem(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  if (!cfg_.mpec) throw std::invalid_argument("scenario has no mpec block");
  net_ = build_supernetwork(cfg_);
  ps_ = std::make_unique<PathSet>(build_path_set(net_, cfg_));
  model_ = std::make_unique<CostModel>(cfg_, net_, *ps_);
  msp_ = compile_msp(cfg_, net_, *ps_, cfg_.mpec->msp);
  base_fleet_ = default_fleet(cfg_, net_);
  const auto& m = *cfg_.mpec;
  for (const auto& sv : net_.services()) {
    if (!sv.fleet_capacity || sv.mode != m.decision_mode) continue;
    if (m.decision_context && sv.context != *m.decision_context) continue;
    decision_.push_back(sv.index);
  }
  if (decision_.empty()) {
    throw std::invalid_argument("no fleet links match the decision mode '" +
                                m.decision_mode + "'");
  }
}

std::size_t MpecProblem::num_variables() const {
  return mpec().shared_level ? 1 : decision_.size();
}

FleetVector MpecProblem::fleet_for(std::span<const double> levels) const {
  if (levels.size() != num_variables()) {
    throw DimensionMismatch("expected " + std::to_string(num_variables()) +
                            " fleet levels");
  }
  FleetVector v = base_fleet_;
  for (std::size_t i = 0; i < decision_.size(); ++i) {
    v.entries[net_.services()[decision_[i]].id] =
        levels[mpec().shared_level ? 0 : i];
  }
  return v;
}

Evaluation MpecProblem::evaluate(
    const FleetVector& v,
    std::optional<std::span<const double>> warm_start) const {
  Evaluation e;
  e.v = v;
  e.sol = solve_ue(*model_, v, cfg_.solver, warm_start);
  e.reliable = e.sol.converged;
  e.profit = profit(msp_, *model_, e.sol, v);
  return e;
}

namespace {

double start_level(const std::string& s, double lo, double hi) {
  if (s == "lower") return lo;
  if (s == "upper") return hi;
  if (s == "mid") return 0.5 * (lo + hi);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw std::invalid_argument("bad multistart entry '" + s + "'");
  }
  return std::clamp(v, lo, hi);
}

}  // namespace

MpecResult solve_mpec(const MpecProblem& problem) {
  const auto& m = problem.mpec();
  const std::size_t n = problem.num_variables();
  const std::vector<double> lower(n, m.v_lower), upper(n, m.v_upper);

  MpecResult result;
  bool have_best = false;
  bool any_reliable = false;
  Evaluation best_eval;

  for (std::size_t si = 0; si < m.multistart.size(); ++si) {
    const double level = start_level(m.multistart[si], m.v_lower, m.v_upper);
    std::vector<double> x0(n, level);

    Evaluation incumbent;
    bool have_incumbent = false;
    Objective objective = [&](const std::vector<double>& levels) {
      std::optional<std::span<const double>> warm;
      if (m.warm_start && have_incumbent) warm = incumbent.sol.x;
      auto e = problem.evaluate(problem.fleet_for(levels), warm);
      result.inner_iteration_counts.push_back(e.sol.iterations);
      ++result.evaluations;
      const double pr = e.profit.pr;
      if (!have_incumbent || pr > incumbent.profit.pr) {
        incumbent = std::move(e);
        have_incumbent = true;
      }
      return pr;
    };

    OptimizeResult opt;
    if (m.optimizer == MpecConfig::Optimizer::PatternSearch) {
      PatternSearchOptions po;
      po.initial_step = m.initial_step * (m.v_upper - m.v_lower);
      po.min_step = m.min_step;
      po.improvement_tol = m.outer_tol;
      po.max_iterations = m.max_outer_iterations;
      opt = pattern_search_max(objective, x0, lower, upper, po);
    } else {
      QuasiNewtonOptions qo;
      qo.fd_step = m.fd_step;
      qo.tol = m.outer_tol;
      qo.max_iterations = m.max_outer_iterations;
      opt = fd_quasi_newton_max(objective, x0, lower, upper, qo);
    }
    for (const auto& t : opt.trace) {
      OuterTraceRow row;
      row.start = static_cast<int>(si);
      row.iteration = t.iteration;
      row.levels = t.x;
      row.fleet_total = owned_fleet(problem.msp(), problem.fleet_for(t.x));
      row.pr = t.value;
      row.step = t.step;
      result.outer_trace.push_back(std::move(row));
    }

    // The optimizer's final point is the incumbent of its own evaluations.
    auto final_eval = problem.evaluate(
        problem.fleet_for(opt.x),
        m.warm_start && have_incumbent
            ? std::optional<std::span<const double>>(incumbent.sol.x)
            : std::nullopt);
    ++result.evaluations;
    result.inner_iteration_counts.push_back(final_eval.sol.iterations);
    any_reliable = any_reliable || final_eval.reliable;
    if (!have_best || final_eval.profit.pr > best_eval.profit.pr) {
      best_eval = std::move(final_eval);
      result.levels = opt.x;
      result.best_start = static_cast<int>(si);
      have_best = true;
    }
  }
  if (!any_reliable) {
    throw AllStartsFailed("the lower level did not converge at any start's "
                          "final fleet");
  }
  result.v_star = best_eval.v;
  result.fleet_total = owned_fleet(problem.msp(), result.v_star);
  result.x_star = std::move(best_eval.sol);
  result.profit = best_eval.profit;
  result.reliable = best_eval.reliable;
  return result;
}

MpecResult solve_mpec(const ScenarioConfig& cfg) {
  MpecProblem problem(cfg);
  return solve_mpec(problem);
}

std::vector<ProfitCurvePoint> profit_curve(const MpecProblem& problem,
                                           const std::vector<double>& levels) {
  std::vector<ProfitCurvePoint> out;
  std::vector<double> warm;
  const bool use_warm = problem.mpec().warm_start;
  for (double level : levels) {
    const std::vector<double> lv(problem.num_variables(), level);
    auto e = problem.evaluate(
        problem.fleet_for(lv),
        use_warm && !warm.empty()
            ? std::optional<std::span<const double>>(warm)
            : std::nullopt);
    ProfitCurvePoint p;
    p.level = level;
    p.fleet_total = owned_fleet(problem.msp(), e.v);
    p.profit = e.profit;
    p.inner_iterations = e.sol.iterations;
    p.reliable = e.reliable;
    out.push_back(p);
    warm = std::move(e.sol.x);
  }
  return out;
}

nlohmann::json apply_axis(nlohmann::json doc, const std::string& path,
                          double value) {
  auto set_number = [](nlohmann::json& node, double v, const std::string& p) {
    // Values marked {"value": x, "assumed": true} keep their wrapper.
    auto& target = node.is_object() && node.contains("value") ? node["value"] : node;
    if (!target.is_number()) throw AxisError("axis '" + p + "' is not numeric");
    target = v;
  };
  if (path == "total_demand") {
    if (!doc.contains("classes") || !doc["classes"].is_array()) {
      throw AxisError("total_demand: scenario has no classes");
    }
    auto demand_of = [](nlohmann::json& cls) -> nlohmann::json& {
      auto& d = cls.at("demand");
      return d.is_object() ? d.at("value") : d;
    };
    double total = 0.0;
    for (auto& cls : doc["classes"]) total += demand_of(cls).get<double>();
    if (total <= 0.0) throw AxisError("total_demand: scenario demand is zero");
    for (auto& cls : doc["classes"]) {
      auto& d = demand_of(cls);
      d = d.get<double>() * value / total;
    }
    return doc;
  }
  nlohmann::json::json_pointer ptr;
  try {
    ptr = nlohmann::json::json_pointer(path);
  } catch (const nlohmann::json::exception& e) {
    throw AxisError("bad axis pointer '" + path + "': " + e.what());
  }
  if (!doc.contains(ptr)) throw AxisError("axis '" + path + "' not found");
  set_number(doc[ptr], value, path);
  return doc;
}

void fill_shares(const Supernetwork& net, const PathSet& ps,
                 const ScenarioConfig& cfg, const EquilibriumSolution& sol,
                 SweepRow& row) {
  const auto& flows = sol.link_flows.total;
  double trips = 0.0;
  for (const auto& m : cfg.modes) row.mode_share[m.id] = 0.0;
  for (const auto& l : net.links()) {
    if (l.kind != LinkKind::ModeSpecific) continue;
    row.mode_share[*l.mode] += flows[l.index];
    trips += flows[l.index];
  }
  for (auto& [_, s] : row.mode_share) s = trips > 0.0 ? s / trips : 0.0;

  double demand = 0.0;
  for (const auto& b : ps.blocks()) demand += b.demand;
  for (const auto& s : cfg.subscriptions) row.subscriber_share[s.id] = 0.0;
  for (std::size_t p = 0; p < ps.size(); ++p) {
    for (const auto& s : ps.paths()[p].subscriptions) {
      row.subscriber_share[s] += sol.x[p];
    }
  }
  for (auto& [_, s] : row.subscriber_share) s = demand > 0.0 ? s / demand : 0.0;
}

namespace {

std::vector<std::vector<double>> expand_grid(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& p : points) {
      for (double v : axis.values) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

SweepRow evaluate_point(const nlohmann::json& scenario,
                        const std::vector<SweepAxis>& axes,
                        const std::vector<double>& point,
                        const SweepOptions& opt) {
  nlohmann::json doc = scenario;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    doc = apply_axis(std::move(doc), axes[i].path, point[i]);
  }
  auto cfg = load_scenario_json(doc);
  SweepRow row;
  row.axis_values = point;
  if (opt.optimize) {
    MpecProblem problem(cfg);
    auto res = solve_mpec(problem);
    row.profit = res.profit;
    row.fleet_total = res.fleet_total;
    row.gap = res.x_star.gap;
    row.reliable = res.reliable;
    fill_shares(problem.network(), problem.path_set(), cfg, res.x_star, row);
  } else {
    auto net = build_supernetwork(cfg);
    auto ps = build_path_set(net, cfg);
    CostModel model(cfg, net, ps);
    auto v = apply_fleet_overrides(net, default_fleet(cfg, net),
                                   opt.fleet_overrides);
    auto sol = solve_ue(model, v, cfg.solver);
    row.gap = sol.gap;
    row.reliable = sol.converged;
    std::string msp_id;
    if (cfg.mpec) {
      msp_id = cfg.mpec->msp;
    } else if (!cfg.msps.empty()) {
      msp_id = cfg.msps.front().id;
    }
    if (!msp_id.empty()) {
      const auto spec = compile_msp(cfg, net, ps, msp_id);
      row.profit = profit(spec, model, sol, v);
      row.fleet_total = owned_fleet(spec, v);
    }
    fill_shares(net, ps, cfg, sol, row);
  }
  row.pr = row.profit.pr;
  return row;
}

}  // namespace

std::vector<SweepRow> profit_response_sweep(const nlohmann::json& scenario,
                                            const std::vector<SweepAxis>& axes,
                                            const SweepOptions& opt) {
  const auto points = expand_grid(axes);
  std::vector<SweepRow> rows(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        rows[i] = evaluate_point(scenario, axes, points[i], opt);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs =
      std::clamp<std::size_t>(opt.jobs, 1, std::max<std::size_t>(points.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

}  // namespace mmeq
