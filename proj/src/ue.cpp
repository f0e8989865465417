#include "mmeq/ue.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace mmeq {

void project_block(std::span<const double> b, double d, std::span<double> out,
                   std::vector<double>& scratch) {
  const std::size_t n = b.size();
  if (n == 0) return;
  if (d <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  scratch.assign(b.begin(), b.end());
  std::sort(scratch.begin(), scratch.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cumulative += scratch[j];
    const double t = (cumulative - d) / static_cast<double>(j + 1);
    if (scratch[j] - t > 0.0) theta = t;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(b[i] - theta, 0.0);
}

std::vector<double> project_block(std::span<const double> b, double d) {
  std::vector<double> out(b.size());
  std::vector<double> scratch;
  project_block(b, d, out, scratch);
  return out;
}

namespace {

void check_layout(std::size_t n, const std::vector<Block>& blocks) {
  std::size_t covered = 0;
  for (const auto& blk : blocks) {
    if (blk.begin != covered || blk.end < blk.begin) {
      throw DimensionMismatch("blocks must tile the path vector contiguously");
    }
    covered = blk.end;
  }
  if (covered != n) {
    throw DimensionMismatch("blocks cover " + std::to_string(covered) +
                            " paths, vector has " + std::to_string(n));
  }
}

void project_into(std::span<const double> y, const std::vector<Block>& blocks,
                  std::span<double> out, std::vector<double>& scratch) {
  for (const auto& blk : blocks) {
    project_block(y.subspan(blk.begin, blk.size()), blk.demand,
                  out.subspan(blk.begin, blk.size()), scratch);
  }
}

double norm2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

std::vector<double> project_feasible(std::span<const double> y,
                                     const std::vector<Block>& blocks) {
  check_layout(y.size(), blocks);
  std::vector<double> out(y.size());
  std::vector<double> scratch;
  project_into(y, blocks, out, scratch);
  return out;
}

std::vector<double> project_feasible(std::span<const double> y,
                                     const PathSet& ps,
                                     std::span<const double> demands) {
  if (demands.size() != ps.blocks().size()) {
    throw DimensionMismatch("one demand per block expected");
  }
  auto blocks = ps.blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].demand = demands[i];
  return project_feasible(y, blocks);
}

std::vector<double> block_min_costs(std::span<const double> costs,
                                    const std::vector<Block>& blocks) {
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const auto& blk : blocks) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t p = blk.begin; p < blk.end; ++p) m = std::min(m, costs[p]);
    out.push_back(m);
  }
  return out;
}

double relative_gap(std::span<const double> x, std::span<const double> costs,
                    const std::vector<Block>& blocks) {
  double gap = 0.0;
  for (const auto& blk : blocks) {
    if (blk.demand <= 0.0 || blk.size() == 0) continue;
    double total = 0.0;
    double cmin = std::numeric_limits<double>::infinity();
    for (std::size_t p = blk.begin; p < blk.end; ++p) {
      total += x[p] * costs[p];
      cmin = std::min(cmin, costs[p]);
    }
    const double base = blk.demand * cmin;
    gap += base > 0.0 ? (total - base) / base : total - base;
  }
  return gap;
}

double wardrop_violation(std::span<const double> x,
                         std::span<const double> costs,
                         const std::vector<Block>& blocks,
                         double used_threshold) {
  double worst = 0.0;
  const auto mins = block_min_costs(costs, blocks);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const double cmin = mins[b];
    for (std::size_t p = blocks[b].begin; p < blocks[b].end; ++p) {
      if (x[p] <= used_threshold) continue;
      const double excess = costs[p] - cmin;
      worst = std::max(worst, cmin > 0.0 ? excess / cmin : excess);
    }
  }
  return worst;
}

std::vector<double> initial_flow(const SolverSettings& s,
                                 const std::vector<Block>& blocks,
                                 std::size_t n) {
  check_layout(n, blocks);
  std::vector<double> x(n, 0.0);
  switch (s.initial_flow) {
    case SolverSettings::InitialFlow::UniformSplit:
      for (const auto& blk : blocks) {
        for (std::size_t p = blk.begin; p < blk.end; ++p) {
          x[p] = std::max(blk.demand, 0.0) / static_cast<double>(blk.size());
        }
      }
      break;
    case SolverSettings::InitialFlow::AllOnFirstPath:
      for (const auto& blk : blocks) {
        if (blk.size()) x[blk.begin] = std::max(blk.demand, 0.0);
      }
      break;
    case SolverSettings::InitialFlow::Given:
      if (s.given_flow.size() != n) {
        throw DimensionMismatch("given initial flow has " +
                                std::to_string(s.given_flow.size()) +
                                " entries, expected " + std::to_string(n));
      }
      x = project_feasible(s.given_flow, blocks);
      break;
  }
  return x;
}

EquilibriumSolution solve_vi(const CostOperator& cost,
                             const std::vector<Block>& blocks, std::size_t n,
                             const SolverSettings& settings,
                             std::optional<std::span<const double>> warm_start) {
  check_layout(n, blocks);
  EquilibriumSolution sol;
  std::vector<double> x;
  if (warm_start) {
    if (warm_start->size() != n) throw DimensionMismatch("warm start size");
    x = project_feasible(*warm_start, blocks);
  } else {
    x = initial_flow(settings, blocks, n);
  }

  std::vector<double> c(n), cbar(n), xbar(n), xnext(n), y(n), scratch;
  cost(x, c);
  double psi = settings.psi;
  const double psi_floor = settings.psi * 1e-12;

  std::vector<double> best_x = x;
  std::vector<double> best_c = c;
  double best_gap = relative_gap(x, c, blocks);

  int it = 0;
  double gap = best_gap;
  while (it < settings.max_iterations) {
    ++it;
    // Predictor. The adaptive rule halves psi until
    // psi*|C(xbar)-C(x)| <= 0.9*|xbar-x| and lets it regrow towards the
    // configured value while the ratio stays small.
    double ratio = 0.0;
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - psi * c[i];
      project_into(y, blocks, xbar, scratch);
      cost(xbar, cbar);
      if (!settings.adaptive_step || psi <= psi_floor) break;
      const double dx = norm2(xbar, x);
      if (dx == 0.0) break;
      ratio = psi * norm2(cbar, c) / dx;
      if (ratio <= 0.9) break;
      psi *= 0.5;
    }
    // Corrector.
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - psi * cbar[i];
    project_into(y, blocks, xnext, scratch);
    if (settings.adaptive_step && ratio < 0.5) {
      psi = std::min(settings.psi, psi * 1.25);
    }

    double step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      step = std::max(step, std::abs(xnext[i] - x[i]));
    }
    x.swap(xnext);
    cost(x, c);
    gap = relative_gap(x, c, blocks);
    sol.gap_trace.push_back(gap);
    if (gap < best_gap) {
      best_gap = gap;
      best_x = x;
      best_c = c;
    }

    const bool gap_ok = gap < settings.gap_tolerance;
    const bool step_ok = step < settings.step_tolerance;
    if (settings.require_both ? (gap_ok && step_ok) : (gap_ok || step_ok)) {
      sol.converged = true;
      break;
    }
  }
  if (n == 0) sol.converged = true;

  // The final iterate is returned when the stop rule fired on it; otherwise
  // the lowest-gap iterate seen.
  if (sol.converged) {
    sol.x = std::move(x);
    sol.path_costs = std::move(c);
    sol.gap = gap;
  } else {
    sol.x = std::move(best_x);
    sol.path_costs = std::move(best_c);
    sol.gap = best_gap;
  }
  sol.min_costs = block_min_costs(sol.path_costs, blocks);
  sol.iterations = it;
  sol.final_psi = psi;
  return sol;
}

EquilibriumSolution solve_ue(const CostModel& model, const FleetVector& v,
                             const SolverSettings& settings,
                             std::optional<std::span<const double>> warm_start) {
  const auto& ps = model.path_set();
  auto sol = solve_vi(model.bind(v), ps.blocks(), ps.size(), settings,
                      warm_start);
  sol.link_flows = path_link_flows(sol.x, ps);
  return sol;
}

}  // namespace mmeq
