#pragma once

// Multi-class user equilibrium by the modified projection (extragradient)
// method with exact blockwise simplex projection.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmeq/costlib.hpp"
#include "mmeq/netmodel.hpp"
#include "mmeq/pathset.hpp"

namespace mmeq {

class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euclidean projection of b onto {x >= 0, sum x = d}.
std::vector<double> project_block(std::span<const double> b, double d);

/// In-place variant; `scratch` is reused between calls.
void project_block(std::span<const double> b, double d, std::span<double> out,
                   std::vector<double>& scratch);

/// Applies project_block to every block of y.
std::vector<double> project_feasible(std::span<const double> y,
                                     const std::vector<Block>& blocks);
std::vector<double> project_feasible(std::span<const double> y,
                                     const PathSet& ps,
                                     std::span<const double> demands);

/// Sum over blocks of (sum_p x_p C_p - d C_min) / (d C_min). Zero-demand
/// blocks are skipped.
double relative_gap(std::span<const double> x, std::span<const double> costs,
                    const std::vector<Block>& blocks);

/// Largest (C_p - C_min) / C_min over paths with x_p > used_threshold.
double wardrop_violation(std::span<const double> x,
                         std::span<const double> costs,
                         const std::vector<Block>& blocks,
                         double used_threshold = 1e-6);

/// Minimum path cost per block.
std::vector<double> block_min_costs(std::span<const double> costs,
                                    const std::vector<Block>& blocks);

/// Starting point for the given settings (projected onto the feasible set).
std::vector<double> initial_flow(const SolverSettings& s,
                                 const std::vector<Block>& blocks,
                                 std::size_t n);

struct EquilibriumSolution {
  std::vector<double> x;
  std::vector<double> path_costs;
  std::vector<double> min_costs;  // per block
  LinkFlows link_flows;           // empty when solved without a network
  std::vector<double> gap_trace;  // gap after each iteration
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_psi = 0.0;
};

/// Runs the projection method on an arbitrary monotone cost operator.
/// `warm_start`, when given, replaces the configured initial flow.
EquilibriumSolution solve_vi(const CostOperator& cost,
                             const std::vector<Block>& blocks, std::size_t n,
                             const SolverSettings& settings,
                             std::optional<std::span<const double>> warm_start =
                                 std::nullopt);

/// Equilibrium of the scenario's network at fleet v, link flows filled in.
EquilibriumSolution solve_ue(const CostModel& model, const FleetVector& v,
                             const SolverSettings& settings,
                             std::optional<std::span<const double>> warm_start =
                                 std::nullopt);

}  // namespace mmeq
