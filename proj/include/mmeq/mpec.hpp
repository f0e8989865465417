#pragma once

// Upper-level fleet optimization for one provider, and parameter sweeps.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmeq/costlib.hpp"
#include "mmeq/msp.hpp"
#include "mmeq/netmodel.hpp"
#include "mmeq/pathset.hpp"
#include "mmeq/supernet.hpp"
#include "mmeq/ue.hpp"

namespace mmeq {

class AllStartsFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AxisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- Bound-constrained maximizers -------------------------------------

using Objective = std::function<double(const std::vector<double>&)>;

struct OptimizerTracePoint {
  int iteration = 0;
  std::vector<double> x;
  double value = 0.0;
  double step = 0.0;
};

struct OptimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::vector<OptimizerTracePoint> trace;
};

struct PatternSearchOptions {
  double initial_step = 1.0;  // absolute
  double min_step = 1e-3;
  double contraction = 0.5;
  double improvement_tol = 0.0;
  int max_iterations = 200;
};

/// Compass search: polls +e1, -e1, +e2, ... and moves to the first point that
/// improves by more than improvement_tol; contracts when none does.
OptimizeResult pattern_search_max(const Objective& f, std::vector<double> x0,
                                  const std::vector<double>& lower,
                                  const std::vector<double>& upper,
                                  const PatternSearchOptions& opt);

struct QuasiNewtonOptions {
  double fd_step = 1e-2;  // relative
  double tol = 1e-6;
  int max_iterations = 200;
};

/// Projected BFGS ascent with central finite-difference gradients and a
/// backtracking line search.
OptimizeResult fd_quasi_newton_max(const Objective& f, std::vector<double> x0,
                                   const std::vector<double>& lower,
                                   const std::vector<double>& upper,
                                   const QuasiNewtonOptions& opt);

// ---- Fleet MPEC ---------------------------------------------------------

struct Evaluation {
  FleetVector v;
  ProfitBreakdown profit;
  EquilibriumSolution sol;
  bool reliable = false;  // lower level converged
};

struct OuterTraceRow {
  int start = 0;
  int iteration = 0;
  double fleet_total = 0.0;
  std::vector<double> levels;
  double pr = 0.0;
  double step = 0.0;
};

struct MpecResult {
  FleetVector v_star;
  std::vector<double> levels;  // decision variables at the optimum
  double fleet_total = 0.0;    // vehicles of the optimized MSP at v_star
  EquilibriumSolution x_star;
  ProfitBreakdown profit;
  bool reliable = false;
  std::vector<OuterTraceRow> outer_trace;
  std::vector<int> inner_iteration_counts;
  int evaluations = 0;
  int best_start = 0;
};

/// Network, paths, costs and the optimized provider of one scenario.
class MpecProblem {
 public:
  explicit MpecProblem(ScenarioConfig cfg);
  MpecProblem(const MpecProblem&) = delete;
  MpecProblem& operator=(const MpecProblem&) = delete;

  const ScenarioConfig& config() const { return cfg_; }
  const MpecConfig& mpec() const { return *cfg_.mpec; }
  const Supernetwork& network() const { return net_; }
  const PathSet& path_set() const { return *ps_; }
  const CostModel& model() const { return *model_; }
  const MspSpec& msp() const { return msp_; }
  const FleetVector& base_fleet() const { return base_fleet_; }

  /// Fleet-capacity service links (indices) the provider controls.
  const std::vector<std::size_t>& decision_links() const { return decision_; }
  std::size_t num_variables() const;
  FleetVector fleet_for(std::span<const double> levels) const;

  Evaluation evaluate(const FleetVector& v,
                      std::optional<std::span<const double>> warm_start =
                          std::nullopt) const;

 private:
  ScenarioConfig cfg_;
  Supernetwork net_;
  std::unique_ptr<PathSet> ps_;
  std::unique_ptr<CostModel> model_;
  MspSpec msp_;
  FleetVector base_fleet_;
  std::vector<std::size_t> decision_;
};

/// Builds the scenario problem; the scenario must carry an `mpec` block.
MpecResult solve_mpec(const MpecProblem& problem);
MpecResult solve_mpec(const ScenarioConfig& cfg);

/// Pr on an evenly spaced grid of one common fleet level.
struct ProfitCurvePoint {
  double level = 0.0;
  double fleet_total = 0.0;
  ProfitBreakdown profit;
  int inner_iterations = 0;
  bool reliable = false;
};
std::vector<ProfitCurvePoint> profit_curve(const MpecProblem& problem,
                                           const std::vector<double>& levels);

// ---- Sweeps -------------------------------------------------------------

/// A scenario parameter addressed by JSON pointer, or "total_demand"
/// (class demands rescaled proportionally to the given total).
struct SweepAxis {
  std::string path;
  std::vector<double> values;
};

nlohmann::json apply_axis(nlohmann::json doc, const std::string& path,
                          double value);

struct SweepRow {
  std::vector<double> axis_values;
  double pr = 0.0;
  ProfitBreakdown profit;
  double fleet_total = 0.0;
  double gap = 0.0;
  bool reliable = false;
  std::map<std::string, double> mode_share;        // share of mode-link trips
  std::map<std::string, double> subscriber_share;  // share of travelers
};

struct SweepOptions {
  bool optimize = true;  // false: equilibrium at the configured fleet only
  unsigned jobs = 1;
  std::vector<std::string> fleet_overrides;
};

/// Evaluates every grid point (cartesian product of the axes, first axis
/// outermost). Rows come back in grid order regardless of `jobs`.
std::vector<SweepRow> profit_response_sweep(const nlohmann::json& scenario,
                                            const std::vector<SweepAxis>& axes,
                                            const SweepOptions& opt);

/// Modal and subscription shares of an equilibrium.
void fill_shares(const Supernetwork& net, const PathSet& ps,
                 const ScenarioConfig& cfg, const EquilibriumSolution& sol,
                 SweepRow& row);

}  // namespace mmeq
