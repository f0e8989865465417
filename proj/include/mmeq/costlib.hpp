#pragma once

// Class-dependent link and path costs.
//
// A mode-specific link costs class k
//   access: c_access^k t_access(f_a) + c_wait^k t_wait(f_a)
//   main:   (c_fuel + c_km) l_a + c_h t_main(F_g) + c_fixed
//           + c_main^k t_main(F_g)
//   egress: c_park^k t_park(f_a) + c_access^k t_egress(f_a)
// where f_a is the flow of the link's service (summed over chain groups) and
// F_g the flow of its congestion group on the same leg (the service alone
// when its mode has no group). Access, egress, interchange and subscription
// links are free; subscriptions are charged once per path.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "mmeq/netmodel.hpp"
#include "mmeq/pathset.hpp"
#include "mmeq/supernet.hpp"
#include "mmeq/time_function.hpp"

namespace mmeq {

/// Vehicles v_a deployed on fleet-dependent service links, keyed by
/// service link id.
struct FleetVector {
  std::map<std::string, double> entries;

  double at(const std::string& service) const;
  double total() const;
  bool operator==(const FleetVector&) const = default;
};

/// Fleet values configured in the scenario for every fleet-capacity service.
FleetVector default_fleet(const ScenarioConfig& cfg, const Supernetwork& net);

/// Applies "service-id=value", "layer=value", "mode=value" or bare "value"
/// overrides on top of `base`. A bare value or "v=value" sets every entry.
FleetVector apply_fleet_overrides(const Supernetwork& net, FleetVector base,
                                  const std::vector<std::string>& overrides);

struct LinkCostBreakdown {
  double access = 0.0;
  double main = 0.0;
  double egress = 0.0;
  double total() const { return access + main + egress; }
};

/// Maps a path-flow vector to the path-cost vector (same layout).
using CostOperator =
    std::function<void(std::span<const double> x, std::span<double> costs)>;

class CostModel {
 public:
  CostModel(const ScenarioConfig& cfg, const Supernetwork& net,
            const PathSet& ps);

  std::size_t num_links() const { return links_.size(); }
  const PathSet& path_set() const { return *ps_; }

  /// Dense per-link capacity table for fleet-dependent components.
  std::vector<double> fleet_capacities(const FleetVector& v) const;

  /// Flow entering link a's main travel time (its congestion group total).
  double group_flow(std::size_t a, std::span<const double> total_flows) const;

  /// Flow of link a's service link.
  double service_flow(std::size_t a, std::span<const double> total_flows) const;

  double main_time(std::size_t a, std::span<const double> total_flows,
                   std::span<const double> capacities) const;

  LinkCostBreakdown link_cost_breakdown(std::size_t class_index, std::size_t a,
                                        std::span<const double> total_flows,
                                        std::span<const double> capacities) const;

  double link_cost(std::size_t class_index, std::size_t a,
                   const LinkFlows& flows, const FleetVector& v) const;

  /// Sum of c_s over the distinct subscriptions the path activates.
  double subscription_cost(std::size_t p) const { return path_sub_cost_[p]; }

  double path_cost(std::size_t p, std::span<const double> x,
                   const FleetVector& v) const;

  std::vector<double> cost_operator(std::span<const double> x,
                                    const FleetVector& v) const;

  /// Binds a fleet; the returned operator owns its scratch buffers and must
  /// not be shared across threads.
  CostOperator bind(const FleetVector& v) const;

  /// Path costs from precomputed link totals.
  void path_costs(std::span<const double> total_flows,
                  std::span<const double> capacities,
                  std::span<double> costs) const;

 private:
  struct Component {
    TimeFunction tf;
    bool present = false;
  };
  struct CompiledLink {
    bool mode_link = false;
    double monetary = 0.0;  // (fuel + km) * length + fixed fee
    double tariff_per_hour = 0.0;
    Component access, wait, main, park, egress;
    std::size_t congestion_slot = 0;
    std::size_t service = 0;
    std::vector<UnitCosts> unit;  // per class
  };

  double component_time(const Component& c, std::size_t a, double flow,
                        std::span<const double> capacities) const;

  const PathSet* ps_;
  std::vector<CompiledLink> links_;
  std::vector<std::vector<std::size_t>> congestion_members_;
  std::vector<std::vector<std::size_t>> service_members_;
  std::vector<std::string> service_ids_;
  std::vector<double> path_sub_cost_;
  std::vector<std::size_t> mode_links_;
  std::size_t num_classes_ = 0;
};

}  // namespace mmeq
