#pragma once

// Profit of one mobility service provider: Pr = FR + VR - FC - VC.

#include <cstddef>
#include <string>
#include <vector>

#include "mmeq/costlib.hpp"
#include "mmeq/netmodel.hpp"
#include "mmeq/pathset.hpp"
#include "mmeq/supernet.hpp"
#include "mmeq/ue.hpp"

namespace mmeq {

struct ProfitBreakdown {
  double fr = 0.0;
  double vr = 0.0;
  double fc = 0.0;
  double vc = 0.0;
  double pr = 0.0;
};

struct MspSpec {
  /// A service link of the provider; `link` is one member used to evaluate
  /// the shared main travel time.
  struct OwnedLink {
    std::string service;
    std::size_t link = 0;
    std::vector<std::size_t> members;
    double length_km = 0.0;
    double tariff_per_hour = 0.0;
    double tariff_per_km = 0.0;
    double fixed_fee = 0.0;
    double fuel_per_km = 0.0;
    bool fleet = false;
  };
  struct SubscriptionStream {
    std::string id;
    double per_subscriber = 0.0;  // after mask, share and partner payment
    std::vector<std::size_t> paths;  // paths whose users count as subscribers
  };

  std::string id;
  std::vector<OwnedLink> owned_links;
  std::vector<SubscriptionStream> subscriptions;
  double lease_rate = 0.0;
  double relocation_factor = 0.0;
  MspConfig::VcForm vc_form = MspConfig::VcForm::TripsPlusOne;
  ComponentMask mask;
};

/// Resolves an MSP's owned links and subscription streams on a network.
/// With no configured streams, the mode subscriptions of its modes are
/// credited in full.
MspSpec compile_msp(const ScenarioConfig& cfg, const Supernetwork& net,
                    const PathSet& ps, const std::string& msp_id);

/// Travelers per day holding each of the MSP's subscriptions.
std::vector<double> subscriber_counts(const MspSpec& spec,
                                      std::span<const double> x);

double fixed_revenue(const MspSpec& spec, std::span<const double> x);
double variable_revenue(const MspSpec& spec, const CostModel& model,
                        std::span<const double> link_flows,
                        std::span<const double> capacities);
double fixed_cost(const MspSpec& spec, const FleetVector& v);
/// Vehicles the MSP operates: sum of v over its fleet-capacity services.
double owned_fleet(const MspSpec& spec, const FleetVector& v);
double variable_cost(const MspSpec& spec, std::span<const double> link_flows);

ProfitBreakdown profit(const MspSpec& spec, const CostModel& model,
                       const EquilibriumSolution& sol, const FleetVector& v);

}  // namespace mmeq
