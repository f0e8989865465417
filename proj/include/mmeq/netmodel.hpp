#pragma once

// Scenario domain types and the JSON scenario loader.
//
// Units throughout: money in EUR/day (or EUR per traveler for costs),
// time in hours, distance in km, demand in travelers/day.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmeq/time_function.hpp"

namespace mmeq {

/// Lower bound on any fleet entry; keeps BPR capacities strictly positive.
inline constexpr double kFleetEpsilon = 1e-3;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field_path, const std::string& message)
      : std::runtime_error(field_path + ": " + message),
        field_path_(std::move(field_path)) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

/// Value-of-time coefficients a class attaches to one mode (EUR/hour).
/// `access` also weights the egress walk.
struct UnitCosts {
  double access = 0.0;
  double wait = 0.0;
  double main = 0.0;
  double park = 0.0;
  bool operator==(const UnitCosts&) const = default;
};

struct UserClass {
  std::string id;
  std::vector<std::string> trip_chain;
  double demand = 0.0;
  std::map<std::string, UnitCosts> unit_costs;  // keyed by mode id
  std::vector<std::string> allowed_modes;
  bool operator==(const UserClass&) const = default;
};

struct Mode {
  std::string id;
  std::optional<std::string> congestion_group;
  std::optional<std::string> owner_msp;
  /// A traveler's own vehicle: kept from the first leg to the last, so no
  /// interchange leads into or out of its layer.
  bool private_vehicle = false;
  bool operator==(const Mode&) const = default;
};

struct Subscription {
  enum class Kind {
    Mode,     // charged on entering a member mode's layer
    Package,  // opens its own subgraph reachable only from home
  };
  std::string id;
  Kind kind = Kind::Mode;
  double daily_cost = 0.0;
  double daily_subsidy = 0.0;
  std::vector<std::string> member_modes;
  std::optional<std::string> must_use_mode;  // usage rule for packages
  bool operator==(const Subscription&) const = default;
};

/// A physical connection between two activity locations.
struct TripLink {
  std::string from;
  std::string to;
  double length_km = 0.0;
  std::vector<std::string> modes;  // empty: every mode serves the leg
  bool operator==(const TripLink&) const = default;
};

/// Per-mode link cost parameters. Absent time components are zero.
struct ModeCostParams {
  double fuel_per_km = 0.0;
  double tariff_per_km = 0.0;
  double tariff_per_hour = 0.0;
  double fixed_fee = 0.0;
  /// False when the operator buys the fuel (shared fleets, transit).
  bool fuel_paid_by_user = true;
  std::optional<TimeFunction> access;
  std::optional<TimeFunction> wait;
  std::optional<TimeFunction> main;
  std::optional<TimeFunction> park;
  std::optional<TimeFunction> egress;
  bool operator==(const ModeCostParams&) const = default;
};

struct SolverSettings {
  enum class InitialFlow { UniformSplit, AllOnFirstPath, Given };
  double psi = 0.5;
  double gap_tolerance = 1e-4;   // chi1
  double step_tolerance = 1e-6;  // chi2
  int max_iterations = 100000;
  InitialFlow initial_flow = InitialFlow::UniformSplit;
  std::vector<double> given_flow;
  bool require_both = false;
  bool adaptive_step = true;
  bool operator==(const SolverSettings&) const = default;
};

/// Revenue an MSP draws from one subscription.
/// Per subscriber: share * (c_s + r_s) - partner_fixed.
struct SubscriptionRevenue {
  std::string subscription;
  double share = 1.0;
  double partner_fixed = 0.0;
  bool only_users_of_owned_links = false;
  bool operator==(const SubscriptionRevenue&) const = default;
};

/// Revenue/cost components an MSP's mode admits.
struct ComponentMask {
  bool subscription = true;
  bool subsidy = true;
  bool per_hour = true;
  bool per_km = true;
  bool fixed_fee = true;
  bool lease = true;
  bool fuel = true;
  bool relocation = true;
  bool operator==(const ComponentMask&) const = default;
};

struct MspConfig {
  enum class VcForm { TripsPlusOne, Trips };
  std::string id;
  std::vector<std::string> modes;
  double lease_rate = 0.0;  // linear c_lease(v) = lease_rate * v
  double relocation_factor = 0.0;
  VcForm vc_form = VcForm::TripsPlusOne;
  ComponentMask components;
  std::vector<SubscriptionRevenue> subscription_revenue;
  bool operator==(const MspConfig&) const = default;
};

/// Fixed values for fleet-capacity links that are not decision variables,
/// and starting values for those that are.
struct FleetDefaults {
  double default_value = 10.0;
  std::map<std::string, double> by_layer;  // "mode" or "mode@context"
  std::map<std::string, double> by_link;   // service link id
  bool operator==(const FleetDefaults&) const = default;
};

struct MpecConfig {
  enum class Optimizer { PatternSearch, FiniteDifferenceQuasiNewton };
  std::string msp;
  std::string decision_mode;
  std::optional<std::string> decision_context;
  double v_lower = 1.0;
  double v_upper = 100.0;
  Optimizer optimizer = Optimizer::PatternSearch;
  double initial_step = 0.25;  // fraction of (v_upper - v_lower)
  double min_step = 0.05;      // vehicles
  double fd_step = 1e-2;       // relative
  double outer_tol = 1e-6;
  int max_outer_iterations = 200;
  std::vector<std::string> multistart = {"lower", "mid", "upper"};
  bool warm_start = true;
  /// One common level for every decision link instead of one per link.
  bool shared_level = false;
  bool operator==(const MpecConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  std::vector<std::string> locations;
  std::vector<std::string> congestion_groups;
  std::vector<Mode> modes;
  std::vector<Subscription> subscriptions;
  std::vector<UserClass> classes;
  std::vector<TripLink> trip_links;
  std::map<std::string, ModeCostParams> cost_params;
  SolverSettings solver;
  FleetDefaults fleet;
  std::vector<MspConfig> msps;
  std::optional<MpecConfig> mpec;
  std::optional<double> booking_factor;  // parsed, never used
  std::vector<std::string> assumed_fields;  // JSON pointers
  std::size_t path_cap = 100000;

  bool operator==(const ScenarioConfig&) const = default;

  const Mode* find_mode(const std::string& id) const;
  const Subscription* find_subscription(const std::string& id) const;
  const UserClass* find_class(const std::string& id) const;
  const TripLink* find_trip_link(const std::string& from,
                                 const std::string& to) const;
  const MspConfig* find_msp(const std::string& id) const;
  /// The mode-kind subscription covering `mode`, if any.
  const Subscription* mode_subscription(const std::string& mode) const;
};

struct Diagnostic {
  enum class Severity { Warning, Error };
  Severity severity;
  std::string path;
  std::string message;
};

std::string to_string(Diagnostic::Severity s);

/// Parses without validation. Throws ParseError on malformed input.
ScenarioConfig parse_scenario(const nlohmann::json& doc);

/// Parses and validates. Throws ParseError or ValidationError.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig load_scenario_json(const nlohmann::json& doc);

std::vector<Diagnostic> validate_scenario(const ScenarioConfig& cfg);

nlohmann::json to_json(const ScenarioConfig& cfg);

/// Reads a whole file; throws std::ios_base::failure on I/O errors.
std::string read_file(const std::filesystem::path& path);

}  // namespace mmeq
