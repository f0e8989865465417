#include "mmeq/costlib.hpp"

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace mmeq {

double FleetVector::at(const std::string& service) const {
  auto it = entries.find(service);
  if (it == entries.end()) {
    throw std::out_of_range("no fleet entry for '" + service + "'");
  }
  return it->second;
}

double FleetVector::total() const {
  double sum = 0.0;
  for (const auto& [_, v] : entries) sum += v;
  return sum;
}

FleetVector default_fleet(const ScenarioConfig& cfg, const Supernetwork& net) {
  FleetVector v;
  for (const auto& s : net.services()) {
    if (!s.fleet_capacity) continue;
    const std::string label = Layer{s.mode, s.context}.label();
    double value = cfg.fleet.default_value;
    if (auto it = cfg.fleet.by_link.find(s.id); it != cfg.fleet.by_link.end()) {
      value = it->second;
    } else if (auto it2 = cfg.fleet.by_layer.find(label);
               it2 != cfg.fleet.by_layer.end()) {
      value = it2->second;
    } else if (auto it3 = cfg.fleet.by_layer.find(s.mode);
               it3 != cfg.fleet.by_layer.end()) {
      value = it3->second;
    }
    v.entries[s.id] = value;
  }
  return v;
}

FleetVector apply_fleet_overrides(const Supernetwork& net, FleetVector base,
                                  const std::vector<std::string>& overrides) {
  auto parse_value = [](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
      throw std::invalid_argument("bad fleet value '" + s + "'");
    }
    if (!(v >= kFleetEpsilon)) {
      throw std::invalid_argument("fleet value below epsilon: '" + s + "'");
    }
    return v;
  };
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    const std::string key = eq == std::string::npos ? "v" : item.substr(0, eq);
    const double value =
        parse_value(eq == std::string::npos ? item : item.substr(eq + 1));
    bool matched = false;
    for (const auto& s : net.services()) {
      auto it = base.entries.find(s.id);
      if (it == base.entries.end()) continue;
      if (key == "v" || key == s.id || key == Layer{s.mode, s.context}.label() ||
          key == s.mode) {
        it->second = value;
        matched = true;
      }
    }
    if (!matched) {
      throw std::invalid_argument("fleet override '" + key +
                                  "' matches no fleet link");
    }
  }
  return base;
}

CostModel::CostModel(const ScenarioConfig& cfg, const Supernetwork& net,
                     const PathSet& ps)
    : ps_(&ps), links_(net.links().size()), num_classes_(cfg.classes.size()) {
  const auto groups = congestion_groups(net);
  for (const auto& [_, members] : groups) {
    for (std::size_t a : members) links_[a].congestion_slot = congestion_members_.size();
    congestion_members_.push_back(members);
  }
  for (const auto& sv : net.services()) {
    for (std::size_t a : sv.members) links_[a].service = service_members_.size();
    service_members_.push_back(sv.members);
    service_ids_.push_back(sv.id);
  }
  for (const auto& l : net.links()) {
    auto& c = links_[l.index];
    if (l.kind != LinkKind::ModeSpecific) continue;
    c.mode_link = true;
    mode_links_.push_back(l.index);
    auto it = cfg.cost_params.find(*l.mode);
    if (it != cfg.cost_params.end()) {
      const auto& p = it->second;
      const double fuel = p.fuel_paid_by_user ? p.fuel_per_km : 0.0;
      c.monetary = (fuel + p.tariff_per_km) * l.length_km + p.fixed_fee;
      c.tariff_per_hour = p.tariff_per_hour;
      auto bind = [](Component& comp, const std::optional<TimeFunction>& tf) {
        if (tf) comp = Component{*tf, true};
      };
      bind(c.access, p.access);
      bind(c.wait, p.wait);
      bind(c.main, p.main);
      bind(c.park, p.park);
      bind(c.egress, p.egress);
    }
    c.unit.resize(num_classes_);
    for (std::size_t k = 0; k < num_classes_; ++k) {
      const auto& uc = cfg.classes[k].unit_costs;
      if (auto u = uc.find(*l.mode); u != uc.end()) c.unit[k] = u->second;
    }
  }
  path_sub_cost_.resize(ps.size(), 0.0);
  for (std::size_t p = 0; p < ps.size(); ++p) {
    for (const auto& s : ps.paths()[p].subscriptions) {
      if (const auto* sub = cfg.find_subscription(s)) {
        path_sub_cost_[p] += sub->daily_cost;
      }
    }
  }
}

std::vector<double> CostModel::fleet_capacities(const FleetVector& v) const {
  std::vector<double> caps(links_.size(), 0.0);
  for (std::size_t sv = 0; sv < service_ids_.size(); ++sv) {
    auto it = v.entries.find(service_ids_[sv]);
    if (it == v.entries.end()) continue;
    for (std::size_t a : service_members_[sv]) caps[a] = it->second;
  }
  return caps;
}

double CostModel::group_flow(std::size_t a,
                             std::span<const double> total_flows) const {
  double sum = 0.0;
  for (std::size_t m : congestion_members_[links_[a].congestion_slot]) {
    sum += total_flows[m];
  }
  return sum;
}

double CostModel::service_flow(std::size_t a,
                               std::span<const double> total_flows) const {
  if (!links_[a].mode_link) return total_flows[a];
  double sum = 0.0;
  for (std::size_t m : service_members_[links_[a].service]) sum += total_flows[m];
  return sum;
}

double CostModel::component_time(const Component& c, std::size_t a,
                                 double flow,
                                 std::span<const double> capacities) const {
  if (!c.present) return 0.0;
  double capacity = 0.0;
  switch (c.tf.capacity.kind) {
    case CapacitySource::Kind::None:
      break;
    case CapacitySource::Kind::Fixed:
      capacity = c.tf.capacity.value;
      break;
    case CapacitySource::Kind::Fleet:
      capacity = capacities[a];
      break;
  }
  return eval_time(c.tf, flow, capacity);
}

double CostModel::main_time(std::size_t a, std::span<const double> total_flows,
                            std::span<const double> capacities) const {
  const auto& c = links_[a];
  if (!c.mode_link) return 0.0;
  return component_time(c.main, a, group_flow(a, total_flows), capacities);
}

LinkCostBreakdown CostModel::link_cost_breakdown(
    std::size_t class_index, std::size_t a, std::span<const double> total_flows,
    std::span<const double> capacities) const {
  const auto& c = links_[a];
  LinkCostBreakdown out;
  if (!c.mode_link) return out;
  const auto& u = c.unit[class_index];
  const double own = service_flow(a, total_flows);
  out.access = u.access * component_time(c.access, a, own, capacities) +
               u.wait * component_time(c.wait, a, own, capacities);
  const double t_main = main_time(a, total_flows, capacities);
  out.main = c.monetary + (c.tariff_per_hour + u.main) * t_main;
  out.egress = u.park * component_time(c.park, a, own, capacities) +
               u.access * component_time(c.egress, a, own, capacities);
  return out;
}

double CostModel::link_cost(std::size_t class_index, std::size_t a,
                            const LinkFlows& flows,
                            const FleetVector& v) const {
  const auto caps = fleet_capacities(v);
  return link_cost_breakdown(class_index, a, flows.total, caps).total();
}

void CostModel::path_costs(std::span<const double> total_flows,
                           std::span<const double> capacities,
                           std::span<double> costs) const {
  const auto& ps = *ps_;
  // Per (class, link) costs for the links each class's paths use.
  std::vector<double> table(num_classes_ * links_.size(), 0.0);
  for (std::size_t a : mode_links_) {
    const auto& c = links_[a];
    const double own = service_flow(a, total_flows);
    const double t_access = component_time(c.access, a, own, capacities);
    const double t_wait = component_time(c.wait, a, own, capacities);
    const double t_main = component_time(c.main, a, group_flow(a, total_flows),
                                         capacities);
    const double t_park = component_time(c.park, a, own, capacities);
    const double t_egress = component_time(c.egress, a, own, capacities);
    for (std::size_t k = 0; k < num_classes_; ++k) {
      const auto& u = c.unit[k];
      table[k * links_.size() + a] =
          u.access * (t_access + t_egress) + u.wait * t_wait + c.monetary +
          (c.tariff_per_hour + u.main) * t_main + u.park * t_park;
    }
  }
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const std::size_t k = ps.class_of_path(p);
    double sum = path_sub_cost_[p];
    for (std::size_t a : ps.paths()[p].links) sum += table[k * links_.size() + a];
    costs[p] = sum;
  }
}

double CostModel::path_cost(std::size_t p, std::span<const double> x,
                            const FleetVector& v) const {
  return cost_operator(x, v)[p];
}

std::vector<double> CostModel::cost_operator(std::span<const double> x,
                                             const FleetVector& v) const {
  const auto flows = path_link_flows(x, *ps_);
  const auto caps = fleet_capacities(v);
  std::vector<double> costs(ps_->size());
  path_costs(flows.total, caps, costs);
  return costs;
}

CostOperator CostModel::bind(const FleetVector& v) const {
  struct State {
    std::vector<double> caps;
    LinkFlows flows;
  };
  auto state = std::make_shared<State>();
  state->caps = fleet_capacities(v);
  return [this, state](std::span<const double> x, std::span<double> costs) {
    path_link_flows(x, *ps_, state->flows);
    path_costs(state->flows.total, state->caps, costs);
  };
}

}  // namespace mmeq
