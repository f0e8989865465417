#include "mmeq/msp.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace mmeq {

namespace {

double service_flow(const MspSpec::OwnedLink& o,
                    std::span<const double> link_flows) {
  double f = 0.0;
  for (std::size_t a : o.members) f += link_flows[a];
  return f;
}

}  // namespace

MspSpec compile_msp(const ScenarioConfig& cfg, const Supernetwork& net,
                    const PathSet& ps, const std::string& msp_id) {
  const auto* msp = cfg.find_msp(msp_id);
  if (!msp) throw std::invalid_argument("unknown msp '" + msp_id + "'");
  MspSpec spec;
  spec.id = msp->id;
  spec.lease_rate = msp->lease_rate;
  spec.relocation_factor = msp->relocation_factor;
  spec.vc_form = msp->vc_form;
  spec.mask = msp->components;

  auto owns = [&](const std::string& mode) {
    return std::find(msp->modes.begin(), msp->modes.end(), mode) !=
           msp->modes.end();
  };
  std::vector<bool> owned(net.links().size(), false);
  for (const auto& sv : net.services()) {
    if (!owns(sv.mode)) continue;
    MspSpec::OwnedLink o;
    o.service = sv.id;
    o.link = sv.members.front();
    o.members = sv.members;
    o.length_km = sv.length_km;
    o.fleet = sv.fleet_capacity;
    if (auto it = cfg.cost_params.find(sv.mode); it != cfg.cost_params.end()) {
      o.tariff_per_hour = it->second.tariff_per_hour;
      o.tariff_per_km = it->second.tariff_per_km;
      o.fixed_fee = it->second.fixed_fee;
      o.fuel_per_km = it->second.fuel_per_km;
    }
    for (std::size_t a : sv.members) owned[a] = true;
    spec.owned_links.push_back(std::move(o));
  }

  auto streams = msp->subscription_revenue;
  if (streams.empty()) {
    std::set<std::string> seen;
    for (const auto& m : msp->modes) {
      const auto* s = cfg.mode_subscription(m);
      if (s && seen.insert(s->id).second) {
        streams.push_back(SubscriptionRevenue{s->id});
      }
    }
  }
  for (const auto& sr : streams) {
    const auto* sub = cfg.find_subscription(sr.subscription);
    if (!sub) {
      throw std::invalid_argument("msp '" + msp_id +
                                  "' references unknown subscription '" +
                                  sr.subscription + "'");
    }
    MspSpec::SubscriptionStream stream;
    stream.id = sub->id;
    const double fee = spec.mask.subscription ? sub->daily_cost : 0.0;
    const double subsidy = spec.mask.subsidy ? sub->daily_subsidy : 0.0;
    stream.per_subscriber = sr.share * (fee + subsidy) - sr.partner_fixed;
    for (std::size_t p = 0; p < ps.size(); ++p) {
      const auto& path = ps.paths()[p];
      if (!std::binary_search(path.subscriptions.begin(),
                              path.subscriptions.end(), sub->id)) {
        continue;
      }
      if (sr.only_users_of_owned_links) {
        const bool uses = std::any_of(
            path.links.begin(), path.links.end(), [&](std::size_t a) {
              if (!owned[a]) return false;
              return sub->kind != Subscription::Kind::Package ||
                     net.links()[a].context == sub->id;
            });
        if (!uses) continue;
      }
      stream.paths.push_back(p);
    }
    spec.subscriptions.push_back(std::move(stream));
  }
  return spec;
}

std::vector<double> subscriber_counts(const MspSpec& spec,
                                      std::span<const double> x) {
  std::vector<double> out;
  for (const auto& s : spec.subscriptions) {
    double n = 0.0;
    for (std::size_t p : s.paths) n += x[p];
    out.push_back(n);
  }
  return out;
}

double fixed_revenue(const MspSpec& spec, std::span<const double> x) {
  const auto counts = subscriber_counts(spec, x);
  double fr = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    fr += spec.subscriptions[i].per_subscriber * counts[i];
  }
  return fr;
}

double variable_revenue(const MspSpec& spec, const CostModel& model,
                        std::span<const double> link_flows,
                        std::span<const double> capacities) {
  double vr = 0.0;
  for (const auto& o : spec.owned_links) {
    const double f = service_flow(o, link_flows);
    if (f == 0.0) continue;
    double unit = 0.0;
    if (spec.mask.per_hour && o.tariff_per_hour != 0.0) {
      unit += o.tariff_per_hour * model.main_time(o.link, link_flows, capacities);
    }
    if (spec.mask.per_km) unit += o.tariff_per_km * o.length_km;
    if (spec.mask.fixed_fee) unit += o.fixed_fee;
    vr += unit * f;
  }
  return vr;
}

double owned_fleet(const MspSpec& spec, const FleetVector& v) {
  double total = 0.0;
  for (const auto& o : spec.owned_links) {
    if (!o.fleet) continue;
    auto it = v.entries.find(o.service);
    if (it != v.entries.end()) total += it->second;
  }
  return total;
}

double fixed_cost(const MspSpec& spec, const FleetVector& v) {
  if (!spec.mask.lease) return 0.0;
  return spec.lease_rate * owned_fleet(spec, v);
}

double variable_cost(const MspSpec& spec, std::span<const double> link_flows) {
  if (!spec.mask.fuel) return 0.0;
  const double relocation =
      1.0 + (spec.mask.relocation ? spec.relocation_factor : 0.0);
  double vc = 0.0;
  for (const auto& o : spec.owned_links) {
    const double f = service_flow(o, link_flows);
    const double carried =
        spec.vc_form == MspConfig::VcForm::TripsPlusOne ? 1.0 + f : f;
    vc += o.fuel_per_km * o.length_km * carried * relocation;
  }
  return vc;
}

ProfitBreakdown profit(const MspSpec& spec, const CostModel& model,
                       const EquilibriumSolution& sol, const FleetVector& v) {
  const auto caps = model.fleet_capacities(v);
  const auto& flows = sol.link_flows.total;
  ProfitBreakdown out;
  out.fr = fixed_revenue(spec, sol.x);
  out.vr = variable_revenue(spec, model, flows, caps);
  out.fc = fixed_cost(spec, v);
  out.vc = variable_cost(spec, flows);
  out.pr = out.fr + out.vr - out.fc - out.vc;
  return out;
}

}  // namespace mmeq
