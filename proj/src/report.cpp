#include "mmeq/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace mmeq {

using nlohmann::json;

std::string format_number(double v) {
  if (v == 0.0) return "0";  // no "-0"
  return fmt::format("{}", v);
}

std::vector<double> parse_grid(const std::string& spec) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw std::invalid_argument("bad grid '" + spec + "'");
    }
    return v;
  };
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw std::invalid_argument("bad grid '" + spec + "'");
    const double a = number(parts[0]), b = number(parts[1]),
                 step = number(parts[2]);
    if (step <= 0.0 || b < a) throw std::invalid_argument("bad grid '" + spec + "'");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
      // Multiply rather than accumulate so 0.5:1.5:0.1 hits 1.5 exactly.
      const double v = a + static_cast<double>(i) * step;
      out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
  }
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

json apply_overrides(json doc, const json& set) {
  if (!set.is_object()) throw std::invalid_argument("overrides must be an object");
  for (const auto& [pointer, value] : set.items()) {
    const json::json_pointer ptr(pointer);
    if (doc.contains(ptr)) {
      auto& node = doc[ptr];
      if (node.is_object() && node.contains("value") && value.is_number()) {
        node["value"] = value;
      } else {
        node = value;
      }
      continue;
    }
    if (!doc.contains(ptr.parent_pointer()) ||
        !doc[ptr.parent_pointer()].is_object()) {
      throw std::invalid_argument("override target '" + pointer + "' not found");
    }
    doc[ptr] = value;
  }
  return doc;
}

std::vector<NamedScenario> load_variants(const std::filesystem::path& file) {
  const auto spec = read_json_file(file);
  const auto base =
      read_json_file(file.parent_path() / spec.at("base").get<std::string>());
  std::vector<NamedScenario> out;
  for (const auto& v : spec.at("variants")) {
    out.push_back({v.at("name").get<std::string>(),
                   apply_overrides(base, v.at("set"))});
  }
  return out;
}

json separable_split(json doc, double car_capacity, double sharing_capacity,
                     const std::string& car_mode,
                     const std::string& sharing_mode) {
  bool found = false;
  for (auto& m : doc.at("modes")) {
    if (m.at("id") == sharing_mode) {
      m.erase("congestion_group");
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("no mode '" + sharing_mode + "'");
  doc["cost_params"][car_mode]["main"]["capacity"] = car_capacity;
  doc["cost_params"][sharing_mode]["main"]["capacity"] = sharing_capacity;
  doc["name"] = doc.value("name", std::string("scenario")) + "-separable-" +
                format_number(car_capacity) + "-" +
                format_number(sharing_capacity);
  return doc;
}

std::string path_modes(const Supernetwork& net, const Path& p) {
  std::string out;
  for (std::size_t a : p.links) {
    const auto& l = net.links()[a];
    if (l.kind != LinkKind::ModeSpecific) continue;
    if (!out.empty()) out += '|';
    out += net.groups()[l.group].layers[static_cast<std::size_t>(l.layer)].label();
  }
  return out;
}

namespace {

std::string join_subscriptions(const Path& p) {
  std::string out;
  for (const auto& s : p.subscriptions) {
    if (!out.empty()) out += '|';
    out += s;
  }
  return out;
}

}  // namespace

std::string paths_csv(const Supernetwork& net, const PathSet& ps) {
  std::string out = "path,class,od,modes,subscriptions,num_links\n";
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const auto& b = ps.blocks()[ps.block_of_path(p)];
    const auto& path = ps.paths()[p];
    out += fmt::format("{},{},{},{},{},{}\n", p, b.class_id, b.od,
                       path_modes(net, path), join_subscriptions(path),
                       path.links.size());
  }
  return out;
}

std::string equilibrium_csv(const Supernetwork& net, const PathSet& ps,
                            const EquilibriumSolution& sol) {
  std::string out =
      "path,class,modes,subscriptions,flow_travelers_per_day,"
      "cost_eur_per_traveler,block_min_cost_eur_per_traveler\n";
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const std::size_t b = ps.block_of_path(p);
    const auto& path = ps.paths()[p];
    out += fmt::format("{},{},{},{},{},{},{}\n", p, ps.blocks()[b].class_id,
                       path_modes(net, path), join_subscriptions(path),
                       format_number(sol.x[p]), format_number(sol.path_costs[p]),
                       format_number(sol.min_costs[b]));
  }
  return out;
}

std::string link_flows_csv(const Supernetwork& net, const CostModel& model,
                           const EquilibriumSolution& sol,
                           const FleetVector& v) {
  const auto caps = model.fleet_capacities(v);
  const auto& f = sol.link_flows.total;
  std::string out =
      "link,service,layer,flow_travelers_per_day,service_flow_travelers_per_day,"
      "group_flow_travelers_per_day,main_time_h,fleet_vehicles\n";
  for (const auto& l : net.links()) {
    if (l.kind != LinkKind::ModeSpecific) continue;
    const auto& sv = net.services()[*l.service];
    out += fmt::format(
        "{},{},{},{},{},{},{},{}\n", l.id, sv.id,
        net.groups()[l.group].layers[static_cast<std::size_t>(l.layer)].label(),
        format_number(f[l.index]), format_number(model.service_flow(l.index, f)),
        format_number(model.group_flow(l.index, f)),
        format_number(model.main_time(l.index, f, caps)),
        sv.fleet_capacity ? format_number(v.at(sv.id)) : std::string());
  }
  return out;
}

std::string gap_trace_csv(const EquilibriumSolution& sol) {
  std::string out = "iteration,relative_gap\n";
  for (std::size_t i = 0; i < sol.gap_trace.size(); ++i) {
    out += fmt::format("{},{}\n", i + 1, format_number(sol.gap_trace[i]));
  }
  return out;
}

std::string profit_csv(const std::string& msp, const ProfitBreakdown& p,
                       double fleet_total) {
  return "msp,fleet_total_vehicles,fr_eur_per_day,vr_eur_per_day,"
         "fc_eur_per_day,vc_eur_per_day,pr_eur_per_day\n" +
         fmt::format("{},{},{},{},{},{},{}\n", msp, format_number(fleet_total),
                     format_number(p.fr), format_number(p.vr),
                     format_number(p.fc), format_number(p.vc),
                     format_number(p.pr));
}

std::string profit_curve_csv(const std::vector<ProfitCurvePoint>& points) {
  std::string out =
      "level_vehicles,fleet_total_vehicles,pr_eur_per_day,fr_eur_per_day,"
      "vr_eur_per_day,fc_eur_per_day,vc_eur_per_day,inner_iterations,"
      "converged\n";
  for (const auto& p : points) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", format_number(p.level),
                       format_number(p.fleet_total), format_number(p.profit.pr),
                       format_number(p.profit.fr), format_number(p.profit.vr),
                       format_number(p.profit.fc), format_number(p.profit.vc),
                       p.inner_iterations, p.reliable ? 1 : 0);
  }
  return out;
}

std::string outer_trace_csv(const std::vector<OuterTraceRow>& rows) {
  std::string out =
      "start,iteration,fleet_total_vehicles,levels_vehicles,pr_eur_per_day,"
      "step_vehicles\n";
  for (const auto& r : rows) {
    std::string levels;
    for (double l : r.levels) {
      if (!levels.empty()) levels += '|';
      levels += format_number(l);
    }
    out += fmt::format("{},{},{},{},{},{}\n", r.start, r.iteration,
                       format_number(r.fleet_total), levels,
                       format_number(r.pr), format_number(r.step));
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepAxis>& axes,
                      const std::vector<SweepRow>& rows) {
  std::string out;
  for (const auto& a : axes) out += a.path + ",";
  out +=
      "pr_eur_per_day,fr_eur_per_day,vr_eur_per_day,fc_eur_per_day,"
      "vc_eur_per_day,fleet_total_vehicles,relative_gap,converged";
  if (!rows.empty()) {
    for (const auto& [m, _] : rows.front().mode_share) out += ",share_" + m;
    for (const auto& [s, _] : rows.front().subscriber_share) {
      out += ",subscribers_share_" + s;
    }
  }
  out += '\n';
  for (const auto& r : rows) {
    for (double v : r.axis_values) out += format_number(v) + ",";
    out += fmt::format("{},{},{},{},{},{},{},{}", format_number(r.pr),
                       format_number(r.profit.fr), format_number(r.profit.vr),
                       format_number(r.profit.fc), format_number(r.profit.vc),
                       format_number(r.fleet_total), format_number(r.gap),
                       r.reliable ? 1 : 0);
    for (const auto& [_, s] : r.mode_share) out += "," + format_number(s);
    for (const auto& [_, s] : r.subscriber_share) out += "," + format_number(s);
    out += '\n';
  }
  return out;
}

json profit_json(const ProfitBreakdown& p) {
  return {{"fr", p.fr}, {"vr", p.vr}, {"fc", p.fc}, {"vc", p.vc}, {"pr", p.pr}};
}

json fleet_json(const FleetVector& v) {
  json out = json::object();
  for (const auto& [k, x] : v.entries) out[k] = x;
  return out;
}

json mpec_result_json(const MpecProblem& problem, const MpecResult& r) {
  json decision = json::array();
  for (std::size_t s : problem.decision_links()) {
    decision.push_back(problem.network().services()[s].id);
  }
  json trace = json::array();
  for (const auto& t : r.outer_trace) {
    trace.push_back({{"start", t.start},
                     {"iteration", t.iteration},
                     {"levels", t.levels},
                     {"fleet_total", t.fleet_total},
                     {"pr", t.pr},
                     {"step", t.step}});
  }
  return {{"scenario", problem.config().name},
          {"msp", problem.mpec().msp},
          {"decision_services", decision},
          {"levels", r.levels},
          {"fleet_total", r.fleet_total},
          {"v_star", fleet_json(r.v_star)},
          {"profit", profit_json(r.profit)},
          {"reliable", r.reliable},
          {"best_start", r.best_start},
          {"evaluations", r.evaluations},
          {"inner_iteration_counts", r.inner_iteration_counts},
          {"equilibrium",
           {{"gap", r.x_star.gap},
            {"iterations", r.x_star.iterations},
            {"converged", r.x_star.converged},
            {"path_flows", r.x_star.x},
            {"path_costs", r.x_star.path_costs}}},
          {"outer_trace", trace}};
}

}  // namespace mmeq
