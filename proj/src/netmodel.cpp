#include "mmeq/netmodel.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mmeq {

using nlohmann::json;

namespace {

std::string escape_pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

// Replaces every {"value": x, "assumed": b} wrapper by x and records the
// pointers of the ones flagged as assumed.
json unwrap_assumed(const json& node, const std::string& pointer,
                    std::vector<std::string>& assumed) {
  if (node.is_object()) {
    if (node.contains("value") && node.contains("assumed")) {
      for (const auto& [key, _] : node.items()) {
        if (key != "value" && key != "assumed" && key != "note") {
          throw ParseError(pointer + ": unexpected key '" + key +
                           "' in value wrapper");
        }
      }
      if (!node["assumed"].is_boolean()) {
        throw ParseError(pointer + "/assumed: expected boolean");
      }
      if (node["assumed"].get<bool>()) assumed.push_back(pointer);
      return node["value"];
    }
    json out = json::object();
    for (const auto& [key, value] : node.items()) {
      out[key] = unwrap_assumed(value, pointer + "/" + escape_pointer_token(key),
                              assumed);
    }
    return out;
  }
  if (node.is_array()) {
    json out = json::array();
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(
          unwrap_assumed(node[i], pointer + "/" + std::to_string(i), assumed));
    }
    return out;
  }
  return node;
}

// Typed access to one JSON object with path-qualified errors.
class Reader {
 public:
  Reader(const json& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected object");
    for (const auto& [key, _] : node_.items()) {
      if (!key.empty() && key[0] == '_') continue;  // comments
      if (!allowed.count(key)) fail("unknown key '" + key + "'");
    }
  }

  bool has(const std::string& key) const {
    return node_.contains(key) && !node_[key].is_null();
  }
  const json& raw(const std::string& key) const { return node_[key]; }
  std::string sub(const std::string& key) const { return path_ + "/" + key; }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return number_at(node_[key], sub(key));
  }
  double required_number(const std::string& key) const {
    require(key);
    return number_at(node_[key], sub(key));
  }
  int integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    if (!node_[key].is_number_integer()) fail_at(sub(key), "expected integer");
    return node_[key].get<int>();
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!node_[key].is_boolean()) fail_at(sub(key), "expected boolean");
    return node_[key].get<bool>();
  }
  std::string string(const std::string& key) const {
    require(key);
    return string_at(node_[key], sub(key));
  }
  std::optional<std::string> optional_string(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return string_at(node_[key], sub(key));
  }
  std::vector<std::string> strings(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const auto& arr = node_[key];
    if (!arr.is_array()) fail_at(sub(key), "expected array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(string_at(arr[i], sub(key) + "/" + std::to_string(i)));
    }
    return out;
  }
  const json& array(const std::string& key) const {
    static const json empty = json::array();
    if (!has(key)) return empty;
    if (!node_[key].is_array()) fail_at(sub(key), "expected array");
    return node_[key];
  }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(path_, msg); }

  static double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) fail_at(path, "expected number");
    return v.get<double>();
  }
  static std::string string_at(const json& v, const std::string& path) {
    if (!v.is_string()) fail_at(path, "expected string");
    return v.get<std::string>();
  }
  [[noreturn]] static void fail_at(const std::string& path,
                                   const std::string& msg) {
    throw ParseError((path.empty() ? std::string("/") : path) + ": " + msg);
  }

 private:
  void require(const std::string& key) const {
    if (!has(key)) fail("missing required key '" + key + "'");
  }

  const json& node_;
  std::string path_;
};

TimeFunction parse_time_function(const json& node, const std::string& path) {
  Reader r(node, path, {"t0", "alpha", "beta", "capacity"});
  TimeFunction tf;
  tf.t0 = r.number("t0", 0.0);
  tf.alpha = r.number("alpha", 0.0);
  tf.beta = r.number("beta", 1.0);
  if (r.has("capacity")) {
    const auto& cap = r.raw("capacity");
    if (cap.is_string()) {
      if (cap.get<std::string>() != "fleet") {
        Reader::fail_at(r.sub("capacity"), "expected number or \"fleet\"");
      }
      tf.capacity = CapacitySource::fleet();
    } else {
      tf.capacity =
          CapacitySource::fixed(Reader::number_at(cap, r.sub("capacity")));
    }
  }
  return tf;
}

json time_function_to_json(const TimeFunction& tf) {
  json out = {{"t0", tf.t0}, {"alpha", tf.alpha}, {"beta", tf.beta}};
  switch (tf.capacity.kind) {
    case CapacitySource::Kind::None:
      break;
    case CapacitySource::Kind::Fixed:
      out["capacity"] = tf.capacity.value;
      break;
    case CapacitySource::Kind::Fleet:
      out["capacity"] = "fleet";
      break;
  }
  return out;
}

ModeCostParams parse_cost_params(const json& node, const std::string& path) {
  Reader r(node, path,
           {"fuel_per_km", "fuel_paid_by_user", "tariff_per_km",
            "tariff_per_hour", "fixed_fee", "access", "wait", "main", "park", "egress"});
  ModeCostParams p;
  p.fuel_per_km = r.number("fuel_per_km", 0.0);
  p.tariff_per_km = r.number("tariff_per_km", 0.0);
  p.tariff_per_hour = r.number("tariff_per_hour", 0.0);
  p.fixed_fee = r.number("fixed_fee", 0.0);
  p.fuel_paid_by_user = r.boolean("fuel_paid_by_user", true);
  auto component = [&](const char* key) -> std::optional<TimeFunction> {
    if (!r.has(key)) return std::nullopt;
    return parse_time_function(r.raw(key), r.sub(key));
  };
  p.access = component("access");
  p.wait = component("wait");
  p.main = component("main");
  p.park = component("park");
  p.egress = component("egress");
  return p;
}

const std::map<std::string, SolverSettings::InitialFlow> kInitialFlowNames = {
    {"uniform", SolverSettings::InitialFlow::UniformSplit},
    {"first_path", SolverSettings::InitialFlow::AllOnFirstPath},
    {"given", SolverSettings::InitialFlow::Given},
};

template <typename Enum>
std::string enum_name(const std::map<std::string, Enum>& names, Enum value) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

template <typename Enum>
Enum parse_enum(const std::map<std::string, Enum>& names,
                const std::string& value, const std::string& path) {
  auto it = names.find(value);
  if (it == names.end()) {
    Reader::fail_at(path, "unknown value '" + value + "'");
  }
  return it->second;
}

SolverSettings parse_solver(const json& node, const std::string& path) {
  Reader r(node, path,
           {"psi", "gap_tolerance", "step_tolerance", "max_iterations",
            "initial_flow", "given_flow", "require_both", "adaptive_step"});
  SolverSettings s;
  s.psi = r.number("psi", s.psi);
  s.gap_tolerance = r.number("gap_tolerance", s.gap_tolerance);
  s.step_tolerance = r.number("step_tolerance", s.step_tolerance);
  s.max_iterations = r.integer("max_iterations", s.max_iterations);
  if (r.has("initial_flow")) {
    s.initial_flow = parse_enum(kInitialFlowNames, r.string("initial_flow"),
                                r.sub("initial_flow"));
  }
  const auto& given = r.array("given_flow");
  for (std::size_t i = 0; i < given.size(); ++i) {
    s.given_flow.push_back(Reader::number_at(
        given[i], r.sub("given_flow") + "/" + std::to_string(i)));
  }
  s.require_both = r.boolean("require_both", s.require_both);
  s.adaptive_step = r.boolean("adaptive_step", s.adaptive_step);
  return s;
}

json solver_to_json(const SolverSettings& s) {
  json out = {{"psi", s.psi},
              {"gap_tolerance", s.gap_tolerance},
              {"step_tolerance", s.step_tolerance},
              {"max_iterations", s.max_iterations},
              {"initial_flow", enum_name(kInitialFlowNames, s.initial_flow)},
              {"require_both", s.require_both},
              {"adaptive_step", s.adaptive_step}};
  if (!s.given_flow.empty()) out["given_flow"] = s.given_flow;
  return out;
}

const std::map<std::string, MspConfig::VcForm> kVcFormNames = {
    {"trips_plus_one", MspConfig::VcForm::TripsPlusOne},
    {"trips", MspConfig::VcForm::Trips},
};

const std::vector<std::pair<std::string, bool ComponentMask::*>>
    kComponentNames = {
        {"subscription", &ComponentMask::subscription},
        {"subsidy", &ComponentMask::subsidy},
        {"per_hour", &ComponentMask::per_hour},
        {"per_km", &ComponentMask::per_km},
        {"fixed_fee", &ComponentMask::fixed_fee},
        {"lease", &ComponentMask::lease},
        {"fuel", &ComponentMask::fuel},
        {"relocation", &ComponentMask::relocation},
};

MspConfig parse_msp(const json& node, const std::string& path) {
  Reader r(node, path,
           {"id", "modes", "lease_rate", "relocation_factor", "vc_form",
            "components", "subscription_revenue"});
  MspConfig m;
  m.id = r.string("id");
  m.modes = r.strings("modes");
  m.lease_rate = r.number("lease_rate", 0.0);
  m.relocation_factor = r.number("relocation_factor", 0.0);
  if (r.has("vc_form")) {
    m.vc_form =
        parse_enum(kVcFormNames, r.string("vc_form"), r.sub("vc_form"));
  }
  if (r.has("components")) {
    ComponentMask mask;
    for (const auto& [_, member] : kComponentNames) mask.*member = false;
    const auto names = r.strings("components");
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto it = std::find_if(kComponentNames.begin(), kComponentNames.end(),
                             [&](const auto& e) { return e.first == names[i]; });
      if (it == kComponentNames.end()) {
        Reader::fail_at(r.sub("components") + "/" + std::to_string(i),
                        "unknown component '" + names[i] + "'");
      }
      mask.*(it->second) = true;
    }
    m.components = mask;
  }
  const auto& revenue = r.array("subscription_revenue");
  for (std::size_t i = 0; i < revenue.size(); ++i) {
    Reader e(revenue[i], r.sub("subscription_revenue") + "/" + std::to_string(i),
             {"subscription", "share", "partner_fixed",
              "only_users_of_owned_links"});
    SubscriptionRevenue sr;
    sr.subscription = e.string("subscription");
    sr.share = e.number("share", 1.0);
    sr.partner_fixed = e.number("partner_fixed", 0.0);
    sr.only_users_of_owned_links =
        e.boolean("only_users_of_owned_links", false);
    m.subscription_revenue.push_back(sr);
  }
  return m;
}

const std::map<std::string, MpecConfig::Optimizer> kOptimizerNames = {
    {"pattern_search", MpecConfig::Optimizer::PatternSearch},
    {"fd_quasi_newton", MpecConfig::Optimizer::FiniteDifferenceQuasiNewton},
};

MpecConfig parse_mpec(const json& node, const std::string& path) {
  Reader r(node, path,
           {"msp", "decision", "v_lower", "v_upper", "optimizer",
            "initial_step", "min_step", "fd_step", "outer_tol",
            "max_outer_iterations", "multistart", "warm_start", "shared_level"});
  MpecConfig m;
  m.msp = r.string("msp");
  if (!r.has("decision")) r.fail("missing required key 'decision'");
  Reader d(r.raw("decision"), r.sub("decision"), {"mode", "context"});
  m.decision_mode = d.string("mode");
  m.decision_context = d.optional_string("context");
  m.v_lower = r.number("v_lower", m.v_lower);
  m.v_upper = r.number("v_upper", m.v_upper);
  if (r.has("optimizer")) {
    m.optimizer =
        parse_enum(kOptimizerNames, r.string("optimizer"), r.sub("optimizer"));
  }
  m.initial_step = r.number("initial_step", m.initial_step);
  m.min_step = r.number("min_step", m.min_step);
  m.fd_step = r.number("fd_step", m.fd_step);
  m.outer_tol = r.number("outer_tol", m.outer_tol);
  m.max_outer_iterations =
      r.integer("max_outer_iterations", m.max_outer_iterations);
  if (r.has("multistart")) m.multistart = r.strings("multistart");
  m.warm_start = r.boolean("warm_start", m.warm_start);
  m.shared_level = r.boolean("shared_level", m.shared_level);
  return m;
}

json opt_string(const std::optional<std::string>& s) {
  return s ? json(*s) : json(nullptr);
}

}  // namespace

std::string to_string(Diagnostic::Severity s) {
  return s == Diagnostic::Severity::Error ? "error" : "warning";
}

const Mode* ScenarioConfig::find_mode(const std::string& id) const {
  auto it = std::find_if(modes.begin(), modes.end(),
                         [&](const Mode& m) { return m.id == id; });
  return it == modes.end() ? nullptr : &*it;
}

const Subscription* ScenarioConfig::find_subscription(
    const std::string& id) const {
  auto it = std::find_if(subscriptions.begin(), subscriptions.end(),
                         [&](const Subscription& s) { return s.id == id; });
  return it == subscriptions.end() ? nullptr : &*it;
}

const UserClass* ScenarioConfig::find_class(const std::string& id) const {
  auto it = std::find_if(classes.begin(), classes.end(),
                         [&](const UserClass& c) { return c.id == id; });
  return it == classes.end() ? nullptr : &*it;
}

const TripLink* ScenarioConfig::find_trip_link(const std::string& from,
                                               const std::string& to) const {
  auto it = std::find_if(trip_links.begin(), trip_links.end(),
                         [&](const TripLink& t) {
                           return t.from == from && t.to == to;
                         });
  return it == trip_links.end() ? nullptr : &*it;
}

const MspConfig* ScenarioConfig::find_msp(const std::string& id) const {
  auto it = std::find_if(msps.begin(), msps.end(),
                         [&](const MspConfig& m) { return m.id == id; });
  return it == msps.end() ? nullptr : &*it;
}

const Subscription* ScenarioConfig::mode_subscription(
    const std::string& mode) const {
  for (const auto& s : subscriptions) {
    if (s.kind != Subscription::Kind::Mode) continue;
    if (std::find(s.member_modes.begin(), s.member_modes.end(), mode) !=
        s.member_modes.end()) {
      return &s;
    }
  }
  return nullptr;
}

ScenarioConfig parse_scenario(const json& input) {
  ScenarioConfig cfg;
  const json doc = unwrap_assumed(input, "", cfg.assumed_fields);
  Reader top(doc, "",
             {"name", "locations", "congestion_groups", "modes",
              "subscriptions", "classes", "trip_links", "cost_params",
              "solver", "fleet", "msps", "mpec", "booking_factor",
              "path_cap"});
  cfg.name = top.has("name") ? top.string("name") : "";
  cfg.locations = top.strings("locations");
  cfg.congestion_groups = top.strings("congestion_groups");

  const auto& modes = top.array("modes");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    Reader r(modes[i], "/modes/" + std::to_string(i),
             {"id", "congestion_group", "owner_msp", "private_vehicle"});
    cfg.modes.push_back(Mode{r.string("id"),
                             r.optional_string("congestion_group"),
                             r.optional_string("owner_msp"),
                             r.boolean("private_vehicle", false)});
  }

  const auto& subs = top.array("subscriptions");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    Reader r(subs[i], "/subscriptions/" + std::to_string(i),
             {"id", "kind", "daily_cost", "daily_subsidy", "member_modes",
              "usage_rule"});
    Subscription s;
    s.id = r.string("id");
    if (r.has("kind")) {
      const auto kind = r.string("kind");
      if (kind == "mode") {
        s.kind = Subscription::Kind::Mode;
      } else if (kind == "package") {
        s.kind = Subscription::Kind::Package;
      } else {
        Reader::fail_at(r.sub("kind"), "unknown value '" + kind + "'");
      }
    }
    s.daily_cost = r.number("daily_cost", 0.0);
    s.daily_subsidy = r.number("daily_subsidy", 0.0);
    s.member_modes = r.strings("member_modes");
    if (r.has("usage_rule")) {
      Reader u(r.raw("usage_rule"), r.sub("usage_rule"), {"must_use_mode"});
      s.must_use_mode = u.optional_string("must_use_mode");
    }
    cfg.subscriptions.push_back(std::move(s));
  }

  const auto& classes = top.array("classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string path = "/classes/" + std::to_string(i);
    Reader r(classes[i], path,
             {"id", "trip_chain", "demand", "allowed_modes", "unit_costs"});
    UserClass k;
    k.id = r.string("id");
    k.trip_chain = r.strings("trip_chain");
    k.demand = r.required_number("demand");
    k.allowed_modes = r.strings("allowed_modes");
    if (r.has("unit_costs")) {
      const auto& uc = r.raw("unit_costs");
      if (!uc.is_object()) Reader::fail_at(r.sub("unit_costs"), "expected object");
      for (const auto& [mode, node] : uc.items()) {
        Reader c(node, r.sub("unit_costs") + "/" + mode,
                 {"access", "wait", "main", "park"});
        k.unit_costs[mode] = UnitCosts{c.number("access", 0.0),
                                       c.number("wait", 0.0),
                                       c.number("main", 0.0),
                                       c.number("park", 0.0)};
      }
    }
    cfg.classes.push_back(std::move(k));
  }

  const auto& legs = top.array("trip_links");
  for (std::size_t i = 0; i < legs.size(); ++i) {
    Reader r(legs[i], "/trip_links/" + std::to_string(i),
             {"from", "to", "length_km", "modes"});
    cfg.trip_links.push_back(TripLink{r.string("from"), r.string("to"),
                                      r.required_number("length_km"),
                                      r.strings("modes")});
  }

  if (top.has("cost_params")) {
    const auto& cp = top.raw("cost_params");
    if (!cp.is_object()) Reader::fail_at("/cost_params", "expected object");
    for (const auto& [mode, node] : cp.items()) {
      cfg.cost_params[mode] = parse_cost_params(node, "/cost_params/" + mode);
    }
  }

  if (top.has("solver")) cfg.solver = parse_solver(top.raw("solver"), "/solver");

  if (top.has("fleet")) {
    Reader r(top.raw("fleet"), "/fleet", {"default", "by_layer", "by_link"});
    cfg.fleet.default_value = r.number("default", cfg.fleet.default_value);
    for (const char* key : {"by_layer", "by_link"}) {
      if (!r.has(key)) continue;
      const auto& m = r.raw(key);
      if (!m.is_object()) Reader::fail_at(r.sub(key), "expected object");
      auto& target = std::string(key) == "by_layer" ? cfg.fleet.by_layer
                                                    : cfg.fleet.by_link;
      for (const auto& [id, v] : m.items()) {
        target[id] = Reader::number_at(v, r.sub(key) + "/" + id);
      }
    }
  }

  const auto& msps = top.array("msps");
  for (std::size_t i = 0; i < msps.size(); ++i) {
    cfg.msps.push_back(parse_msp(msps[i], "/msps/" + std::to_string(i)));
  }
  if (top.has("mpec")) cfg.mpec = parse_mpec(top.raw("mpec"), "/mpec");
  if (top.has("booking_factor")) {
    cfg.booking_factor = top.number("booking_factor", 0.0);
  }
  if (top.has("path_cap")) {
    cfg.path_cap = static_cast<std::size_t>(
        std::max(0, top.integer("path_cap", 100000)));
  }
  return cfg;
}

json to_json(const ScenarioConfig& cfg) {
  json doc;
  doc["name"] = cfg.name;
  doc["locations"] = cfg.locations;
  doc["congestion_groups"] = cfg.congestion_groups;

  doc["modes"] = json::array();
  for (const auto& m : cfg.modes) {
    doc["modes"].push_back({{"id", m.id},
                            {"congestion_group", opt_string(m.congestion_group)},
                            {"owner_msp", opt_string(m.owner_msp)},
                            {"private_vehicle", m.private_vehicle}});
  }

  doc["subscriptions"] = json::array();
  for (const auto& s : cfg.subscriptions) {
    json j = {{"id", s.id},
              {"kind", s.kind == Subscription::Kind::Mode ? "mode" : "package"},
              {"daily_cost", s.daily_cost},
              {"daily_subsidy", s.daily_subsidy},
              {"member_modes", s.member_modes}};
    if (s.must_use_mode) j["usage_rule"] = {{"must_use_mode", *s.must_use_mode}};
    doc["subscriptions"].push_back(j);
  }

  doc["classes"] = json::array();
  for (const auto& k : cfg.classes) {
    json uc = json::object();
    for (const auto& [mode, c] : k.unit_costs) {
      uc[mode] = {{"access", c.access},
                  {"wait", c.wait},
                  {"main", c.main},
                  {"park", c.park}};
    }
    doc["classes"].push_back({{"id", k.id},
                              {"trip_chain", k.trip_chain},
                              {"demand", k.demand},
                              {"allowed_modes", k.allowed_modes},
                              {"unit_costs", uc}});
  }

  doc["trip_links"] = json::array();
  for (const auto& t : cfg.trip_links) {
    json j = {{"from", t.from}, {"to", t.to}, {"length_km", t.length_km}};
    if (!t.modes.empty()) j["modes"] = t.modes;
    doc["trip_links"].push_back(j);
  }

  doc["cost_params"] = json::object();
  for (const auto& [mode, p] : cfg.cost_params) {
    json j = {{"fuel_per_km", p.fuel_per_km},
              {"fuel_paid_by_user", p.fuel_paid_by_user},
              {"tariff_per_km", p.tariff_per_km},
              {"tariff_per_hour", p.tariff_per_hour},
              {"fixed_fee", p.fixed_fee}};
    if (p.access) j["access"] = time_function_to_json(*p.access);
    if (p.wait) j["wait"] = time_function_to_json(*p.wait);
    if (p.main) j["main"] = time_function_to_json(*p.main);
    if (p.park) j["park"] = time_function_to_json(*p.park);
    if (p.egress) j["egress"] = time_function_to_json(*p.egress);
    doc["cost_params"][mode] = j;
  }

  doc["solver"] = solver_to_json(cfg.solver);
  doc["fleet"] = {{"default", cfg.fleet.default_value},
                  {"by_layer", cfg.fleet.by_layer},
                  {"by_link", cfg.fleet.by_link}};
  if (doc["fleet"]["by_layer"].is_null()) doc["fleet"]["by_layer"] = json::object();
  if (doc["fleet"]["by_link"].is_null()) doc["fleet"]["by_link"] = json::object();

  doc["msps"] = json::array();
  for (const auto& m : cfg.msps) {
    json components = json::array();
    for (const auto& [name, member] : kComponentNames) {
      if (m.components.*member) components.push_back(name);
    }
    json revenue = json::array();
    for (const auto& sr : m.subscription_revenue) {
      revenue.push_back({{"subscription", sr.subscription},
                         {"share", sr.share},
                         {"partner_fixed", sr.partner_fixed},
                         {"only_users_of_owned_links",
                          sr.only_users_of_owned_links}});
    }
    doc["msps"].push_back({{"id", m.id},
                           {"modes", m.modes},
                           {"lease_rate", m.lease_rate},
                           {"relocation_factor", m.relocation_factor},
                           {"vc_form", enum_name(kVcFormNames, m.vc_form)},
                           {"components", components},
                           {"subscription_revenue", revenue}});
  }

  if (cfg.mpec) {
    const auto& m = *cfg.mpec;
    json decision = {{"mode", m.decision_mode}};
    if (m.decision_context) decision["context"] = *m.decision_context;
    doc["mpec"] = {{"msp", m.msp},
                   {"decision", decision},
                   {"v_lower", m.v_lower},
                   {"v_upper", m.v_upper},
                   {"optimizer", enum_name(kOptimizerNames, m.optimizer)},
                   {"initial_step", m.initial_step},
                   {"min_step", m.min_step},
                   {"fd_step", m.fd_step},
                   {"outer_tol", m.outer_tol},
                   {"max_outer_iterations", m.max_outer_iterations},
                   {"multistart", m.multistart},
                   {"warm_start", m.warm_start},
                   {"shared_level", m.shared_level}};
  }
  if (cfg.booking_factor) doc["booking_factor"] = *cfg.booking_factor;
  doc["path_cap"] = cfg.path_cap;

  for (const auto& pointer : cfg.assumed_fields) {
    const json::json_pointer ptr(pointer);
    if (!doc.contains(ptr)) continue;
    doc[ptr] = json{{"value", doc[ptr]}, {"assumed", true}};
  }
  return doc;
}

std::vector<Diagnostic> validate_scenario(const ScenarioConfig& cfg) {
  std::vector<Diagnostic> out;
  auto error = [&](std::string path, std::string msg) {
    out.push_back({Diagnostic::Severity::Error, std::move(path), std::move(msg)});
  };
  auto warning = [&](std::string path, std::string msg) {
    out.push_back(
        {Diagnostic::Severity::Warning, std::move(path), std::move(msg)});
  };
  auto idx = [](const char* base, std::size_t i) {
    return std::string(base) + "/" + std::to_string(i);
  };
  auto has_location = [&](const std::string& id) {
    return std::find(cfg.locations.begin(), cfg.locations.end(), id) !=
           cfg.locations.end();
  };
  auto check_unique = [&](const std::vector<std::string>& ids,
                          const char* base) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!seen.insert(ids[i]).second) {
        error(idx(base, i), "duplicate id '" + ids[i] + "'");
      }
    }
  };

  if (cfg.locations.empty()) error("/locations", "no locations declared");
  check_unique(cfg.locations, "/locations");
  check_unique(cfg.congestion_groups, "/congestion_groups");

  std::vector<std::string> ids;
  for (const auto& m : cfg.modes) ids.push_back(m.id);
  check_unique(ids, "/modes");
  if (cfg.modes.empty()) error("/modes", "no modes declared");
  for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
    const auto& m = cfg.modes[i];
    if (m.congestion_group &&
        std::find(cfg.congestion_groups.begin(), cfg.congestion_groups.end(),
                  *m.congestion_group) == cfg.congestion_groups.end()) {
      error(idx("/modes", i) + "/congestion_group",
            "undefined congestion group '" + *m.congestion_group + "'");
    }
    if (m.owner_msp && !cfg.find_msp(*m.owner_msp)) {
      error(idx("/modes", i) + "/owner_msp",
            "undefined msp '" + *m.owner_msp + "'");
    }
    if (!cfg.cost_params.count(m.id)) {
      warning(idx("/modes", i), "mode '" + m.id + "' has no cost_params");
    }
  }

  ids.clear();
  for (const auto& s : cfg.subscriptions) ids.push_back(s.id);
  check_unique(ids, "/subscriptions");
  std::map<std::string, std::string> mode_owner_sub;
  for (std::size_t i = 0; i < cfg.subscriptions.size(); ++i) {
    const auto& s = cfg.subscriptions[i];
    const auto base = idx("/subscriptions", i);
    if (s.daily_cost < 0) error(base + "/daily_cost", "must be >= 0");
    if (s.daily_subsidy < 0) error(base + "/daily_subsidy", "must be >= 0");
    if (s.member_modes.empty()) {
      warning(base + "/member_modes", "subscription unlocks no mode");
    }
    for (std::size_t j = 0; j < s.member_modes.size(); ++j) {
      const auto& mode = s.member_modes[j];
      if (!cfg.find_mode(mode)) {
        error(base + "/member_modes/" + std::to_string(j),
              "undefined mode '" + mode + "'");
      }
      if (s.kind == Subscription::Kind::Mode) {
        auto [it, inserted] = mode_owner_sub.emplace(mode, s.id);
        if (!inserted) {
          error(base + "/member_modes/" + std::to_string(j),
                "mode '" + mode + "' already covered by subscription '" +
                    it->second + "'");
        }
      }
    }
    if (s.must_use_mode &&
        std::find(s.member_modes.begin(), s.member_modes.end(),
                  *s.must_use_mode) == s.member_modes.end()) {
      error(base + "/usage_rule/must_use_mode",
            "mode '" + *s.must_use_mode + "' is not a member mode");
    }
  }

  for (std::size_t i = 0; i < cfg.trip_links.size(); ++i) {
    const auto& t = cfg.trip_links[i];
    const auto base = idx("/trip_links", i);
    if (!has_location(t.from)) error(base + "/from", "undefined location '" + t.from + "'");
    if (!has_location(t.to)) error(base + "/to", "undefined location '" + t.to + "'");
    if (!(t.length_km > 0)) error(base + "/length_km", "must be > 0");
    for (std::size_t j = 0; j < t.modes.size(); ++j) {
      if (!cfg.find_mode(t.modes[j])) {
        error(base + "/modes/" + std::to_string(j),
              "undefined mode '" + t.modes[j] + "'");
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (cfg.trip_links[j].from == t.from && cfg.trip_links[j].to == t.to) {
        error(base, "duplicate trip link " + t.from + "->" + t.to);
      }
    }
  }

  ids.clear();
  for (const auto& k : cfg.classes) ids.push_back(k.id);
  check_unique(ids, "/classes");
  if (cfg.classes.empty()) error("/classes", "no user classes declared");
  for (std::size_t i = 0; i < cfg.classes.size(); ++i) {
    const auto& k = cfg.classes[i];
    const auto base = idx("/classes", i);
    if (k.trip_chain.size() < 3) {
      error(base + "/trip_chain", "trip chain needs at least 3 locations");
    } else if (k.trip_chain.front() != k.trip_chain.back()) {
      error(base + "/trip_chain", "trip chain is not a closed tour");
    }
    for (std::size_t j = 0; j < k.trip_chain.size(); ++j) {
      if (!has_location(k.trip_chain[j])) {
        error(base + "/trip_chain/" + std::to_string(j),
              "undefined location '" + k.trip_chain[j] + "'");
      }
      if (j > 0 && k.trip_chain[j] == k.trip_chain[j - 1]) {
        error(base + "/trip_chain/" + std::to_string(j),
              "consecutive locations must differ");
      } else if (j > 0 &&
                 !cfg.find_trip_link(k.trip_chain[j - 1], k.trip_chain[j])) {
        error(base + "/trip_chain/" + std::to_string(j),
              "no trip link " + k.trip_chain[j - 1] + "->" + k.trip_chain[j]);
      }
    }
    if (!(k.demand >= 0)) error(base + "/demand", "must be >= 0");
    if (k.allowed_modes.empty()) error(base + "/allowed_modes", "empty");
    for (std::size_t j = 0; j < k.allowed_modes.size(); ++j) {
      if (!cfg.find_mode(k.allowed_modes[j])) {
        error(base + "/allowed_modes/" + std::to_string(j),
              "undefined mode '" + k.allowed_modes[j] + "'");
      }
    }
    for (const auto& [mode, c] : k.unit_costs) {
      const auto p = base + "/unit_costs/" + mode;
      if (!cfg.find_mode(mode)) error(p, "undefined mode '" + mode + "'");
      if (c.access < 0 || c.wait < 0 || c.main < 0 || c.park < 0) {
        error(p, "unit costs must be >= 0");
      }
    }
  }

  for (const auto& [mode, p] : cfg.cost_params) {
    const auto base = "/cost_params/" + mode;
    if (!cfg.find_mode(mode)) error(base, "undefined mode '" + mode + "'");
    if (p.fuel_per_km < 0 || p.tariff_per_km < 0 || p.tariff_per_hour < 0 ||
        p.fixed_fee < 0) {
      error(base, "monetary parameters must be >= 0");
    }
    const std::pair<const char*, const std::optional<TimeFunction>*> comps[] = {
        {"access", &p.access}, {"wait", &p.wait}, {"main", &p.main},
        {"park", &p.park},     {"egress", &p.egress}};
    for (const auto& [name, tf] : comps) {
      if (!*tf) continue;
      const auto tp = base + "/" + name;
      if ((*tf)->t0 < 0) error(tp + "/t0", "must be >= 0");
      if ((*tf)->alpha < 0) error(tp + "/alpha", "must be >= 0");
      if ((*tf)->beta < 1) error(tp + "/beta", "must be >= 1");
      if ((*tf)->capacity.kind == CapacitySource::Kind::Fixed &&
          !((*tf)->capacity.value > 0)) {
        error(tp + "/capacity", "must be > 0");
      }
      if ((*tf)->alpha > 0 &&
          (*tf)->capacity.kind == CapacitySource::Kind::None) {
        warning(tp, "alpha > 0 without capacity: treated as constant");
      }
    }
  }

  const auto& s = cfg.solver;
  if (!(s.psi > 0 && s.psi < 1)) error("/solver/psi", "must lie in (0, 1)");
  if (!(s.gap_tolerance > 0)) error("/solver/gap_tolerance", "must be > 0");
  if (!(s.step_tolerance > 0)) error("/solver/step_tolerance", "must be > 0");
  if (s.max_iterations <= 0) error("/solver/max_iterations", "must be > 0");
  if (s.initial_flow == SolverSettings::InitialFlow::Given &&
      s.given_flow.empty()) {
    error("/solver/given_flow", "required when initial_flow is 'given'");
  }

  if (!(cfg.fleet.default_value >= kFleetEpsilon)) {
    error("/fleet/default", "must be >= fleet epsilon");
  }
  for (const auto& [key, v] : cfg.fleet.by_layer) {
    if (!(v >= kFleetEpsilon)) error("/fleet/by_layer/" + key, "must be >= fleet epsilon");
    const auto mode = key.substr(0, key.find('@'));
    if (!cfg.find_mode(mode)) error("/fleet/by_layer/" + key, "undefined mode '" + mode + "'");
  }
  for (const auto& [key, v] : cfg.fleet.by_link) {
    if (!(v >= kFleetEpsilon)) error("/fleet/by_link/" + key, "must be >= fleet epsilon");
  }

  ids.clear();
  for (const auto& m : cfg.msps) ids.push_back(m.id);
  check_unique(ids, "/msps");
  for (std::size_t i = 0; i < cfg.msps.size(); ++i) {
    const auto& m = cfg.msps[i];
    const auto base = idx("/msps", i);
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
      if (!cfg.find_mode(m.modes[j])) {
        error(base + "/modes/" + std::to_string(j),
              "undefined mode '" + m.modes[j] + "'");
      }
    }
    if (m.lease_rate < 0) error(base + "/lease_rate", "must be >= 0");
    if (m.relocation_factor < 0) error(base + "/relocation_factor", "must be >= 0");
    for (std::size_t j = 0; j < m.subscription_revenue.size(); ++j) {
      const auto& sr = m.subscription_revenue[j];
      const auto p = base + "/subscription_revenue/" + std::to_string(j);
      if (!cfg.find_subscription(sr.subscription)) {
        error(p + "/subscription",
              "undefined subscription '" + sr.subscription + "'");
      }
      if (sr.share < 0) error(p + "/share", "must be >= 0");
    }
  }

  if (cfg.mpec) {
    const auto& m = *cfg.mpec;
    const auto* msp = cfg.find_msp(m.msp);
    if (!msp) {
      error("/mpec/msp", "undefined msp '" + m.msp + "'");
    } else if (std::find(msp->modes.begin(), msp->modes.end(),
                         m.decision_mode) == msp->modes.end()) {
      error("/mpec/decision/mode",
            "mode '" + m.decision_mode + "' is not operated by msp '" + m.msp + "'");
    }
    if (m.decision_context && *m.decision_context != "base") {
      const auto* sub = cfg.find_subscription(*m.decision_context);
      if (!sub || sub->kind != Subscription::Kind::Package) {
        error("/mpec/decision/context",
              "context must be 'base' or a package subscription");
      }
    }
    auto it = cfg.cost_params.find(m.decision_mode);
    bool has_fleet = false;
    if (it != cfg.cost_params.end()) {
      for (const auto* tf : {&it->second.access, &it->second.wait,
                             &it->second.main, &it->second.park,
                             &it->second.egress}) {
        if (*tf && (*tf)->uses_fleet()) has_fleet = true;
      }
    }
    if (!has_fleet) {
      error("/mpec/decision/mode",
            "mode '" + m.decision_mode + "' has no fleet-dependent component");
    }
    if (!(m.v_lower >= kFleetEpsilon)) error("/mpec/v_lower", "must be >= fleet epsilon");
    if (!(m.v_lower < m.v_upper)) error("/mpec/v_upper", "must exceed v_lower");
    if (!(m.fd_step > 0)) error("/mpec/fd_step", "must be > 0");
    if (!(m.initial_step > 0 && m.initial_step <= 1)) {
      error("/mpec/initial_step", "must lie in (0, 1]");
    }
    if (!(m.min_step > 0)) error("/mpec/min_step", "must be > 0");
    if (m.max_outer_iterations <= 0) error("/mpec/max_outer_iterations", "must be > 0");
    if (m.multistart.empty()) error("/mpec/multistart", "needs at least one start");
    for (std::size_t j = 0; j < m.multistart.size(); ++j) {
      const auto& st = m.multistart[j];
      if (st != "lower" && st != "mid" && st != "upper") {
        char* end = nullptr;
        std::strtod(st.c_str(), &end);
        if (end == st.c_str() || *end != '\0') {
          error("/mpec/multistart/" + std::to_string(j),
                "expected lower, mid, upper or a number");
        }
      }
    }
  }

  if (cfg.booking_factor) {
    warning("/booking_factor", "booking factor is parsed but unused");
  }
  if (cfg.path_cap == 0) error("/path_cap", "must be > 0");
  return out;
}

ScenarioConfig load_scenario_json(const json& doc) {
  ScenarioConfig cfg = parse_scenario(doc);
  const auto diagnostics = validate_scenario(cfg);
  std::ostringstream msg;
  std::string first_path;
  int errors = 0;
  for (const auto& d : diagnostics) {
    if (d.severity != Diagnostic::Severity::Error) continue;
    if (errors++ == 0) {
      first_path = d.path;
      msg << d.message;
    } else {
      msg << "; " << d.path << ": " << d.message;
    }
  }
  if (errors > 0) throw ValidationError(first_path, msg.str());
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::ios_base::failure("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return load_scenario_json(doc);
}

}  // namespace mmeq
