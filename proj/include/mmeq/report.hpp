#pragma once

// Tidy CSV/JSON output and golden-scenario helpers shared by the command
// line tool and the acceptance run.
//
// CSV: comma separated, '.' decimal, LF line endings, header row with units.
// Numbers print in shortest round-trip form, so equal runs give equal bytes.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmeq/costlib.hpp"
#include "mmeq/mpec.hpp"
#include "mmeq/msp.hpp"
#include "mmeq/pathset.hpp"
#include "mmeq/supernet.hpp"
#include "mmeq/ue.hpp"

namespace mmeq {

std::string format_number(double v);

/// "a:b:step" (inclusive, tolerant to rounding) or "a,b,c".
std::vector<double> parse_grid(const std::string& spec);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes the whole string; throws std::ios_base::failure.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Sets each {"json-pointer": value} of `set`. Existing numbers keep an
/// {"value", "assumed"} wrapper; a missing last key is created.
nlohmann::json apply_overrides(nlohmann::json doc, const nlohmann::json& set);

struct NamedScenario {
  std::string name;
  nlohmann::json doc;
};

/// Reads {"base": file, "variants": [{"name", "set"}]}; `base` is resolved
/// next to the variants file.
std::vector<NamedScenario> load_variants(const std::filesystem::path& file);

/// Splits a shared road into two separate infrastructures: `car_mode` keeps
/// the congestion group with main capacity `car_capacity`, `sharing_mode`
/// leaves the group and gets main capacity `sharing_capacity`.
nlohmann::json separable_split(nlohmann::json doc, double car_capacity,
                               double sharing_capacity,
                               const std::string& car_mode = "car",
                               const std::string& sharing_mode = "carsharing");

/// Mode-layer labels of a path's mode links, joined by '|'.
std::string path_modes(const Supernetwork& net, const Path& p);

std::string paths_csv(const Supernetwork& net, const PathSet& ps);
std::string equilibrium_csv(const Supernetwork& net, const PathSet& ps,
                            const EquilibriumSolution& sol);
std::string link_flows_csv(const Supernetwork& net, const CostModel& model,
                           const EquilibriumSolution& sol,
                           const FleetVector& v);
std::string gap_trace_csv(const EquilibriumSolution& sol);
std::string profit_csv(const std::string& msp, const ProfitBreakdown& p,
                       double fleet_total);
std::string profit_curve_csv(const std::vector<ProfitCurvePoint>& points);
std::string outer_trace_csv(const std::vector<OuterTraceRow>& rows);
std::string sweep_csv(const std::vector<SweepAxis>& axes,
                      const std::vector<SweepRow>& rows);

nlohmann::json profit_json(const ProfitBreakdown& p);
nlohmann::json fleet_json(const FleetVector& v);
nlohmann::json mpec_result_json(const MpecProblem& problem,
                                const MpecResult& r);

}  // namespace mmeq
