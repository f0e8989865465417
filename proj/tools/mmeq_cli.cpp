// mmeq: command line front end.
//
// Exit codes: 0 ok, 1 invalid scenario or arguments, 2 solver did not
// converge, 3 I/O error or unknown flag. Diagnostics go to stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "mmeq/costlib.hpp"
#include "mmeq/mpec.hpp"
#include "mmeq/msp.hpp"
#include "mmeq/netmodel.hpp"
#include "mmeq/pathset.hpp"
#include "mmeq/report.hpp"
#include "mmeq/supernet.hpp"
#include "mmeq/ue.hpp"

#ifndef MMEQ_VERSION
#define MMEQ_VERSION "0.0.0"
#endif
#ifndef MMEQ_SCENARIO_DIR
#define MMEQ_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmeq;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kNotConverged = 2;
constexpr int kIo = 3;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

/// Records what produced a set of outputs. No timestamps: equal runs give
/// equal manifests.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args)
      : command_(std::move(command)), args_(std::move(args)) {}

  void scenario(const fs::path& path, const ScenarioConfig& cfg) {
    json s = {{"path", path.generic_string()},
              {"sha256", sha256_hex(read_file(path))},
              {"name", cfg.name}};
    const auto doc = to_json(cfg);
    s["solver"] = doc.at("solver");
    if (doc.contains("mpec")) s["mpec"] = doc.at("mpec");
    scenarios_.push_back(std::move(s));
  }
  void output(const fs::path& p) { outputs_.push_back(p.generic_string()); }

  void write(const fs::path& path) const {
    json m = {{"tool", "mmeq"},
              {"version", MMEQ_VERSION},
              {"command", command_},
              {"args", args_},
              {"scenarios", scenarios_},
              {"outputs", outputs_}};
    write_text(path, m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  json scenarios_ = json::array();
  std::vector<std::string> outputs_;
};

/// Writes to `path`, or stdout when it is empty.
void emit(const std::string& path, const std::string& text,
          Manifest* manifest = nullptr) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  write_text(path, text);
  if (manifest) manifest->output(path);
}

ScenarioConfig load(const std::string& path) {
  auto cfg = load_scenario(path);
  for (const auto& d : validate_scenario(cfg)) {
    if (d.severity == Diagnostic::Severity::Warning) {
      std::cerr << "warning: " << d.path << ": " << d.message << "\n";
    }
  }
  return cfg;
}

struct UeFlags {
  std::optional<double> psi, gap_tol, step_tol;
  std::optional<int> max_iter;
  bool require_both = false;

  void add(CLI::App* app) {
    app->add_option("--psi", psi, "projection step");
    app->add_option("--gap-tol", gap_tol, "relative gap tolerance");
    app->add_option("--step-tol", step_tol, "step tolerance");
    app->add_option("--max-iter", max_iter, "iteration cap");
    app->add_flag("--require-both", require_both,
                  "stop only when gap and step tolerances both hold");
  }
  void apply(SolverSettings& s) const {
    if (psi) s.psi = *psi;
    if (gap_tol) s.gap_tolerance = *gap_tol;
    if (step_tol) s.step_tolerance = *step_tol;
    if (max_iter) s.max_iterations = *max_iter;
    if (require_both) s.require_both = true;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// ---- reproduce --------------------------------------------------------

struct ReproduceContext {
  fs::path scenarios;
  fs::path out;
  unsigned jobs = 1;
  Manifest* manifest = nullptr;

  fs::path scenario(const std::string& file) const { return scenarios / file; }
  void write(const std::string& name, const std::string& text) const {
    emit((out / name).string(), text, manifest);
  }
};

std::vector<double> level_grid(const MpecConfig& m, double step) {
  std::vector<double> out;
  for (double v = m.v_lower; v <= m.v_upper + 1e-9; v += step) out.push_back(v);
  return out;
}

const ProfitCurvePoint& curve_peak(const std::vector<ProfitCurvePoint>& c) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i].profit.pr > c[best].profit.pr) best = i;
  }
  return c[best];
}

std::string summary_line(const std::string& label, const MpecResult& r) {
  return fmt::format("- {}: v* levels [{}], owned fleet {} vehicles, Pr* {} EUR/day, "
                     "lower level {}\n",
                     label, fmt::join(r.levels, ", "), format_number(r.fleet_total),
                     format_number(r.profit.pr),
                     r.reliable ? "converged" : "NOT converged");
}

int reproduce_ex1(const ReproduceContext& ctx) {
  const auto path = ctx.scenario("ex1.json");
  const auto cfg = load(path.string());
  ctx.manifest->scenario(path, cfg);
  MpecProblem problem(cfg);
  const auto res = solve_mpec(problem);
  ctx.write("mpec_result.json", mpec_result_json(problem, res).dump(2) + "\n");
  ctx.write("outer_trace.csv", outer_trace_csv(res.outer_trace));
  const auto curve = profit_curve(problem, level_grid(problem.mpec(), 1.0));
  ctx.write("profit_curve.csv", profit_curve_csv(curve));
  ctx.write("equilibrium_at_optimum.csv",
            equilibrium_csv(problem.network(), problem.path_set(), res.x_star));
  ctx.write("gap_trace_at_optimum.csv", gap_trace_csv(res.x_star));

  const auto v36 = apply_fleet_overrides(problem.network(), problem.base_fleet(),
                                         {"carsharing=36"});
  const auto at36 = problem.evaluate(v36);
  ctx.write("equilibrium_v36.csv",
            equilibrium_csv(problem.network(), problem.path_set(), at36.sol));
  ctx.write("link_flows_v36.csv",
            link_flows_csv(problem.network(), problem.model(), at36.sol, v36));
  ctx.write("gap_trace_v36.csv", gap_trace_csv(at36.sol));

  SweepOptions so;
  so.jobs = ctx.jobs;
  const std::vector<SweepAxis> axes{
      {"/cost_params/bus/wait/capacity", {100, 125, 150, 175, 200}}};
  const auto bus = profit_response_sweep(read_json_file(path), axes, so);
  ctx.write("bus_capacity_sweep.csv", sweep_csv(axes, bus));

  const auto& peak = curve_peak(curve);
  std::string s = "# Example 1\n\n";
  s += summary_line("MPEC", res);
  s += fmt::format("- Grid peak: level {} (owned fleet {}), Pr {} EUR/day\n",
                   format_number(peak.level), format_number(peak.fleet_total),
                   format_number(peak.profit.pr));
  s += fmt::format("- Reference optimum reported for this example: v = 36; "
                   "lower level at v = 36: {} iterations, gap {}\n",
                   at36.sol.iterations, format_number(at36.sol.gap));
  SweepRow shares;
  fill_shares(problem.network(), problem.path_set(), cfg, at36.sol, shares);
  s += "- Mode shares at v = 36:";
  for (const auto& [m, x] : shares.mode_share) s += fmt::format(" {} {:.4f}", m, x);
  s += "\n- Bus wait capacity sweep (capacity: max Pr):";
  for (const auto& r : bus) {
    s += fmt::format(" {}: {}", format_number(r.axis_values[0]), format_number(r.pr));
  }
  s += "\n";
  ctx.write("summary.md", s);
  std::cerr << s;
  return res.reliable ? kOk : kNotConverged;
}

int reproduce_ex1_separable(const ReproduceContext& ctx) {
  const auto path = ctx.scenario("ex1.json");
  const auto base_doc = read_json_file(path);
  ctx.manifest->scenario(path, load(path.string()));
  std::string s = "# Example 1, separable road split\n\n";
  bool ok = true;
  auto run = [&](const std::string& label, const json& doc) {
    MpecProblem problem(load_scenario_json(doc));
    const auto res = solve_mpec(problem);
    const auto curve = profit_curve(problem, level_grid(problem.mpec(), 1.0));
    ctx.write("profit_curve_" + label + ".csv", profit_curve_csv(curve));
    ctx.write("mpec_result_" + label + ".json",
              mpec_result_json(problem, res).dump(2) + "\n");
    s += summary_line(label, res);
    ok = ok && res.reliable;
  };
  run("nonseparable", base_doc);
  for (auto [car, sharing] : {std::pair{220.0, 30.0}, std::pair{210.0, 40.0}}) {
    run(fmt::format("separable_{}_{}", car, sharing),
        separable_split(base_doc, car, sharing));
  }
  ctx.write("summary.md", s);
  std::cerr << s;
  return ok ? kOk : kNotConverged;
}

int reproduce_ex2(const ReproduceContext& ctx) {
  const auto path = ctx.scenario("ex2.json");
  const auto cfg = load(path.string());
  ctx.manifest->scenario(path, cfg);
  const auto doc = read_json_file(path);
  std::string price_axis;
  for (std::size_t i = 0; i < cfg.subscriptions.size(); ++i) {
    if (cfg.subscriptions[i].kind == Subscription::Kind::Package) {
      price_axis = fmt::format("/subscriptions/{}/daily_cost", i);
    }
  }
  if (price_axis.empty()) throw std::invalid_argument("ex2 has no package");
  const std::vector<SweepAxis> axes{
      {"total_demand", parse_grid("500:900:100")},
      {price_axis, parse_grid("0.5:1.5:0.1")}};
  SweepOptions fixed;
  fixed.optimize = false;
  fixed.jobs = ctx.jobs;
  const auto split = profit_response_sweep(doc, axes, fixed);
  ctx.write("modal_split.csv", sweep_csv(axes, split));
  SweepOptions opt;
  opt.jobs = ctx.jobs;
  const auto prof = profit_response_sweep(doc, axes, opt);
  ctx.write("profit_sweep.csv", sweep_csv(axes, prof));

  std::string s = "# Example 2\n\n| demand | price | package share | car share | "
                  "optimized Pr |\n|---|---|---|---|---|\n";
  bool ok = true;
  for (std::size_t i = 0; i < prof.size(); ++i) {
    auto sp = split[i];
    auto pr = prof[i];
    s += fmt::format("| {} | {} | {:.4f} | {:.4f} | {} |\n",
                     format_number(sp.axis_values[0]),
                     format_number(sp.axis_values[1]),
                     sp.subscriber_share["pkg"], sp.mode_share["car"],
                     format_number(pr.pr));
    ok = ok && sp.reliable && pr.reliable;
  }
  ctx.write("summary.md", s);
  std::cerr << s;
  return ok ? kOk : kNotConverged;
}

int reproduce_ex3(const ReproduceContext& ctx) {
  std::vector<NamedScenario> runs;
  for (const char* f : {"ex3.json", "ex3_entrant.json"}) {
    const auto p = ctx.scenario(f);
    ctx.manifest->scenario(p, load(p.string()));
    runs.push_back({fs::path(f).stem().string(), read_json_file(p)});
  }
  for (auto& v : load_variants(ctx.scenario("ex3_variants.json"))) {
    runs.push_back({"entrant_" + v.name, std::move(v.doc)});
  }
  std::string s = "# Example 3\n\n";
  bool ok = true;
  for (const auto& r : runs) {
    MpecProblem problem(load_scenario_json(r.doc));
    const auto res = solve_mpec(problem);
    const auto curve = profit_curve(problem, level_grid(problem.mpec(), 1.0));
    ctx.write("profit_curve_" + r.name + ".csv", profit_curve_csv(curve));
    ctx.write("mpec_result_" + r.name + ".json",
              mpec_result_json(problem, res).dump(2) + "\n");
    s += summary_line(r.name, res);
    ok = ok && res.reliable;
  }
  ctx.write("summary.md", s);
  std::cerr << s;
  return ok ? kOk : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-modal trip-chain equilibrium and provider fleet optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MMEQ_VERSION);

  std::vector<std::string> raw_args(argv + 1, argv + argc);
  std::string scenario, out, trace, dot_out;
  std::vector<std::string> fleet;
  UeFlags ue_flags;

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("scenario,--scenario", scenario, "scenario JSON")->required();

  auto* dot = app.add_subcommand("export-dot", "write the supernetwork as Graphviz");
  dot->add_option("scenario,--scenario", scenario, "scenario JSON")->required();
  dot->add_option("--out", out, "output .dot (default stdout)");

  auto* paths = app.add_subcommand("paths", "list enumerated paths");
  paths->add_option("scenario,--scenario", scenario, "scenario JSON")->required();
  paths->add_option("--out", out, "output CSV (default stdout)");

  auto* ue = app.add_subcommand("solve-ue", "solve the user equilibrium at a fixed fleet");
  ue->add_option("--scenario", scenario, "scenario JSON")->required();
  ue->add_option("--fleet", fleet, "fleet override: v=N, mode=N, layer=N or service=N");
  ue_flags.add(ue);
  ue->add_option("--out", out, "equilibrium CSV (default stdout)");
  ue->add_option("--trace", trace, "gap trace CSV");
  std::string links_out;
  ue->add_option("--links", links_out, "link flow CSV");

  std::string msp_id;
  auto* prof = app.add_subcommand("profit", "provider profit at a fixed fleet");
  prof->add_option("--scenario", scenario, "scenario JSON")->required();
  prof->add_option("--fleet", fleet, "fleet override");
  prof->add_option("--msp", msp_id, "provider (default: the optimized one)");
  ue_flags.add(prof);
  prof->add_option("--out", out, "profit CSV (default stdout)");

  std::string optimizer, multistart;
  auto* mpec = app.add_subcommand("solve-mpec", "optimize the provider's fleet");
  mpec->add_option("--scenario", scenario, "scenario JSON")->required();
  mpec->add_option("--optimizer", optimizer, "pattern or quasi-newton")
      ->check(CLI::IsMember({"pattern", "quasi-newton"}));
  mpec->add_option("--multistart", multistart, "comma list: lower, mid, upper or numbers");
  ue_flags.add(mpec);
  mpec->add_option("--out", out, "result JSON (default stdout)");
  mpec->add_option("--trace", trace, "outer iteration CSV");

  std::string axis, grid, axis2, grid2;
  unsigned jobs = 1;
  bool ue_only = false;
  auto* sweep = app.add_subcommand("sweep", "profit and modal split over a parameter grid");
  sweep->add_option("--scenario", scenario, "scenario JSON")->required();
  sweep->add_option("--axis", axis, "JSON pointer or total_demand")->required();
  sweep->add_option("--grid", grid, "a:b:step or a,b,c")->required();
  sweep->add_option("--axis2", axis2, "second axis");
  sweep->add_option("--grid2", grid2, "second grid");
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--ue-only", ue_only, "equilibrium at the configured fleet, no optimization");
  sweep->add_option("--fleet", fleet, "fleet override (with --ue-only)");
  sweep->add_option("--out", out, "sweep CSV (default stdout)");

  std::string example, out_dir = "report", scenarios_dir;
  auto* repro = app.add_subcommand("reproduce", "run a worked example end to end");
  repro->add_option("example", example, "ex1, ex1-separable, ex2 or ex3")
      ->required()
      ->check(CLI::IsMember({"ex1", "ex1-separable", "ex2", "ex3"}));
  repro->add_option("--out-dir", out_dir, "report directory");
  repro->add_option("--scenarios", scenarios_dir, "golden scenario directory");
  repro->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kIo;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Manifest manifest(command, raw_args);
  auto finish = [&](int code) {
    if (!out.empty() && out != "-" && command != "validate") {
      manifest.write(out + ".manifest.json");
    }
    return code;
  };

  try {
    if (*validate) {
      const auto cfg = parse_scenario(read_json_file(scenario));
      int code = kOk;
      for (const auto& d : validate_scenario(cfg)) {
        std::cerr << to_string(d.severity) << ": " << d.path << ": " << d.message
                  << "\n";
        if (d.severity == Diagnostic::Severity::Error) code = kInvalid;
      }
      if (code == kOk) {
        const auto net = build_supernetwork(cfg);
        const auto ps = build_path_set(net, cfg);
        std::cerr << fmt::format("ok: {} links, {} paths, {} service links\n",
                                 net.links().size(), ps.size(),
                                 net.services().size());
      }
      return code;
    }

    const auto cfg_path = scenario;
    std::optional<ScenarioConfig> cfg;
    if (!cfg_path.empty()) {
      cfg = load(cfg_path);
      manifest.scenario(cfg_path, *cfg);
    }

    if (*dot) {
      emit(out, to_dot(build_supernetwork(*cfg)), &manifest);
      return finish(kOk);
    }
    if (*paths) {
      const auto net = build_supernetwork(*cfg);
      emit(out, paths_csv(net, build_path_set(net, *cfg)), &manifest);
      return finish(kOk);
    }
    if (*ue || *prof) {
      ue_flags.apply(cfg->solver);
      const auto net = build_supernetwork(*cfg);
      const auto ps = build_path_set(net, *cfg);
      const CostModel model(*cfg, net, ps);
      const auto v = apply_fleet_overrides(net, default_fleet(*cfg, net), fleet);
      const auto sol = solve_ue(model, v, cfg->solver);
      if (*ue) {
        emit(out, equilibrium_csv(net, ps, sol), &manifest);
        if (!trace.empty()) emit(trace, gap_trace_csv(sol), &manifest);
        if (!links_out.empty()) {
          emit(links_out, link_flows_csv(net, model, sol, v), &manifest);
        }
      } else {
        if (msp_id.empty()) {
          if (cfg->mpec) msp_id = cfg->mpec->msp;
          else if (!cfg->msps.empty()) msp_id = cfg->msps.front().id;
          else throw std::invalid_argument("scenario has no msp");
        }
        const auto spec = compile_msp(*cfg, net, ps, msp_id);
        emit(out, profit_csv(msp_id, profit(spec, model, sol, v), owned_fleet(spec, v)),
             &manifest);
      }
      std::cerr << fmt::format("relative gap {} after {} iterations{}\n",
                               format_number(sol.gap), sol.iterations,
                               sol.converged ? "" : " (NOT converged)");
      return finish(sol.converged ? kOk : kNotConverged);
    }
    if (*mpec) {
      ue_flags.apply(cfg->solver);
      if (!cfg->mpec) throw std::invalid_argument("scenario has no mpec block");
      if (optimizer == "pattern") {
        cfg->mpec->optimizer = MpecConfig::Optimizer::PatternSearch;
      } else if (optimizer == "quasi-newton") {
        cfg->mpec->optimizer = MpecConfig::Optimizer::FiniteDifferenceQuasiNewton;
      }
      if (!multistart.empty()) cfg->mpec->multistart = split_list(multistart);
      MpecProblem problem(*cfg);
      const auto res = solve_mpec(problem);
      emit(out, mpec_result_json(problem, res).dump(2) + "\n", &manifest);
      if (!trace.empty()) emit(trace, outer_trace_csv(res.outer_trace), &manifest);
      std::cerr << summary_line(cfg->name, res);
      return finish(res.reliable ? kOk : kNotConverged);
    }
    if (*sweep) {
      std::vector<SweepAxis> axes{{axis, parse_grid(grid)}};
      if (!axis2.empty()) {
        if (grid2.empty()) throw std::invalid_argument("--axis2 needs --grid2");
        axes.push_back({axis2, parse_grid(grid2)});
      }
      SweepOptions so;
      so.optimize = !ue_only;
      so.jobs = jobs;
      so.fleet_overrides = fleet;
      const auto rows = profit_response_sweep(read_json_file(cfg_path), axes, so);
      emit(out, sweep_csv(axes, rows), &manifest);
      bool all = true;
      for (const auto& r : rows) all = all && r.reliable;
      return finish(all ? kOk : kNotConverged);
    }
    if (*repro) {
      ReproduceContext ctx;
      ctx.scenarios = scenarios_dir.empty()
                          ? (fs::exists("scenarios/ex1.json") ? fs::path("scenarios")
                                                              : fs::path(MMEQ_SCENARIO_DIR))
                          : fs::path(scenarios_dir);
      ctx.out = fs::path(out_dir) / example;
      ctx.jobs = jobs;
      ctx.manifest = &manifest;
      int code = kOk;
      if (example == "ex1") code = reproduce_ex1(ctx);
      else if (example == "ex1-separable") code = reproduce_ex1_separable(ctx);
      else if (example == "ex2") code = reproduce_ex2(ctx);
      else code = reproduce_ex3(ctx);
      manifest.write(ctx.out / "manifest.json");
      return code;
    }
  } catch (const NotConverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const AllStartsFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
