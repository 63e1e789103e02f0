#ifndef RAILTT_CLI_HPP
#define RAILTT_CLI_HPP

// Subcommands fit, optimize, evaluate, sweep and plot, driven by one JSON
// configuration file. Relative paths in the file resolve against its
// directory; command-line flags override the matching config entries.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include "railtt/io.hpp"
#include "railtt/metrics.hpp"
#include "railtt/optimizer.hpp"
#include "railtt/pareto.hpp"
#include "railtt/svg.hpp"

namespace railtt::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kInputError = 1, kInfeasible = 2, kPartialSweep = 3 };

struct FitSettings {
  std::vector<fs::path> samples;
  int max_terms = 3;
  FitOptions options;
};

struct SweepSettings {
  SweepMode mode = SweepMode::fixed_global_capacity;
  std::vector<int> capacity_levels;
  std::vector<int> train_counts;
  std::map<std::pair<int, int>, double> cell_budget;
};

struct PlotSettings {
  std::optional<fs::path> timetable;
  std::optional<fs::path> points;
  svg::TimeSpaceOptions time_space;
  std::string level_unit = "passengers";
};

struct RunConfig {
  std::string subcommand;
  fs::path config_path;
  fs::path out_dir = "out";
  std::uint64_t seed = 0;
  std::optional<double> budget_seconds;
  bool strict = false;
  int workers = 1;

  std::optional<Line> line;
  std::optional<fs::path> demand;
  FitSettings fit;
  OptimizationProblem problem;  // line and demand filled in on use
  std::optional<fs::path> evaluate_timetable;
  SweepSettings sweep;
  PlotSettings plot;
};

namespace detail {

inline const std::set<std::string> kTopKeys{"schema_version", "seed", "workers", "budget_seconds", "out_dir",
                                            "strict", "line", "demand", "fit", "optimize", "evaluate",
                                            "sweep", "plot"};

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw io::InputError(section + " must be an object");
  for (const auto& [key, v] : j.items())
    if (!allowed.contains(key)) throw io::InputError("unknown key '" + key + "' in " + section);
}

inline fs::path resolve(const fs::path& base, const json& v) {
  fs::path p = v.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

inline CapacityMode capacity_mode(const std::string& s) {
  if (s == "global") return CapacityMode::global_capacity;
  if (s == "per_train") return CapacityMode::per_train_carriages;
  throw io::InputError("capacity_mode must be 'global' or 'per_train', got '" + s + "'");
}

inline void read_search(const json& j, SearchOptions& s) {
  check_keys(j, {"initial_step", "min_step", "sweep_tolerance", "jitters", "max_evaluations", "search_speeds"},
             "optimize.search");
  s.initial_step = j.value("initial_step", s.initial_step);
  s.min_step = j.value("min_step", s.min_step);
  s.sweep_tolerance = j.value("sweep_tolerance", s.sweep_tolerance);
  s.jitters = j.value("jitters", s.jitters);
  s.max_evaluations = j.value("max_evaluations", s.max_evaluations);
  s.search_speeds = j.value("search_speeds", s.search_speeds);
  if (!(s.min_step > 0.0) || !(s.initial_step >= s.min_step)) {
    throw io::InputError("optimize.search needs 0 < min_step <= initial_step");
  }
  if (s.jitters < 0 || s.max_evaluations < 1) throw io::InputError("optimize.search counts must be positive");
}

inline void read_optimize(const json& j, OptimizationProblem& p) {
  check_keys(j, {"capacity_mode", "capacity_value", "capacity_per_carriage", "fixed_train_count", "stopping",
                 "unserved_cost", "search"},
             "optimize");
  if (j.contains("capacity_mode")) p.capacity_mode = capacity_mode(j["capacity_mode"].get<std::string>());
  p.capacity_value = j.value("capacity_value", p.capacity_value);
  p.capacity_per_carriage = j.value("capacity_per_carriage", p.capacity_per_carriage);
  if (p.capacity_value < 1) throw io::InputError("optimize.capacity_value must be at least 1");
  if (!(p.capacity_per_carriage > 0.0)) throw io::InputError("optimize.capacity_per_carriage must be positive");
  if (j.contains("fixed_train_count") && !j["fixed_train_count"].is_null()) {
    const int n = j["fixed_train_count"].get<int>();
    if (n < 1) throw io::InputError("optimize.fixed_train_count must be at least 1, got " + std::to_string(n));
    p.fixed_train_count = n;
  }
  if (j.contains("stopping")) {
    const auto s = j["stopping"].get<std::string>();
    if (s == "all_stops") p.stopping = StoppingMode::all_stops;
    else if (s == "optimize_stops") p.stopping = StoppingMode::optimize_stops;
    else throw io::InputError("optimize.stopping must be 'all_stops' or 'optimize_stops'");
  }
  if (j.contains("unserved_cost")) {
    const auto s = j["unserved_cost"].get<std::string>();
    if (s == "until_deactivation") p.unserved_cost = UnservedCost::until_deactivation;
    else if (s == "none") p.unserved_cost = UnservedCost::none;
    else throw io::InputError("optimize.unserved_cost must be 'until_deactivation' or 'none'");
  }
  if (j.contains("search")) read_search(j["search"], p.search);
}

inline void read_sweep(const json& j, SweepSettings& s) {
  check_keys(j, {"mode", "capacity_levels", "train_counts", "cell_budget"}, "sweep");
  if (j.contains("mode")) {
    const auto m = j["mode"].get<std::string>();
    if (m == "global") s.mode = SweepMode::fixed_global_capacity;
    else if (m == "per_train") s.mode = SweepMode::fixed_per_train_capacity;
    else throw io::InputError("sweep.mode must be 'global' or 'per_train'");
  }
  s.capacity_levels = j.value("capacity_levels", std::vector<int>{});
  s.train_counts = j.value("train_counts", std::vector<int>{});
  for (const auto& c : j.value("cell_budget", json::array()))
    s.cell_budget[{c.at("capacity_level").get<int>(), c.at("trains").get<int>()}] = c.at("seconds").get<double>();
}

inline void read_plot(const json& j, const fs::path& base, PlotSettings& p) {
  check_keys(j, {"timetable", "points", "demand_overlay", "overlay_pairs", "t0", "t1", "level_unit"}, "plot");
  if (j.contains("timetable")) p.timetable = resolve(base, j["timetable"]);
  if (j.contains("points")) p.points = resolve(base, j["points"]);
  p.time_space.demand_overlay = j.value("demand_overlay", true);
  for (const auto& pr : j.value("overlay_pairs", json::array()))
    p.time_space.overlay_pairs.emplace_back(pr.at(0).get<int>() - 1, pr.at(1).get<int>() - 1);
  p.time_space.t0 = j.value("t0", 0.0);
  if (j.contains("t1")) p.time_space.t1 = j["t1"].get<double>();
  p.level_unit = j.value("level_unit", p.level_unit);
}

}  // namespace detail

/// Parses a configuration file. Flags given on the command line are
/// applied afterwards by the caller.
inline RunConfig load_config(const fs::path& path) {
  RunConfig c;
  c.config_path = path;
  const json j = io::parse_json(path);
  const fs::path base = path.parent_path();
  try {
    detail::check_keys(j, detail::kTopKeys, path.string());
    if (!j.contains("schema_version")) throw io::InputError("missing schema_version");
    if (j["schema_version"].get<int>() != io::kSchemaVersion) {
      throw io::InputError("unsupported schema_version " + j["schema_version"].dump());
    }
    c.seed = j.value("seed", std::uint64_t{0});
    c.workers = j.value("workers", 1);
    if (j.contains("budget_seconds")) c.budget_seconds = j["budget_seconds"].get<double>();
    if (j.contains("out_dir")) c.out_dir = detail::resolve(base, j["out_dir"]);
    c.strict = j.value("strict", false);
    if (j.contains("line")) {
      const auto& l = j["line"];
      c.line = l.is_string() ? io::line_from_json(io::parse_json(detail::resolve(base, l)), l.get<std::string>())
                             : io::line_from_json(l, path.string());
    }
    if (j.contains("demand")) c.demand = detail::resolve(base, j["demand"]);
    if (j.contains("fit")) {
      const auto& f = j["fit"];
      detail::check_keys(f, {"samples", "max_terms", "starts", "max_iterations", "stationarity_tolerance"}, "fit");
      for (const auto& s : f.value("samples", json::array())) c.fit.samples.push_back(detail::resolve(base, s));
      c.fit.max_terms = f.value("max_terms", c.fit.max_terms);
      c.fit.options.starts = f.value("starts", c.fit.options.starts);
      c.fit.options.max_iterations = f.value("max_iterations", c.fit.options.max_iterations);
      c.fit.options.stationarity_tolerance = f.value("stationarity_tolerance", c.fit.options.stationarity_tolerance);
      if (c.fit.max_terms < 1) throw io::InputError("fit.max_terms must be at least 1");
    }
    if (j.contains("optimize")) detail::read_optimize(j["optimize"], c.problem);
    if (j.contains("evaluate")) {
      detail::check_keys(j["evaluate"], {"timetable"}, "evaluate");
      if (j["evaluate"].contains("timetable")) c.evaluate_timetable = detail::resolve(base, j["evaluate"]["timetable"]);
    }
    if (j.contains("sweep")) detail::read_sweep(j["sweep"], c.sweep);
    if (j.contains("plot")) detail::read_plot(j["plot"], base, c.plot);
  } catch (const json::exception& e) {
    throw io::InputError(path.string() + ": " + e.what());
  } catch (const io::InputError& e) {
    throw io::InputError(path.string() + ": " + e.what());
  }
  if (c.workers < 1) throw io::InputError(path.string() + ": workers must be at least 1");
  return c;
}

namespace detail {

inline const Line& need_line(const RunConfig& c) {
  if (!c.line) throw io::InputError(c.config_path.string() + ": this subcommand needs a line");
  return *c.line;
}

inline ODDemandMatrix need_demand(const RunConfig& c) {
  if (!c.demand) throw io::InputError(c.config_path.string() + ": this subcommand needs a demand matrix");
  auto od = io::load_matrix(*c.demand);
  if (od.n_stations() != need_line(c).n_stations()) {
    throw io::InputError(c.demand->string() + ": demand covers " + std::to_string(od.n_stations()) +
                         " stations but the line has " + std::to_string(need_line(c).n_stations()));
  }
  return od;
}

inline OptimizationProblem problem(const RunConfig& c) {
  OptimizationProblem p = c.problem;
  p.line = need_line(c);
  p.od = need_demand(c);
  p.seed = c.seed;
  p.workers = c.workers;
  if (c.budget_seconds) p.search.budget_seconds = *c.budget_seconds;
  return p;
}

inline void write_solution_files(const fs::path& dir, const Timetable& tt, const FlowState& flow,
                                 const TimetableMetrics& m, const AwtBreakdown& a) {
  io::write_file(dir / "timetable.csv", io::timetable_csv(tt));
  io::save_flow(dir / "flow", flow);
  io::write_file(dir / "occupancy.csv", io::occupancy_csv(flow));
  io::write_file(dir / "metrics.csv", io::metrics_report(m, a));
  io::write_file(dir / "train_metrics.csv", io::train_metrics_csv(m));
}

}  // namespace detail

inline int run_fit(const RunConfig& c, std::ostream& err) {
  const Line& line = detail::need_line(c);
  if (c.fit.samples.empty()) throw io::InputError(c.config_path.string() + ": fit.samples lists no files");
  std::vector<DemandSampleSeries> series;
  for (const auto& path : c.fit.samples) {
    auto load = io::load_samples(path);
    for (const auto& d : load.diagnostics) fmt::print(err, "{}:{}: skipped: {}\n", path.string(), d.line, d.message);
    for (auto& s : load.series) series.push_back(std::move(s));
  }
  FitOptions opt = c.fit.options;
  opt.seed = c.seed;
  MatrixFit fit;
  try {
    fit = fit_od_matrix(series, line.n_stations(), c.fit.max_terms, line.horizon, opt, c.workers);
  } catch (const std::invalid_argument& e) {
    throw io::InputError(e.what());
  }
  io::save_matrix(c.out_dir / "matrix.json", fit.matrix);
  io::write_file(c.out_dir / "fit_report.csv", io::fit_report_csv(fit.report));
  for (const auto& [i, j] : fit.report.missing) fmt::print(err, "no samples for pair ({},{}); demand set to zero\n", i + 1, j + 1);
  if (!fit.report.all_converged()) {
    for (const auto& f : fit.report.fits)
      if (!f.report.converged) fmt::print(err, "pair ({},{}) did not converge\n", f.origin + 1, f.destination + 1);
    if (c.strict) return kInputError;
  }
  return kOk;
}

inline int run_optimize(const RunConfig& c, std::ostream&) {
  const auto p = detail::problem(c);
  const auto sol = optimize(p);
  const auto m = summarize(sol.flow, sol.timetable, p.line, sol.awt);
  detail::write_solution_files(c.out_dir, sol.timetable, sol.flow, m, sol.awt);
  io::write_file(c.out_dir / "solver_stats.txt", io::solver_stats(sol.stats));
  return kOk;
}

inline int run_evaluate(const RunConfig& c, std::ostream& err) {
  const Line& line = detail::need_line(c);
  const auto od = detail::need_demand(c);
  if (!c.evaluate_timetable) throw io::InputError(c.config_path.string() + ": evaluate.timetable is not set");
  const auto tt = io::load_timetable(*c.evaluate_timetable);
  const auto report = validate(tt, line);
  if (!report.feasible()) {
    for (const auto& v : report.violations)
      fmt::print(err, "violates ({}) train {} station {} by {}\n", constraint_id(v.constraint), v.train + 1,
                 v.station + 1, v.magnitude);
    return kInfeasible;
  }
  const auto flow = load_passengers(od, tt, line);
  const auto a = awt(flow, tt, od, line.horizon, c.problem.unserved_cost);
  detail::write_solution_files(c.out_dir, tt, flow, summarize(flow, tt, line, a), a);
  return kOk;
}

inline int run_sweep(const RunConfig& c, std::ostream& err) {
  SweepSpec spec;
  spec.mode = c.sweep.mode;
  spec.capacity_levels = c.sweep.capacity_levels;
  spec.train_counts = c.sweep.train_counts;
  spec.base = detail::problem(c);
  spec.budget_seconds = c.budget_seconds;
  spec.cell_budget = c.sweep.cell_budget;
  SweepResult r;
  try {
    r = sweep(spec);
  } catch (const std::invalid_argument& e) {
    throw io::InputError(c.config_path.string() + ": sweep: " + e.what());
  }
  const auto& out = c.out_dir;
  io::write_file(out / "points.csv", io::points_csv(r.points));
  io::write_file(out / "table2.csv", io::table2_report(r.points));
  io::write_file(out / "failed_cells.csv", io::failed_cells_csv(r.failed));
  io::write_file(out / "surface_asd.csv", io::surface_text(r.grid, r.grid.asd));
  io::write_file(out / "surface_alf.csv", io::surface_text(r.grid, r.grid.alf));
  std::vector<Polyline> curve;
  if (r.grid.capacity_levels.size() >= 2 && r.grid.train_counts.size() >= 2) curve = equilibrium_curve(r.grid);
  io::write_file(out / "equilibrium.csv", io::curve_csv(curve));
  const auto unit = spec.mode == SweepMode::fixed_global_capacity ? "passengers" : "wagons per train";
  io::write_file(out / "pareto.svg", svg::render_pareto(r.points, unit));
  for (std::size_t n = 0; n < r.points.size(); ++n)
    io::write_file(out / "solutions" / (r.points[n].solution_ref + ".csv"), io::timetable_csv(r.solutions[n].timetable));
  for (const auto& f : r.failed)
    fmt::print(err, "cell capacity {} trains {} failed: {}\n", f.capacity_level, f.train_count, f.reason);
  if (r.failed.empty()) return kOk;
  return r.points.empty() ? kInfeasible : kPartialSweep;
}

inline int run_plot(const RunConfig& c, std::ostream&) {
  if (!c.plot.timetable && !c.plot.points) {
    throw io::InputError(c.config_path.string() + ": plot needs plot.timetable or plot.points");
  }
  if (c.plot.timetable) {
    const Line& line = detail::need_line(c);
    const auto tt = io::load_timetable(*c.plot.timetable);
    std::optional<ODDemandMatrix> od;
    if (c.demand) od = detail::need_demand(c);
    io::write_file(c.out_dir / "time_space.svg",
                   svg::render_time_space(tt, line, od ? &*od : nullptr, c.plot.time_space));
    if (od) {
      const auto flow = load_passengers(*od, tt, line);
      const auto a = awt(flow, tt, *od, line.horizon, c.problem.unserved_cost);
      io::write_file(c.out_dir / "occupancy.svg", svg::render_occupancy(flow, line));
      io::write_file(c.out_dir / "load_factors.svg", svg::render_load_factors(summarize(flow, tt, line, a)));
    }
  }
  if (c.plot.points) {
    io::write_file(c.out_dir / "pareto.svg", svg::render_pareto(io::load_points(*c.plot.points), c.plot.level_unit));
  }
  return kOk;
}

/// Full command line, returning the process exit code.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Demand-adapted railway timetabling", "railtt"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  bool strict = false;
  app.add_option("--config", config, "configuration file")->required();
  app.add_option("--seed", seed, "random seed (default 0)");
  app.add_option("--budget-seconds", budget, "wall-clock budget per optimised structure");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--workers", workers, "parallel workers")->check(CLI::PositiveNumber);
  app.add_flag("--strict", strict, "fail when any demand fit does not converge");
  app.add_subcommand("fit", "fit sigmoid demand curves to cumulative samples");
  app.add_subcommand("optimize", "minimise average waiting time for one capacity");
  app.add_subcommand("evaluate", "flow and metrics for an existing timetable");
  app.add_subcommand("sweep", "capacity by train-count grid of optimised timetables");
  app.add_subcommand("plot", "time-space, occupancy and Pareto diagrams");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    auto c = load_config(config);
    c.subcommand = app.get_subcommands().front()->get_name();
    if (seed) c.seed = *seed;
    if (budget) c.budget_seconds = *budget;
    if (out_dir) c.out_dir = *out_dir;
    if (workers) c.workers = *workers;
    c.strict = c.strict || strict;
    if (c.subcommand == "fit") code = run_fit(c, err);
    else if (c.subcommand == "optimize") code = run_optimize(c, err);
    else if (c.subcommand == "evaluate") code = run_evaluate(c, err);
    else if (c.subcommand == "sweep") code = run_sweep(c, err);
    else code = run_plot(c, err);
  } catch (const io::InputError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  } catch (const InfeasibleError& e) {
    fmt::print(err, "infeasible: {}\n", e.what());
    return kInfeasible;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  }
  fmt::print(err, "elapsed {:.1f} s\n", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return code;
}

}  // namespace railtt::cli

#endif  // RAILTT_CLI_HPP
