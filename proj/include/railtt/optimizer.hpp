#ifndef RAILTT_OPTIMIZER_HPP
#define RAILTT_OPTIMIZER_HPP

// Average-waiting-time minimisation. The outer level enumerates how many
// trains run and how the carriages are split between them; activation
// patterns are always a prefix of ones. The inner level is a multi-start
// coordinate pattern search over origin departures that evaluates each
// candidate through the passenger-flow fixed point.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "railtt/demand_model.hpp"
#include "railtt/detail/parallel.hpp"
#include "railtt/line_model.hpp"
#include "railtt/passenger_flow.hpp"

namespace railtt {

enum class CapacityMode { global_capacity, per_train_carriages };
enum class StoppingMode { all_stops, optimize_stops };

struct SearchOptions {
  double initial_step = 8.0;
  double min_step = 0.05;
  double sweep_tolerance = 1e-4;  // AWT minutes gained by a sweep at the finest step
  int jitters = 4;                // random perturbations of each structured seed
  double budget_seconds = 600.0;  // wall-clock safety net per structure
  long max_evaluations = 400000;  // deterministic cap per start
  bool search_speeds = false;
};

struct OptimizationProblem {
  Line line;
  ODDemandMatrix od;
  CapacityMode capacity_mode = CapacityMode::global_capacity;
  int capacity_value = 1;  // total wagons, or wagons per train
  double capacity_per_carriage = 40.0;
  std::optional<int> fixed_train_count;
  StoppingMode stopping = StoppingMode::all_stops;
  UnservedCost unserved_cost = UnservedCost::until_deactivation;
  std::uint64_t seed = 0;
  int workers = 1;
  SearchOptions search;
};

struct SolverStats {
  long evaluations = 0;
  int restarts = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::vector<std::vector<bool>> explored_patterns;  // activation flags per explored structure
};

struct Solution {
  Timetable timetable;
  FlowState flow;
  AwtBreakdown awt;
  SolverStats stats;
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(Constraint binding, const std::string& what) : std::runtime_error(what), binding_(binding) {}
  Constraint binding() const noexcept { return binding_; }

 private:
  Constraint binding_;
};

/// Splits wagons as evenly as possible, larger trains first.
inline std::vector<TrainConfig> choose_capacity_split(int total_wagons, int train_count,
                                                      double capacity_per_carriage) {
  if (train_count < 1) throw std::invalid_argument("train count must be at least 1");
  if (total_wagons < train_count) {
    throw std::invalid_argument("cannot split " + std::to_string(total_wagons) + " wagons over " +
                                std::to_string(train_count) + " trains");
  }
  std::vector<TrainConfig> out;
  const int base = total_wagons / train_count;
  const int extra = total_wagons % train_count;
  for (int k = 0; k < train_count; ++k) out.push_back({base + (k < extra ? 1 : 0), capacity_per_carriage});
  return out;
}

inline std::vector<std::vector<TrainConfig>> choose_capacity_split(int total_wagons, std::span<const int> train_counts,
                                                                   double capacity_per_carriage) {
  std::vector<std::vector<TrainConfig>> out;
  for (int n : train_counts) out.push_back(choose_capacity_split(total_wagons, n, capacity_per_carriage));
  return out;
}

inline std::vector<int> wagon_split(const OptimizationProblem& p, int train_count) {
  if (train_count < 1) throw std::invalid_argument("train count must be at least 1");
  if (p.capacity_mode == CapacityMode::per_train_carriages) {
    if (p.capacity_value < 1) throw std::invalid_argument("wagons per train must be at least 1");
    return std::vector<int>(train_count, p.capacity_value);
  }
  std::vector<int> out;
  for (const auto& c : choose_capacity_split(p.capacity_value, train_count, p.capacity_per_carriage))
    out.push_back(c.carriages);
  return out;
}

/// Train slots: heaviest cut demand over one carriage.
inline int train_slots(const OptimizationProblem& p) {
  return std::max(1, train_count_upper_bound(p.od, p.line, p.capacity_per_carriage));
}

namespace detail {

struct Candidate {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  double stop_minutes = 0.0;
  std::vector<double> departures;  // realised origin departures, sorted
  std::vector<double> unit_times;  // per segment, shared by all trains
};

// Objective, then total dwell, then earliest departures.
inline bool better(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return false;
  const double tol = 1e-12 * (1.0 + std::abs(b.objective));
  if (a.objective < b.objective - tol) return true;
  if (a.objective > b.objective + tol) return false;
  if (a.stop_minutes != b.stop_minutes) return a.stop_minutes < b.stop_minutes;
  return a.departures < b.departures;
}

class StructureEvaluator {
 public:
  StructureEvaluator(const OptimizationProblem& p, std::vector<int> wagons)
      : p_(p), wagons_(std::move(wagons)), stops_(wagons_.size(), std::vector<bool>(p.line.n_stations(), true)) {
    for (const auto& seg : p.line.segments) unit_times_.push_back(seg.min_unit_time);
  }

  int trains() const noexcept { return static_cast<int>(wagons_.size()); }
  const std::vector<int>& wagons() const noexcept { return wagons_; }
  std::vector<std::vector<bool>>& stops() noexcept { return stops_; }
  const std::vector<std::vector<bool>>& stops() const noexcept { return stops_; }
  std::vector<double>& unit_times() noexcept { return unit_times_; }

  Timetable build(std::vector<double> departures) const {
    std::sort(departures.begin(), departures.end());
    Timetable tt;
    for (int k = 0; k < trains(); ++k) {
      auto tr = make_train(p_.line, std::clamp(departures[k], 0.0, p_.line.horizon),
                           TrainConfig{wagons_[k], p_.capacity_per_carriage});
      tr.stops = stops_[k];
      tr.unit_time = unit_times_;
      tt.trains.push_back(std::move(tr));
    }
    return tt;
  }

  Realization realize_departures(const std::vector<double>& departures) const {
    RealizeOptions ro;
    ro.repair_headways = true;
    return realize(p_.od, build(departures), p_.line, ro);
  }

  Candidate evaluate(const std::vector<double>& departures) {
    ++evaluations;
    Candidate c;
    auto r = realize_departures(departures);
    c.unit_times = unit_times_;
    for (const auto& tr : r.timetable.trains) {
      c.departures.push_back(tr.departure[0]);
      for (double st : tr.stop_time) c.stop_minutes += st;
    }
    c.feasible = c.departures.empty() || c.departures.back() <= p_.line.horizon + kFeasibilityTolerance;
    if (c.feasible) c.objective = awt(r.flow, r.timetable, p_.od, p_.line.horizon, p_.unserved_cost).total_awt;
    return c;
  }

  long evaluations = 0;

 private:
  const OptimizationProblem& p_;
  std::vector<int> wagons_;
  std::vector<std::vector<bool>> stops_;
  std::vector<double> unit_times_;
};

using Clock = std::chrono::steady_clock;

// Coordinate pattern search on origin departures (and optionally the
// shared unit travel times), halving the step when a sweep stalls.
inline Candidate coordinate_search(StructureEvaluator& ev, const OptimizationProblem& p, std::vector<double> start,
                                   Clock::time_point deadline, bool* converged) {
  const auto& opt = p.search;
  const double horizon = p.line.horizon;
  Candidate best = ev.evaluate(start);
  if (!best.feasible) {
    if (converged) *converged = false;
    return best;
  }
  const long eval_cap = ev.evaluations + opt.max_evaluations;
  double step = opt.initial_step;
  bool done = false;
  while (!done) {
    double gain = 0.0;
    bool moved = false;
    for (int k = 0; k < ev.trains(); ++k) {
      for (double dir : {-1.0, 1.0}) {
        auto trial = best.departures;
        trial[k] = std::clamp(trial[k] + dir * step, 0.0, horizon);
        if (trial[k] == best.departures[k]) continue;
        Candidate c = ev.evaluate(trial);
        if (better(c, best) && c.objective < best.objective) {
          gain += best.objective - c.objective;
          best = std::move(c);
          moved = true;
          break;
        }
      }
    }
    if (opt.search_speeds) {
      for (std::size_t seg = 0; seg < ev.unit_times().size(); ++seg) {
        const auto& bounds = p.line.segments[seg];
        const double unit_step = (bounds.max_unit_time - bounds.min_unit_time) * step / opt.initial_step;
        if (!(unit_step > 0.0)) continue;
        for (double dir : {-1.0, 1.0}) {
          const double old = ev.unit_times()[seg];
          ev.unit_times()[seg] = std::clamp(old + dir * unit_step, bounds.min_unit_time, bounds.max_unit_time);
          if (ev.unit_times()[seg] == old) continue;
          Candidate c = ev.evaluate(best.departures);
          if (better(c, best) && c.objective < best.objective) {
            gain += best.objective - c.objective;
            best = std::move(c);
            moved = true;
            break;
          }
          ev.unit_times()[seg] = old;
        }
      }
    }
    // Single moves stalled at the finest step: move one train and re-fit a
    // neighbour with a finer 1-D search. This follows the kinks where a
    // capacity limit ties two trains together.
    if (!moved && step <= opt.min_step) {
      for (int k = 0; k < ev.trains() && !moved; ++k) {
        for (int j : {k + 1, k - 1}) {
          if (j < 0 || j >= ev.trains() || moved) continue;
          for (double dir : {-1.0, 1.0}) {
            auto trial = best.departures;
            trial[k] = std::clamp(trial[k] + dir * step, 0.0, horizon);
            if (trial[k] == best.departures[k]) continue;
            Candidate local = ev.evaluate(trial);
            for (double h = step; h >= opt.min_step / 16.0; h /= 2.0) {
              for (double d : {-1.0, 1.0}) {
                auto t2 = local.feasible ? local.departures : trial;
                t2[j] = std::clamp(t2[j] + d * h, 0.0, horizon);
                Candidate c = ev.evaluate(t2);
                if (better(c, local)) {
                  local = std::move(c);
                  break;
                }
              }
            }
            if (better(local, best) && local.objective < best.objective) {
              gain += best.objective - local.objective;
              best = std::move(local);
              moved = true;
              break;
            }
          }
        }
      }
    }
    const bool at_floor = step <= opt.min_step;
    if (!moved || (at_floor && gain < opt.sweep_tolerance)) {
      if (at_floor) {
        done = true;
        if (converged) *converged = true;
      } else {
        step = std::max(step / 2.0, opt.min_step);
      }
    }
    if (!done && (ev.evaluations >= eval_cap || Clock::now() >= deadline)) {
      if (converged) *converged = false;
      done = true;
    }
  }
  ev.unit_times() = best.unit_times;
  return best;
}

// Departure times at which the aggregate demand reaches equal shares;
// `offset` 1 puts the last train at the end of the demand, 0.5 centres
// each train on its share.
inline std::vector<double> quantile_seed(const OptimizationProblem& p, int n, double offset = 1.0) {
  const double horizon = p.line.horizon;
  const double total = p.od.total_interval(0.0, horizon);
  std::vector<double> out(n, horizon);
  if (!(total > 0.0)) return out;
  for (int k = 0; k < n; ++k) {
    const double target = total * (k + offset) / n;
    double lo = 0.0, hi = horizon;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (p.od.total_interval(0.0, mid) < target ? lo : hi) = mid;
    }
    out[k] = hi;
  }
  return out;
}

inline std::vector<double> even_seed(double horizon, int n) {
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = horizon * (k + 1) / n;
  return out;
}

// Adds trains one at a time at the middle of the widest gap in [0, T].
inline std::vector<double> extend_seed(std::vector<double> departures, int n, double horizon) {
  std::sort(departures.begin(), departures.end());
  while (static_cast<int>(departures.size()) < n) {
    double best_gap = -1.0, at = horizon;
    double prev = 0.0;
    for (std::size_t q = 0; q <= departures.size(); ++q) {
      const double next = q < departures.size() ? departures[q] : horizon;
      if (next - prev > best_gap) {
        best_gap = next - prev;
        at = q < departures.size() ? 0.5 * (prev + next) : next;
        if (q == departures.size() && departures.empty()) at = horizon;
      }
      prev = next;
    }
    departures.insert(std::upper_bound(departures.begin(), departures.end(), at), at);
  }
  departures.resize(n);
  return departures;
}

// Replaces each of `departures` by a tight group of trains around it, so a
// timetable for fewer, larger trains carries over to more, smaller ones.
inline std::vector<double> split_seed(const OptimizationProblem& p, std::vector<double> departures, int n) {
  std::sort(departures.begin(), departures.end());
  const int m = static_cast<int>(departures.size());
  if (m == 0) return even_seed(p.line.horizon, n);
  const double gap = p.line.max_headway() + p.line.min_stop;
  std::vector<double> out;
  for (int q = 0; q < m; ++q) {
    const int group = n / m + (q < n % m ? 1 : 0);
    for (int r = 0; r < group; ++r)
      out.push_back(std::clamp(departures[q] + (r - 0.5 * (group - 1)) * gap, 0.0, p.line.horizon));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void check_packing(const OptimizationProblem& p, int n) {
  double needed = 0.0;
  for (int k = 0; k + 1 < n; ++k) needed += p.line.headway(0, k) + p.line.min_stop;
  if (needed > p.line.horizon + kFeasibilityTolerance) {
    throw InfeasibleError(Constraint::headway,
                          "infeasible: constraint 6 (safety headway) cannot fit " + std::to_string(n) +
                              " trains in [0, " + std::to_string(p.line.horizon) + "]; minimum spread " +
                              std::to_string(needed) + " min");
  }
}

struct StructureResult {
  Candidate best;
  std::vector<std::vector<bool>> stops;
  SolverStats stats;
};

// Greedy stop skipping: try the lightest (train, station) pairs first and
// keep a skip when it lowers the objective. Terminals always stop.
inline void optimize_stops(StructureEvaluator& ev, const OptimizationProblem& p, Candidate& best) {
  const int s = p.line.n_stations();
  auto r = ev.realize_departures(best.departures);
  struct Pair {
    double mass;
    int train, station;
  };
  std::vector<Pair> order;
  for (int q = 0; q < r.flow.trains(); ++q)
    for (int i = 1; i + 1 < s; ++i)
      order.push_back({r.flow.boarding_at_origin(q, i) + r.flow.alighting_at_destination(q, i), q, i});
  std::stable_sort(order.begin(), order.end(), [](const Pair& a, const Pair& b) { return a.mass < b.mass; });
  for (const auto& c : order) {
    ev.stops()[c.train][c.station] = false;
    Candidate trial = ev.evaluate(best.departures);
    if (better(trial, best) && trial.objective < best.objective) {
      best = std::move(trial);
    } else {
      ev.stops()[c.train][c.station] = true;
    }
  }
}

inline StructureResult solve_structure_from(const OptimizationProblem& p, const std::vector<int>& wagons,
                                            const std::vector<std::vector<double>>& starts) {
  const int n = static_cast<int>(wagons.size());
  check_packing(p, n);
  const auto t0 = Clock::now();
  const auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(
                                 std::chrono::duration<double>(std::max(0.0, p.search.budget_seconds)));

  std::vector<Candidate> results(starts.size());
  std::vector<char> conv(starts.size(), 0);
  std::vector<long> evals(starts.size(), 0);
  std::vector<std::vector<double>> speeds(starts.size());
  parallel_for(starts.size(), p.workers, [&](std::size_t q) {
    StructureEvaluator ev(p, wagons);
    bool c = false;
    results[q] = coordinate_search(ev, p, starts[q], deadline, &c);
    conv[q] = c;
    evals[q] = ev.evaluations;
  });

  StructureResult out;
  std::size_t pick = 0;
  for (std::size_t q = 1; q < results.size(); ++q)
    if (better(results[q], results[pick])) pick = q;
  out.best = results[pick];
  out.stats.converged = conv[pick] != 0;
  for (long e : evals) out.stats.evaluations += e;
  out.stats.restarts = static_cast<int>(starts.size());

  StructureEvaluator ev(p, wagons);
  if (!out.best.unit_times.empty()) ev.unit_times() = out.best.unit_times;
  if (p.stopping == StoppingMode::optimize_stops && out.best.feasible) {
    optimize_stops(ev, p, out.best);
    bool c = false;
    Candidate refined = coordinate_search(ev, p, out.best.departures, deadline, &c);
    if (better(refined, out.best)) {
      out.best = std::move(refined);
      out.stats.converged = c;
    }
  }
  out.stops = ev.stops();
  out.stats.evaluations += ev.evaluations;
  out.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!out.best.feasible) {
    throw InfeasibleError(Constraint::activation_window,
                          "infeasible: constraint 11 (activation window) violated; " + std::to_string(n) +
                              " trains cannot all depart within the horizon under the safety headway");
  }
  return out;
}

inline std::vector<std::vector<double>> structured_starts(const OptimizationProblem& p, int n,
                                                          std::uint64_t seed,
                                                          const std::vector<std::vector<double>>& warm) {
  const double horizon = p.line.horizon;
  std::vector<std::vector<double>> base{even_seed(horizon, n), quantile_seed(p, n), quantile_seed(p, n, 0.5)};
  std::vector<std::vector<double>> starts = warm;
  for (const auto& b : base) starts.push_back(b);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double spread = horizon / n;
  const int jitters = std::min(p.search.jitters * 4 / n, p.search.jitters);
  for (const auto& b : base) {
    for (int j = 0; j < jitters; ++j) {
      auto s = b;
      for (double& t : s) t = std::clamp(t + jitter(rng) * spread, 0.0, horizon);
      starts.push_back(std::move(s));
    }
  }
  return starts;
}

}  // namespace detail

/// Memoised structure solves. A structure is the wagon count of each active
/// train in departure order; its result depends only on that vector, the
/// problem and the seed, so equal structures reached from different sweeps
/// produce identical solutions.
class OptimizerSession {
 public:
  explicit OptimizerSession(OptimizationProblem problem) : p_(std::move(problem)) {
    p_.line.check();
    if (p_.od.n_stations() != p_.line.n_stations()) {
      throw std::invalid_argument("demand matrix station count does not match the line");
    }
    if (!(p_.capacity_per_carriage > 0.0)) throw std::invalid_argument("carriage capacity must be positive");
  }

  const OptimizationProblem& problem() const noexcept { return p_; }

  /// Cached results stay valid; only later solves see the new budget.
  void set_budget_seconds(double seconds) {
    std::lock_guard lock(mutex_);
    p_.search.budget_seconds = seconds;
  }

  /// Best departures for `wagons`, warm-started from the same total
  /// capacity split over the largest count in `chain` below this one.
  std::shared_ptr<const detail::StructureResult> solve(const std::vector<int>& wagons, std::span<const int> chain) {
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(wagons);
      if (it != cache_.end()) return it->second;
    }
    const int n = static_cast<int>(wagons.size());
    std::vector<std::vector<double>> warm;
    std::vector<int> lower;
    for (int c : chain)
      if (c < n) lower.push_back(c);
    std::sort(lower.begin(), lower.end());
    lower.erase(std::unique(lower.begin(), lower.end()), lower.end());
    if (!lower.empty()) {
      const int m = lower.back();
      const int total = std::accumulate(wagons.begin(), wagons.end(), 0);
      std::vector<int> merged;
      for (const auto& c : choose_capacity_split(total, m, p_.capacity_per_carriage)) merged.push_back(c.carriages);
      try {
        auto prev = solve(merged, std::span<const int>(lower.data(), lower.size() - 1));
        warm.push_back(detail::split_seed(p_, prev->best.departures, n));
        warm.push_back(detail::extend_seed(prev->best.departures, n, p_.line.horizon));
      } catch (const InfeasibleError&) {
      }
    }
    std::uint64_t seed = p_.seed;
    for (int w : wagons) seed = detail::mix_seed(seed, {static_cast<std::uint64_t>(w)});
    seed = detail::mix_seed(seed, {static_cast<std::uint64_t>(n)});
    auto starts = detail::structured_starts(p_, n, seed, warm);
    auto result = std::make_shared<const detail::StructureResult>(detail::solve_structure_from(p_, wagons, starts));
    std::lock_guard lock(mutex_);
    return cache_.emplace(wagons, std::move(result)).first->second;
  }

  /// Full solution for a structure, inactive slots appended after the
  /// active trains at the deactivation time 2T.
  Solution assemble(const std::vector<int>& wagons, const detail::StructureResult& r) const {
    detail::StructureEvaluator ev(p_, wagons);
    ev.stops() = r.stops;
    if (!r.best.unit_times.empty()) ev.unit_times() = r.best.unit_times;
    auto real = ev.realize_departures(r.best.departures);
    Solution sol;
    sol.timetable = std::move(real.timetable);
    const int slots = std::max(train_slots(p_), static_cast<int>(wagons.size()));
    for (int k = static_cast<int>(wagons.size()); k < slots; ++k) {
      auto tr = make_train(p_.line, 2.0 * p_.line.horizon, TrainConfig{0, p_.capacity_per_carriage}, false);
      sol.timetable.trains.push_back(std::move(tr));
    }
    sol.timetable = propagate_departures(std::move(sol.timetable), p_.line);
    sol.flow = std::move(real.flow);
    sol.awt = awt(sol.flow, sol.timetable, p_.od, p_.line.horizon, p_.unserved_cost);
    sol.stats = r.stats;
    return sol;
  }

 private:
  OptimizationProblem p_;
  std::mutex mutex_;
  std::map<std::vector<int>, std::shared_ptr<const detail::StructureResult>> cache_;
};

inline std::vector<bool> activation_pattern(int active, int slots) {
  std::vector<bool> d(std::max(active, slots), false);
  std::fill(d.begin(), d.begin() + active, true);
  return d;
}

/// Inner search only: a single start from `departures_seed` (repaired onto
/// the headway constraints), with the problem's stopping and speed options.
inline Solution solve_with_fixed_structure(const OptimizationProblem& problem, int active_count,
                                           const std::vector<double>& departures_seed) {
  OptimizerSession session(problem);
  const auto wagons = wagon_split(problem, active_count);
  if (static_cast<int>(departures_seed.size()) != active_count) {
    throw std::invalid_argument("seed must hold one departure per active train");
  }
  auto r = detail::solve_structure_from(session.problem(), wagons, {departures_seed});
  auto sol = session.assemble(wagons, r);
  sol.stats.explored_patterns.push_back(activation_pattern(active_count, sol.timetable.size()));
  return sol;
}

/// Minimises AWT. With a fixed train count only that structure is solved;
/// otherwise every count from 1 to the slot bound is tried and the best
/// kept, each count warm-started from the one below.
inline Solution optimize(const OptimizationProblem& problem) {
  const auto t0 = detail::Clock::now();
  OptimizerSession session(problem);
  const auto& p = session.problem();
  if (!(p.od.total_interval(0.0, p.line.horizon) > 0.0)) {
    throw std::invalid_argument("average waiting time undefined: zero total demand");
  }
  const int slots = train_slots(p);
  std::vector<int> counts;
  if (p.fixed_train_count) {
    const int n = *p.fixed_train_count;
    if (n < 1) throw std::invalid_argument("fixed train count must be at least 1");
    if (n > slots) {
      throw std::invalid_argument("fixed train count " + std::to_string(n) + " exceeds the train bound " +
                                  std::to_string(slots));
    }
    counts.push_back(n);
  } else {
    const int cap = p.capacity_mode == CapacityMode::global_capacity ? std::min(slots, p.capacity_value) : slots;
    for (int n = 1; n <= cap; ++n) counts.push_back(n);
  }

  std::optional<Solution> best;
  std::vector<std::vector<bool>> trace;
  long evaluations = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const auto wagons = wagon_split(p, counts[c]);
    std::shared_ptr<const detail::StructureResult> r;
    try {
      r = session.solve(wagons, std::span<const int>(counts.data(), c));
    } catch (const InfeasibleError&) {
      if (!best) throw;
      break;  // more trains cannot fit either
    }
    trace.push_back(activation_pattern(counts[c], std::max(slots, counts[c])));
    evaluations += r->stats.evaluations;
    if (!best || r->best.objective < best->awt.total_awt) best = session.assemble(wagons, *r);
  }
  if (!best) throw InfeasibleError(Constraint::headway, "infeasible: no train count admits a feasible timetable");
  best->stats.explored_patterns = std::move(trace);
  best->stats.evaluations = evaluations;
  best->stats.wall_seconds = std::chrono::duration<double>(detail::Clock::now() - t0).count();
  return *best;
}

}  // namespace railtt

#endif  // RAILTT_OPTIMIZER_HPP
