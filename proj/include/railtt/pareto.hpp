#ifndef RAILTT_PARETO_HPP
#define RAILTT_PARETO_HPP

// Epsilon-constraint sweeps: the train count is fixed per cell and AWT is
// minimised for each capacity level, giving one train-count/AWT frontier
// per level plus ASD and ALF surfaces over the whole grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "railtt/detail/parallel.hpp"
#include "railtt/metrics.hpp"
#include "railtt/optimizer.hpp"

namespace railtt {

enum class SweepMode { fixed_global_capacity, fixed_per_train_capacity };

struct SweepSpec {
  SweepMode mode = SweepMode::fixed_global_capacity;
  std::vector<int> capacity_levels;  // passengers, or wagons per train
  std::vector<int> train_counts;
  OptimizationProblem base;          // line, demand, carriage size, seed, search options
  std::optional<double> budget_seconds;                    // shared by all cells
  std::map<std::pair<int, int>, double> cell_budget;       // (level, count) overrides
};

struct ParetoPoint {
  int capacity_level = 0;
  int train_count = 0;
  int wagons = 0;  // total over the active trains
  double awt = 0.0;
  double asd = 0.0, alf = 0.0, avlf = 0.0, ahlf = 0.0;  // percent
  std::string solution_ref;
  bool dominated = false;         // within its capacity curve
  bool pooled_dominated = false;  // against every point of the sweep

  bool operator==(const ParetoPoint&) const = default;
};

struct FailedCell {
  int capacity_level = 0;
  int train_count = 0;
  std::string reason;
};

struct SurfaceGrid {
  std::vector<int> capacity_levels;           // rows
  std::vector<int> train_counts;              // columns
  std::vector<std::vector<double>> asd, alf;  // NaN where the cell failed
  std::vector<std::vector<bool>> failed;
};

struct SweepResult {
  std::vector<ParetoPoint> points;  // by capacity level, then train count
  std::vector<Solution> solutions;  // parallel to points
  std::vector<FailedCell> failed;
  SurfaceGrid grid;
};

inline std::string cell_ref(int level, int count) {
  return "c" + std::to_string(level) + "_n" + std::to_string(count);
}

/// Total wagons of a global capacity level; levels below one carriage are
/// rejected.
inline int wagons_for_capacity(int passengers, double capacity_per_carriage) {
  const int w = static_cast<int>(std::floor(passengers / capacity_per_carriage + 1e-9));
  if (w < 1) {
    throw std::invalid_argument("capacity " + std::to_string(passengers) + " holds no full carriage");
  }
  return w;
}

inline void check_spec(const SweepSpec& spec) {
  if (spec.capacity_levels.empty() || spec.train_counts.empty()) {
    throw std::invalid_argument("sweep needs at least one capacity level and one train count");
  }
  for (int c : spec.capacity_levels)
    if (c < 1) throw std::invalid_argument("capacity levels must be positive");
  for (int n : spec.train_counts)
    if (n < 1) throw std::invalid_argument("train counts must be at least 1");
  const int bound = train_slots(spec.base);
  for (int n : spec.train_counts) {
    if (n > bound) {
      throw std::invalid_argument("train count " + std::to_string(n) + " exceeds the train bound " +
                                  std::to_string(bound));
    }
  }
}

// Marks points beaten in both train count and AWT, one strictly.
inline void flag_dominated(std::vector<ParetoPoint*> curve, bool ParetoPoint::*flag) {
  for (auto* p : curve) {
    p->*flag = false;
    for (const auto* q : curve) {
      if (q == p) continue;
      const bool weak = q->train_count <= p->train_count && q->awt <= p->awt;
      const bool strict = q->train_count < p->train_count || q->awt < p->awt;
      if (weak && strict) {
        p->*flag = true;
        break;
      }
    }
  }
}

/// One optimizer run per (capacity level, train count) cell. Cells of a
/// level run in ascending train count and share a session so each is
/// warm-started from the one below; levels run in parallel.
inline SweepResult sweep(const SweepSpec& spec) {
  check_spec(spec);
  std::vector<int> counts = spec.train_counts;
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  const auto& levels = spec.capacity_levels;
  const double cells = static_cast<double>(levels.size() * counts.size());

  struct Cell {
    std::optional<ParetoPoint> point;
    std::optional<Solution> solution;
    std::string error;
  };
  std::vector<std::vector<Cell>> out(levels.size(), std::vector<Cell>(counts.size()));
  const int workers = std::max(1, spec.base.workers);
  const int inner = static_cast<int>(levels.size()) >= workers ? 1 : workers;

  detail::parallel_for(levels.size(), workers, [&](std::size_t li) {
    OptimizationProblem p = spec.base;
    p.workers = inner;
    p.fixed_train_count.reset();
    std::optional<OptimizerSession> session;
    std::string level_error;
    try {
      if (spec.mode == SweepMode::fixed_global_capacity) {
        p.capacity_mode = CapacityMode::global_capacity;
        p.capacity_value = wagons_for_capacity(levels[li], p.capacity_per_carriage);
      } else {
        p.capacity_mode = CapacityMode::per_train_carriages;
        p.capacity_value = levels[li];
      }
      session.emplace(p);
    } catch (const std::exception& e) {
      level_error = e.what();
    }
    for (std::size_t ci = 0; ci < counts.size(); ++ci) {
      auto& cell = out[li][ci];
      if (!session) {
        cell.error = level_error;
        continue;
      }
      const int n = counts[ci];
      try {
        auto budget = spec.budget_seconds ? *spec.budget_seconds / cells : p.search.budget_seconds;
        if (auto it = spec.cell_budget.find({levels[li], n}); it != spec.cell_budget.end()) budget = it->second;
        session->set_budget_seconds(budget);
        const auto wagons = wagon_split(session->problem(), n);
        auto r = session->solve(wagons, std::span<const int>(counts.data(), ci));
        Solution sol = session->assemble(wagons, *r);
        sol.stats.explored_patterns = {activation_pattern(n, static_cast<int>(sol.timetable.size()))};
        const auto m = summarize(sol.flow, sol.timetable, p.line, sol.awt);
        ParetoPoint pt;
        pt.capacity_level = levels[li];
        pt.train_count = n;
        for (int w : wagons) pt.wagons += w;
        pt.awt = sol.awt.total_awt;
        pt.asd = m.asd;
        pt.alf = m.alf;
        pt.avlf = m.avlf;
        pt.ahlf = m.ahlf;
        pt.solution_ref = cell_ref(levels[li], n);
        cell.point = pt;
        cell.solution = std::move(sol);
      } catch (const InfeasibleError& e) {
        cell.error = e.what();
      } catch (const std::invalid_argument& e) {
        cell.error = e.what();
      }
    }
  });

  SweepResult res;
  auto& g = res.grid;
  g.capacity_levels = levels;
  g.train_counts = counts;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  g.asd.assign(levels.size(), std::vector<double>(counts.size(), nan));
  g.alf = g.asd;
  g.failed.assign(levels.size(), std::vector<bool>(counts.size(), false));
  for (std::size_t li = 0; li < levels.size(); ++li) {
    for (std::size_t ci = 0; ci < counts.size(); ++ci) {
      auto& cell = out[li][ci];
      if (!cell.point) {
        g.failed[li][ci] = true;
        res.failed.push_back({levels[li], counts[ci], cell.error});
        continue;
      }
      g.asd[li][ci] = cell.point->asd;
      g.alf[li][ci] = cell.point->alf;
      res.points.push_back(*cell.point);
      res.solutions.push_back(std::move(*cell.solution));
    }
  }

  std::vector<ParetoPoint*> all;
  for (auto& pt : res.points) all.push_back(&pt);
  flag_dominated(all, &ParetoPoint::pooled_dominated);
  for (int level : levels) {
    std::vector<ParetoPoint*> curve;
    for (auto& pt : res.points)
      if (pt.capacity_level == level) curve.push_back(&pt);
    flag_dominated(curve, &ParetoPoint::dominated);
  }
  return res;
}

struct CurveVertex {
  double capacity = 0.0;
  double trains = 0.0;

  bool operator==(const CurveVertex&) const = default;
};

using Polyline = std::vector<CurveVertex>;

/// Zero set of ASD - ALF by linear interpolation on each grid square,
/// joined into polylines. Squares touching a failed cell are skipped.
inline std::vector<Polyline> equilibrium_curve(const SurfaceGrid& grid) {
  const std::size_t rows = grid.capacity_levels.size(), cols = grid.train_counts.size();
  if (rows < 2 || cols < 2) throw std::invalid_argument("equilibrium curve needs at least a 2x2 grid");
  auto d = [&](std::size_t r, std::size_t c) { return grid.asd[r][c] - grid.alf[r][c]; };
  auto at = [&](std::size_t r, std::size_t c) {
    return CurveVertex{static_cast<double>(grid.capacity_levels[r]), static_cast<double>(grid.train_counts[c])};
  };
  auto cross = [&](std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
    const double a = d(r0, c0), b = d(r1, c1);
    const double t = a == b ? 0.0 : a / (a - b);
    const auto p = at(r0, c0), q = at(r1, c1);
    return CurveVertex{p.capacity + t * (q.capacity - p.capacity), p.trains + t * (q.trains - p.trains)};
  };

  std::vector<std::array<CurveVertex, 2>> segments;
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      // Corners counter-clockwise from (r, c).
      const std::array<std::pair<std::size_t, std::size_t>, 4> k{{{r, c}, {r + 1, c}, {r + 1, c + 1}, {r, c + 1}}};
      bool skip = false;
      for (auto [kr, kc] : k) skip = skip || !std::isfinite(d(kr, kc));
      if (skip) continue;
      std::vector<CurveVertex> hits;
      for (int e = 0; e < 4; ++e) {
        const auto [r0, c0] = k[e];
        const auto [r1, c1] = k[(e + 1) % 4];
        if ((d(r0, c0) >= 0.0) != (d(r1, c1) >= 0.0)) hits.push_back(cross(r0, c0, r1, c1));
      }
      if (hits.size() == 2) {
        segments.push_back({hits[0], hits[1]});
      } else if (hits.size() == 4) {
        // Saddle: the centre average decides which corners connect.
        const double centre = 0.25 * (d(r, c) + d(r + 1, c) + d(r + 1, c + 1) + d(r, c + 1));
        const bool first_positive = d(r, c) >= 0.0;
        if ((centre >= 0.0) == first_positive) {
          segments.push_back({hits[0], hits[1]});
          segments.push_back({hits[2], hits[3]});
        } else {
          segments.push_back({hits[3], hits[0]});
          segments.push_back({hits[1], hits[2]});
        }
      }
    }
  }

  std::vector<Polyline> lines;
  std::vector<bool> used(segments.size(), false);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (used[s]) continue;
    used[s] = true;
    Polyline line{segments[s][0], segments[s][1]};
    for (bool grew = true; grew;) {
      grew = false;
      for (std::size_t t = 0; t < segments.size(); ++t) {
        if (used[t]) continue;
        const auto& [a, b] = segments[t];
        if (a == line.back()) line.push_back(b);
        else if (b == line.back()) line.push_back(a);
        else if (b == line.front()) line.insert(line.begin(), a);
        else if (a == line.front()) line.insert(line.begin(), b);
        else continue;
        used[t] = grew = true;
      }
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace railtt

#endif  // RAILTT_PARETO_HPP
