#ifndef RAILTT_LINE_MODEL_HPP
#define RAILTT_LINE_MODEL_HPP

// Line topology, train configuration and timetables, plus the checks for
// every timetable constraint that does not involve passengers.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "railtt/demand_model.hpp"

namespace railtt {

/// Inactive trains depart station 1 in [2T, T + n T]; this is n.
inline constexpr int kDeactivationFactor = 2;

/// Absolute slack (minutes) tolerated by feasibility checks.
inline constexpr double kFeasibilityTolerance = 1e-9;

struct Segment {
  double length_km = 1.0;
  double min_unit_time = 1.0;  // minutes per km, fastest allowed running
  double max_unit_time = 1.0;  // minutes per km, slowest allowed running
  double accel_time = 0.0;
  double decel_time = 0.0;

  bool operator==(const Segment&) const = default;
};

struct Line {
  std::vector<std::string> station_names;
  std::vector<Segment> segments;  // segment i joins stations i and i+1
  double safety_headway = 0.0;    // default t_saf(i, k)
  std::map<std::pair<int, int>, double> headway_overrides;  // (station, train)
  double min_stop = 0.0;
  double max_stop = 0.0;
  double flow_rate = 0.0;  // minutes per boarding passenger
  double horizon = 1440.0;
  bool accel_decel = false;

  bool operator==(const Line&) const = default;

  int n_stations() const noexcept { return static_cast<int>(station_names.size()); }

  double headway(int station, int train) const {
    auto it = headway_overrides.find({station, train});
    return it == headway_overrides.end() ? safety_headway : it->second;
  }

  double max_headway() const {
    double h = safety_headway;
    for (const auto& [key, v] : headway_overrides) h = std::max(h, v);
    return h;
  }

  double total_length() const {
    double sum = 0.0;
    for (const auto& s : segments) sum += s.length_km;
    return sum;
  }

  /// Distance of station i from station 0.
  double distance_to(int station) const {
    double sum = 0.0;
    for (int i = 0; i < station; ++i) sum += segments[i].length_km;
    return sum;
  }

  void check() const {
    const int s = n_stations();
    if (s < 2) throw std::invalid_argument("line needs at least two stations");
    if (static_cast<int>(segments.size()) != s - 1) {
      throw std::invalid_argument("line needs exactly stations-1 segments");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& seg = segments[i];
      const auto where = " (segment " + std::to_string(i + 1) + ")";
      if (!(seg.length_km > 0.0)) throw std::invalid_argument("segment length must be positive" + where);
      if (!(seg.min_unit_time > 0.0) || !(seg.min_unit_time <= seg.max_unit_time)) {
        throw std::invalid_argument("unit travel time bounds must satisfy 0 < min <= max" + where);
      }
      if (seg.accel_time < 0.0 || seg.decel_time < 0.0) {
        throw std::invalid_argument("accel/decel times must be non-negative" + where);
      }
    }
    if (!(min_stop >= 0.0) || !(min_stop <= max_stop)) {
      throw std::invalid_argument("stop bounds must satisfy 0 <= min_stop <= max_stop");
    }
    if (!(safety_headway >= 0.0)) throw std::invalid_argument("safety headway must be non-negative");
    for (const auto& [key, v] : headway_overrides) {
      if (!(v >= 0.0)) throw std::invalid_argument("safety headway must be non-negative");
    }
    if (!(flow_rate >= 0.0)) throw std::invalid_argument("flow rate must be non-negative");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  }
};

struct TrainConfig {
  int carriages = 1;
  double capacity_per_carriage = 40.0;

  double capacity() const noexcept { return carriages * capacity_per_carriage; }

  bool operator==(const TrainConfig&) const = default;
};

struct Train {
  bool active = true;
  std::vector<bool> stops;         // per station
  std::vector<double> departure;   // per station, minutes
  std::vector<double> stop_time;   // per station, minutes
  std::vector<double> unit_time;   // per segment, minutes per km
  TrainConfig config;

  bool operator==(const Train&) const = default;
};

struct Timetable {
  std::vector<Train> trains;

  int size() const noexcept { return static_cast<int>(trains.size()); }

  std::vector<int> active_indices() const {
    std::vector<int> out;
    for (int k = 0; k < size(); ++k)
      if (trains[k].active) out.push_back(k);
    return out;
  }

  int active_count() const {
    return static_cast<int>(std::count_if(trains.begin(), trains.end(),
                                          [](const Train& t) { return t.active; }));
  }

  bool operator==(const Timetable&) const = default;
};

/// A train that stops everywhere at minimum dwell and runs at the fastest
/// allowed unit travel time. Departures are left for propagation.
inline Train make_train(const Line& line, double origin_departure, TrainConfig config, bool active = true) {
  const int s = line.n_stations();
  Train t;
  t.active = active;
  t.stops.assign(s, true);
  t.departure.assign(s, 0.0);
  t.departure[0] = origin_departure;
  t.stop_time.assign(s, line.min_stop);
  t.unit_time.resize(s - 1);
  for (int i = 0; i + 1 < s; ++i) t.unit_time[i] = line.segments[i].min_unit_time;
  t.config = config;
  return t;
}

/// Departure at station i+1 implied by the departure at station i.
inline double next_departure(const Train& train, const Line& line, int i) {
  const auto& seg = line.segments[i];
  double t = train.departure[i] + train.stop_time[i + 1] + seg.length_km * train.unit_time[i];
  if (line.accel_decel && train.stops[i + 1]) t += seg.accel_time + seg.decel_time;
  return t;
}

/// Fills downstream departures from each train's origin departure, stop
/// times and unit travel times. Stop times at skipped stations become 0.
inline Timetable propagate_departures(Timetable tt, const Line& line) {
  const int s = line.n_stations();
  for (auto& train : tt.trains) {
    if (static_cast<int>(train.unit_time.size()) != s - 1 ||
        static_cast<int>(train.stops.size()) != s || static_cast<int>(train.stop_time.size()) != s ||
        train.departure.empty()) {
      throw std::invalid_argument("train vectors do not match the line's station count");
    }
    for (double v : train.unit_time) {
      if (!std::isfinite(v) || v <= 0.0) throw std::invalid_argument("unit travel times are not set");
    }
    train.departure.resize(s);
    for (int i = 0; i < s; ++i)
      if (!train.stops[i]) train.stop_time[i] = 0.0;
    for (int i = 0; i + 1 < s; ++i) train.departure[i + 1] = next_departure(train, line, i);
  }
  return tt;
}

enum class Constraint {
  propagation,        // (5)
  headway,            // (6)
  stop_bounds,        // (7)
  terminal_stops,     // (8)
  ordering,           // (10)
  activation_window,  // (11)
  speed_bounds,
  capacity,
};

inline std::string_view constraint_id(Constraint c) {
  switch (c) {
    case Constraint::propagation: return "5";
    case Constraint::headway: return "6";
    case Constraint::stop_bounds: return "7";
    case Constraint::terminal_stops: return "8";
    case Constraint::ordering: return "10";
    case Constraint::activation_window: return "11";
    case Constraint::speed_bounds: return "speed";
    case Constraint::capacity: return "capacity";
  }
  return "?";
}

struct Violation {
  Constraint constraint;
  int train = -1;    // -1 when not train-specific
  int station = -1;  // -1 when not station-specific
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool feasible() const noexcept { return violations.empty(); }

  bool has(Constraint c) const {
    return std::any_of(violations.begin(), violations.end(),
                       [c](const Violation& v) { return v.constraint == c; });
  }
};

/// Checks propagation, headway, stop bounds, terminal stops, activation
/// ordering and window, speed bounds and carriage counts. Collects every
/// violation. Headways apply between consecutive active trains.
inline ValidationReport validate(const Timetable& tt, const Line& line) {
  ValidationReport rep;
  const int s = line.n_stations();
  const double tol = kFeasibilityTolerance;
  const double horizon = line.horizon;
  auto add = [&](Constraint c, int k, int i, double mag) { rep.violations.push_back({c, k, i, mag}); };

  for (int k = 0; k < tt.size(); ++k) {
    const auto& tr = tt.trains[k];
    if (static_cast<int>(tr.departure.size()) != s || static_cast<int>(tr.stops.size()) != s ||
        static_cast<int>(tr.stop_time.size()) != s || static_cast<int>(tr.unit_time.size()) != s - 1) {
      add(Constraint::propagation, k, -1, 1.0);
      continue;
    }
    for (int i = 0; i + 1 < s; ++i) {
      const double diff = std::abs(tr.departure[i + 1] - next_departure(tr, line, i));
      if (!(diff <= tol)) add(Constraint::propagation, k, i + 1, diff);
    }
    for (int i = 0; i < s; ++i) {
      const double lo = tr.stops[i] ? line.min_stop : 0.0;
      const double hi = tr.stops[i] ? line.max_stop : 0.0;
      if (tr.stop_time[i] < lo - tol) add(Constraint::stop_bounds, k, i, lo - tr.stop_time[i]);
      if (tr.stop_time[i] > hi + tol) add(Constraint::stop_bounds, k, i, tr.stop_time[i] - hi);
    }
    if (!tr.stops.front()) add(Constraint::terminal_stops, k, 0, 1.0);
    if (!tr.stops.back()) add(Constraint::terminal_stops, k, s - 1, 1.0);
    if (k + 1 < tt.size() && !tr.active && tt.trains[k + 1].active) add(Constraint::ordering, k, -1, 1.0);

    const double t1 = tr.departure[0];
    if (tr.active) {
      if (t1 < -tol) add(Constraint::activation_window, k, 0, -t1);
      if (t1 > horizon + tol) add(Constraint::activation_window, k, 0, t1 - horizon);
      for (int i = 0; i + 1 < s; ++i) {
        const auto& seg = line.segments[i];
        if (tr.unit_time[i] < seg.min_unit_time - tol)
          add(Constraint::speed_bounds, k, i, seg.min_unit_time - tr.unit_time[i]);
        if (tr.unit_time[i] > seg.max_unit_time + tol)
          add(Constraint::speed_bounds, k, i, tr.unit_time[i] - seg.max_unit_time);
      }
      if (tr.config.carriages < 1) add(Constraint::capacity, k, -1, 1.0 - tr.config.carriages);
    } else {
      const double lo = 2.0 * horizon;
      const double hi = horizon + kDeactivationFactor * horizon;
      if (t1 < lo - tol) add(Constraint::activation_window, k, 0, lo - t1);
      if (t1 > hi + tol) add(Constraint::activation_window, k, 0, t1 - hi);
    }
  }

  const auto active = tt.active_indices();
  for (std::size_t q = 0; q + 1 < active.size(); ++q) {
    const auto& lead = tt.trains[active[q]];
    const auto& follow = tt.trains[active[q + 1]];
    if (static_cast<int>(lead.departure.size()) != s || static_cast<int>(follow.departure.size()) != s) continue;
    for (int i = 0; i < s; ++i) {
      const double slack = (follow.departure[i] - follow.stop_time[i]) -
                           (lead.departure[i] + line.headway(i, active[q]));
      if (slack < -tol) add(Constraint::headway, active[q + 1], i, -slack);
    }
  }
  return rep;
}

/// Pessimistic train count: the heaviest cut demand over [0, T] divided by
/// the smallest train capacity, rounded up.
inline int train_count_upper_bound(const ODDemandMatrix& od, const Line& line, double cap_min) {
  if (!(cap_min > 0.0)) throw std::invalid_argument("minimum capacity must be positive");
  const int s = od.n_stations();
  double worst = 0.0;
  for (int cut = 0; cut + 1 < s; ++cut) {
    double crossing = 0.0;
    for (const auto& [key, f] : od.entries())
      if (key.first <= cut && key.second >= cut + 1) crossing += f.interval(0.0, line.horizon);
    worst = std::max(worst, crossing);
  }
  return static_cast<int>(std::ceil(worst / cap_min - 1e-9));
}

/// Gaps between consecutive active origin departures.
inline std::vector<double> interdeparture_times(const Timetable& tt) {
  std::vector<double> out;
  const auto active = tt.active_indices();
  for (std::size_t q = 0; q + 1 < active.size(); ++q)
    out.push_back(tt.trains[active[q + 1]].departure[0] - tt.trains[active[q]].departure[0]);
  return out;
}

/// Active trains sorted by origin departure and relabelled first, inactive
/// trains after them in their original order.
inline Timetable relabel_by_departure(const Timetable& tt) {
  Timetable out;
  auto active = tt.active_indices();
  std::stable_sort(active.begin(), active.end(), [&](int a, int b) {
    return tt.trains[a].departure[0] < tt.trains[b].departure[0];
  });
  for (int k : active) out.trains.push_back(tt.trains[k]);
  for (const auto& tr : tt.trains)
    if (!tr.active) out.trains.push_back(tr);
  return out;
}

}  // namespace railtt

#endif  // RAILTT_LINE_MODEL_HPP
