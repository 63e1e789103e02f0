#ifndef RAILTT_PASSENGER_FLOW_HPP
#define RAILTT_PASSENGER_FLOW_HPP

// Deterministic passenger loading for a fixed timetable: arrivals between
// consecutive trains, boarding with capacity rationing, platform backlog,
// free capacity, demand-driven stop times and the average waiting time.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "railtt/demand_model.hpp"
#include "railtt/line_model.hpp"

namespace railtt {

enum class PassengerMode { fractional, integer };

/// Dense (train, origin, destination) tensor; only origin < destination is used.
class PairTensor {
 public:
  PairTensor() = default;
  PairTensor(int trains, int stations)
      : trains_(trains), stations_(stations), data_(static_cast<std::size_t>(trains) * stations * stations, 0.0) {}

  double& operator()(int k, int i, int j) { return data_[index(k, i, j)]; }
  double operator()(int k, int i, int j) const { return data_[index(k, i, j)]; }

  int trains() const noexcept { return trains_; }
  int stations() const noexcept { return stations_; }

  bool operator==(const PairTensor&) const = default;

 private:
  std::size_t index(int k, int i, int j) const {
    return (static_cast<std::size_t>(k) * stations_ + i) * stations_ + j;
  }
  int trains_ = 0;
  int stations_ = 0;
  std::vector<double> data_;
};

/// Dense (train, station) tensor.
class StationTensor {
 public:
  StationTensor() = default;
  StationTensor(int trains, int stations)
      : trains_(trains), stations_(stations), data_(static_cast<std::size_t>(trains) * stations, 0.0) {}

  double& operator()(int k, int i) { return data_[static_cast<std::size_t>(k) * stations_ + i]; }
  double operator()(int k, int i) const { return data_[static_cast<std::size_t>(k) * stations_ + i]; }

  int trains() const noexcept { return trains_; }
  int stations() const noexcept { return stations_; }

  bool operator==(const StationTensor&) const = default;

 private:
  int trains_ = 0;
  int stations_ = 0;
  std::vector<double> data_;
};

/// Passenger variables realised for the active trains of a timetable,
/// indexed by position among active trains (train_ids maps back).
///
/// Symbol map: arrivals N, boarded_new ns, missed_new ne, waiting E,
/// boarded_waiting es, missed_waiting ee, boarded S; per origin station
/// NAD / EAD / SAD; per destination NAO / EAO / SAO; free_capacity FS.
struct FlowState {
  std::vector<int> train_ids;
  std::vector<double> capacity;

  PairTensor arrivals, boarded_new, missed_new;
  PairTensor waiting, boarded_waiting, missed_waiting;
  PairTensor boarded;

  StationTensor arrivals_at_origin, waiting_at_origin, boarding_at_origin;
  StationTensor arrivals_to_destination, waiting_to_destination, alighting_at_destination;
  StationTensor free_capacity;
  StationTensor stop_time;

  /// Backlog still on the platforms after the last active train, (i, j).
  PairTensor leftover;
  /// Arrivals after the last active train has left, up to the horizon, (i, j).
  PairTensor late;

  int trains() const noexcept { return static_cast<int>(train_ids.size()); }
  int stations() const noexcept { return arrivals.stations(); }

  /// Passengers on board while running segment i -> i+1.
  double occupancy(int k, int segment) const { return capacity[k] - free_capacity(k, segment); }

  bool operator==(const FlowState&) const = default;
};

namespace detail {

// Shares `room` across `demand` proportionally. Integer mode floors the
// quotas and hands the remaining units to the largest remainders (lowest
// index first on ties).
inline void ration(double room, const std::vector<double>& demand, std::vector<double>& share,
                   PassengerMode mode) {
  const double total = std::accumulate(demand.begin(), demand.end(), 0.0);
  share.assign(demand.size(), 0.0);
  if (total <= room) {
    share = demand;
    return;
  }
  if (room <= 0.0 || total <= 0.0) return;
  if (mode == PassengerMode::fractional) {
    for (std::size_t j = 0; j < demand.size(); ++j) share[j] = room * (demand[j] / total);
    return;
  }
  const double units = std::floor(room + 1e-9);
  std::vector<double> remainder(demand.size());
  double given = 0.0;
  for (std::size_t j = 0; j < demand.size(); ++j) {
    const double quota = units * demand[j] / total;
    share[j] = std::min(std::floor(quota + 1e-9), demand[j]);
    remainder[j] = quota - share[j];
    given += share[j];
  }
  std::vector<std::size_t> order(demand.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t q = 0; q < order.size() && given + 0.5 < units; ++q) {
    const std::size_t j = order[q];
    if (share[j] + 1.0 <= demand[j] + 1e-9) {
      share[j] += 1.0;
      given += 1.0;
    }
  }
}

}  // namespace detail

/// N_ij^k for active trains: demand arriving at i for j between the
/// previous active train's departure at i (0 for the first) and this one's.
inline PairTensor arrivals_between_trains(const ODDemandMatrix& od, const Timetable& tt) {
  const int s = od.n_stations();
  const auto active = tt.active_indices();
  PairTensor n(static_cast<int>(active.size()), s);
  std::vector<double> prev(s, 0.0);
  for (int q = 0; q < static_cast<int>(active.size()); ++q) {
    const auto& tr = tt.trains[active[q]];
    if (static_cast<int>(tr.departure.size()) != s) {
      throw std::invalid_argument("timetable station count does not match the demand matrix");
    }
    for (int i = 0; i + 1 < s; ++i) {
      const double t = tr.departure[i];
      if (t < prev[i]) {
        throw std::invalid_argument("active departures are not ordered at station " + std::to_string(i + 1) +
                                    " (train " + std::to_string(active[q] + 1) + ")");
      }
      for (int j = i + 1; j < s; ++j) n(q, i, j) = od.interval(i, j, prev[i], t);
      prev[i] = t;
    }
  }
  return n;
}

/// Stop times implied by the flow, one row per active train. Each is the
/// smallest of the free-capacity, boarding-flow and maximum-dwell bounds,
/// never below the minimum dwell, and zero where the train does not stop.
inline std::vector<std::vector<double>> realized_stop_times(const FlowState& fs, const Timetable& tt,
                                                            const Line& line) {
  const int s = fs.stations();
  std::vector<std::vector<double>> out(fs.trains(), std::vector<double>(s, 0.0));
  for (int q = 0; q < fs.trains(); ++q) {
    const auto& tr = tt.trains[fs.train_ids[q]];
    for (int i = 0; i < s; ++i) {
      if (!tr.stops[i]) continue;
      const double room_on_arrival = i == 0 ? fs.capacity[q] : fs.free_capacity(q, i - 1);
      const double t = std::min({line.min_stop + line.flow_rate * room_on_arrival,
                                 line.min_stop + line.flow_rate * fs.boarding_at_origin(q, i), line.max_stop});
      out[q][i] = std::max(t, line.min_stop);
    }
  }
  return out;
}

/// Loads passengers train by train. At each served station riders for
/// that station alight first, then the platform backlog boards ahead of
/// new arrivals; a binding capacity is shared proportionally across
/// destinations within each class. Nobody boards for a station the train
/// skips, and skipped stations see no boarding or alighting.
inline FlowState load_passengers(const ODDemandMatrix& od, const Timetable& tt, const Line& line,
                                 PassengerMode mode = PassengerMode::fractional) {
  const int s = line.n_stations();
  if (od.n_stations() != s) throw std::invalid_argument("demand matrix station count does not match the line");
  const auto active = tt.active_indices();
  const int kk = static_cast<int>(active.size());

  FlowState fs;
  fs.train_ids = active;
  fs.capacity.resize(kk);
  fs.arrivals = arrivals_between_trains(od, tt);
  for (auto* t : {&fs.boarded_new, &fs.missed_new, &fs.waiting, &fs.boarded_waiting, &fs.missed_waiting,
                  &fs.boarded}) {
    *t = PairTensor(kk, s);
  }
  for (auto* t : {&fs.arrivals_at_origin, &fs.waiting_at_origin, &fs.boarding_at_origin,
                  &fs.arrivals_to_destination, &fs.waiting_to_destination, &fs.alighting_at_destination,
                  &fs.free_capacity, &fs.stop_time}) {
    *t = StationTensor(kk, s);
  }
  fs.leftover = PairTensor(1, s);
  fs.late = PairTensor(1, s);

  std::vector<double> backlog(static_cast<std::size_t>(s) * s, 0.0);
  std::vector<double> demand, share;
  std::vector<int> dest;
  for (int q = 0; q < kk; ++q) {
    const auto& tr = tt.trains[active[q]];
    const double cap = tr.config.capacity();
    fs.capacity[q] = cap;
    std::vector<double> on_board(s, 0.0);
    double free_prev = cap;
    for (int i = 0; i < s; ++i) {
      for (int j = i + 1; j < s; ++j) fs.waiting(q, i, j) = backlog[i * s + j];

      double alight = 0.0;
      if (tr.stops[i]) {
        alight = on_board[i];
        on_board[i] = 0.0;
      }
      double room = free_prev + alight;

      dest.clear();
      if (tr.stops[i])
        for (int j = i + 1; j < s; ++j)
          if (tr.stops[j]) dest.push_back(j);

      // Backlog first, then new arrivals.
      for (int cls = 0; cls < 2; ++cls) {
        demand.clear();
        for (int j : dest) demand.push_back(cls == 0 ? fs.waiting(q, i, j) : fs.arrivals(q, i, j));
        detail::ration(std::max(room, 0.0), demand, share, mode);
        double taken = 0.0;
        for (std::size_t d = 0; d < dest.size(); ++d) {
          (cls == 0 ? fs.boarded_waiting : fs.boarded_new)(q, i, dest[d]) = share[d];
          taken += share[d];
        }
        room -= taken;
      }

      double sad = 0.0;
      for (int j = i + 1; j < s; ++j) {
        const double es = fs.boarded_waiting(q, i, j), ns = fs.boarded_new(q, i, j);
        fs.missed_waiting(q, i, j) = fs.waiting(q, i, j) - es;
        fs.missed_new(q, i, j) = fs.arrivals(q, i, j) - ns;
        // Re-form the totals so the splits add up bit for bit.
        fs.waiting(q, i, j) = es + fs.missed_waiting(q, i, j);
        fs.arrivals(q, i, j) = ns + fs.missed_new(q, i, j);
        fs.boarded(q, i, j) = ns + es;
        on_board[j] += fs.boarded(q, i, j);
        sad += fs.boarded(q, i, j);
        backlog[i * s + j] = fs.missed_waiting(q, i, j) + fs.missed_new(q, i, j);
      }
      fs.boarding_at_origin(q, i) = sad;
      const double free_now = free_prev + alight - sad;
      fs.free_capacity(q, i) = free_now < 0.0 && free_now > -1e-9 * (1.0 + cap) ? 0.0 : free_now;
      free_prev = fs.free_capacity(q, i);
    }

    for (int i = 0; i < s; ++i) {
      double nad = 0.0, ead = 0.0;
      for (int j = i + 1; j < s; ++j) {
        nad += fs.arrivals(q, i, j);
        ead += fs.waiting(q, i, j);
      }
      fs.arrivals_at_origin(q, i) = nad;
      fs.waiting_at_origin(q, i) = ead;
      double nao = 0.0, eao = 0.0, sao = 0.0;
      for (int p = 0; p < i; ++p) {
        nao += fs.arrivals(q, p, i);
        eao += fs.waiting(q, p, i);
        sao += fs.boarded(q, p, i);
      }
      fs.arrivals_to_destination(q, i) = nao;
      fs.waiting_to_destination(q, i) = eao;
      fs.alighting_at_destination(q, i) = sao;
    }
  }
  for (int i = 0; i < s; ++i) {
    const double last = kk > 0 ? std::min(tt.trains[active.back()].departure[i], line.horizon) : 0.0;
    for (int j = i + 1; j < s; ++j) {
      fs.leftover(0, i, j) = backlog[i * s + j];
      fs.late(0, i, j) = od.interval(i, j, last, line.horizon);
    }
  }

  const auto dwell = realized_stop_times(fs, tt, line);
  for (int q = 0; q < kk; ++q)
    for (int i = 0; i < s; ++i) fs.stop_time(q, i) = dwell[q][i];
  return fs;
}

/// How passengers still waiting after the last active train are costed.
enum class UnservedCost {
  /// Only the intervals up to the last active train are summed.
  none,
  /// The backlog and later arrivals wait until the first deactivated
  /// train at 2T, as an inactive train slot would charge them.
  until_deactivation,
};

struct AwtBreakdown {
  double total_awt = 0.0;            // minutes
  double waiting_component = 0.0;    // passenger-minutes from the platform backlog
  double arrival_component = 0.0;    // passenger-minutes from new arrivals
  double total_demand = 0.0;         // passengers in [0, T]
  double unserved = 0.0;             // passengers not carried by any active train
  UnservedCost unserved_cost = UnservedCost::none;

  bool operator==(const AwtBreakdown&) const = default;
};

/// Average waiting time: sum over origin stations (terminus excluded) and
/// active trains of gap * (backlog + new arrivals / 2), divided by the total
/// demand in [0, T].
inline AwtBreakdown awt(const FlowState& fs, const Timetable& tt, const ODDemandMatrix& od, double horizon,
                        UnservedCost unserved_cost = UnservedCost::none) {
  AwtBreakdown out;
  out.unserved_cost = unserved_cost;
  out.total_demand = od.total_interval(0.0, horizon);
  if (!(out.total_demand > 0.0)) throw std::invalid_argument("average waiting time undefined: zero total demand");
  const int s = fs.stations();
  double waiting = 0.0, arriving = 0.0;
  for (int i = 0; i + 1 < s; ++i) {
    double prev = 0.0;
    for (int q = 0; q < fs.trains(); ++q) {
      const double t = tt.trains[fs.train_ids[q]].departure[i];
      waiting += (t - prev) * fs.waiting_at_origin(q, i);
      arriving += (t - prev) * fs.arrivals_at_origin(q, i);
      prev = t;
    }
    double left = 0.0, late = 0.0;
    for (int j = i + 1; j < s; ++j) {
      left += fs.leftover(0, i, j);
      late += od.interval(i, j, std::min(prev, horizon), horizon);
    }
    out.unserved += left + late;
    if (unserved_cost == UnservedCost::until_deactivation) {
      const double sweep = 2.0 * horizon;
      double later = 0.0;
      for (int j = i + 1; j < s; ++j) later += od.interval(i, j, std::min(prev, sweep), sweep);
      waiting += (sweep - prev) * left;
      arriving += (sweep - prev) * later;
    }
  }
  out.waiting_component = waiting;
  out.arrival_component = 0.5 * arriving;
  out.total_awt = (out.waiting_component + out.arrival_component) / out.total_demand;
  return out;
}

struct RealizeOptions {
  PassengerMode mode = PassengerMode::fractional;
  bool repair_headways = false;
  int max_iterations = 20;
  double tolerance = 1e-6;
};

struct Realization {
  Timetable timetable;
  FlowState flow;
  int iterations = 0;
  bool converged = false;
};

/// Pushes each active follower later, whole trajectory, until it clears the
/// safety headway behind its leader at every station.
inline void repair_headways(Timetable& tt, const Line& line) {
  const int s = line.n_stations();
  const auto active = tt.active_indices();
  for (std::size_t q = 0; q + 1 < active.size(); ++q) {
    const auto& lead = tt.trains[active[q]];
    auto& follow = tt.trains[active[q + 1]];
    double need = 0.0;
    for (int i = 0; i < s; ++i) {
      need = std::max(need, lead.departure[i] + line.headway(i, active[q]) + follow.stop_time[i] -
                                follow.departure[i]);
    }
    if (need > 0.0) {
      follow.departure[0] += need;
      for (int i = 0; i + 1 < s; ++i) follow.departure[i + 1] = next_departure(follow, line, i);
      // Rounding in the propagation may leave a sub-ulp shortfall.
      for (int i = 0; i < s; ++i) {
        const double gap = lead.departure[i] + line.headway(i, active[q]) + follow.stop_time[i] - follow.departure[i];
        if (gap > 0.0) {
          follow.departure[0] += gap;
          for (int m = 0; m + 1 < s; ++m) follow.departure[m + 1] = next_departure(follow, line, m);
        }
      }
    }
  }
}

/// Fixed point between dwell times and passenger flow: propagate
/// departures with the current dwells, load passengers, replace the dwells
/// by their demand-driven values, repeat until they move less than the
/// tolerance. Active trains start from the minimum dwell.
inline Realization realize(const ODDemandMatrix& od, Timetable tt, const Line& line,
                           const RealizeOptions& options = {}) {
  for (auto& tr : tt.trains) {
    if (!tr.active) continue;
    for (std::size_t i = 0; i < tr.stop_time.size(); ++i) tr.stop_time[i] = tr.stops[i] ? line.min_stop : 0.0;
  }
  Realization out;
  for (int it = 1;; ++it) {
    tt = propagate_departures(std::move(tt), line);
    if (options.repair_headways) repair_headways(tt, line);
    FlowState fs = load_passengers(od, tt, line, options.mode);
    double change = 0.0;
    for (int q = 0; q < fs.trains(); ++q) {
      const auto& tr = tt.trains[fs.train_ids[q]];
      for (int i = 0; i < fs.stations(); ++i) change = std::max(change, std::abs(fs.stop_time(q, i) - tr.stop_time[i]));
    }
    out.iterations = it;
    if (change < options.tolerance || it >= options.max_iterations) {
      out.converged = change < options.tolerance;
      out.timetable = std::move(tt);
      out.flow = std::move(fs);
      return out;
    }
    for (int q = 0; q < fs.trains(); ++q) {
      auto& tr = tt.trains[fs.train_ids[q]];
      for (int i = 0; i < fs.stations(); ++i) tr.stop_time[i] = fs.stop_time(q, i);
    }
  }
}

}  // namespace railtt

#endif  // RAILTT_PASSENGER_FLOW_HPP
