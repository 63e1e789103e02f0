#ifndef RAILTT_TESTS_SUPPORT_HPP
#define RAILTT_TESTS_SUPPORT_HPP

// Shared fixtures and independent oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "railtt/demand_model.hpp"
#include "railtt/line_model.hpp"
#include "railtt/passenger_flow.hpp"

namespace railtt::support {

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                        int depth = 40) {
  auto simpson = [&](double fa, double fm, double fb, double lo, double hi) {
    return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  };
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double fa, double fm, double fb, double whole, double eps, int d) {
        const double m = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + m), rm = 0.5 * (m + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = simpson(fa, flm, fm, lo, m), right = simpson(fm, frm, fb, m, hi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
        return rec(lo, m, fa, flm, fm, left, eps / 2, d - 1) + rec(m, hi, fm, frm, fb, right, eps / 2, d - 1);
      };
  // Seed with a fixed grid so narrow bumps are not skipped.
  constexpr int pieces = 256;
  double sum = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double lo = a + (b - a) * p / pieces, hi = a + (b - a) * (p + 1) / pieces;
    const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
    sum += rec(lo, hi, fa, fm, fb, simpson(fa, fm, fb, lo, hi), tol / pieces, depth);
  }
  return sum;
}

/// Line with equal segments, all-stop defaults and no dwell dynamics.
inline Line simple_line(int stations, double length = 10.0, double unit_time = 1.0, double horizon = 1440.0) {
  Line line;
  for (int i = 0; i < stations; ++i) line.station_names.push_back("S" + std::to_string(i + 1));
  for (int i = 0; i + 1 < stations; ++i) line.segments.push_back({length, unit_time, unit_time * 2.0, 0.0, 0.0});
  line.safety_headway = 0.0;
  line.min_stop = 0.0;
  line.max_stop = 0.0;
  line.flow_rate = 0.0;
  line.horizon = horizon;
  return line;
}

/// Near-uniform arrivals: a staircase of steep sigmoids, one unit of
/// `rate * spacing` passengers every `spacing` minutes over [t0, t1).
inline SigmoidSum uniform_demand(double rate, double t0, double t1, double spacing = 0.5, double slope = 8.0) {
  std::vector<SigmoidTerm> terms;
  for (double t = t0 + 0.5 * spacing; t < t1; t += spacing) terms.push_back({rate * spacing, t, slope / spacing});
  return SigmoidSum(std::move(terms));
}

/// Point masses of whole passengers at given instants (steep enough that
/// every evaluation away from the instants is exactly 0 or 1 per term).
inline SigmoidSum point_masses(const std::vector<std::pair<double, int>>& masses) {
  std::vector<SigmoidTerm> terms;
  for (auto [t, n] : masses)
    if (n > 0) terms.push_back({static_cast<double>(n), t, 1e4});
  return SigmoidSum(std::move(terms));
}

/// Timetable of all-stop trains propagated from the given origin departures.
inline Timetable timetable_for(const Line& line, const std::vector<double>& departures,
                               const std::vector<int>& carriages, double per_carriage = 1.0) {
  Timetable tt;
  for (std::size_t k = 0; k < departures.size(); ++k)
    tt.trains.push_back(make_train(line, departures[k], TrainConfig{carriages[k], per_carriage}));
  return propagate_departures(std::move(tt), line);
}

// Individual-passenger simulation used as an oracle for the aggregate
// loader. Every passenger is an object with an arrival instant; trains are
// processed in order and each platform queue is split into "arrived before
// the previous train left" and "arrived since". Capacity shares across
// destinations follow the same largest-remainder rule.
struct Passenger {
  int origin, destination;
  double arrival;
  int boarded_train = -1;
};

struct OracleFlow {
  std::map<std::tuple<int, int, int>, int> arrivals, boarded_new, missed_new, waiting, boarded_waiting,
      missed_waiting, boarded;
  std::map<std::pair<int, int>, int> free_capacity;
};

inline std::vector<int> largest_remainder(int units, const std::vector<int>& demand) {
  int total = 0;
  for (int d : demand) total += d;
  std::vector<int> share(demand.size(), 0);
  if (total <= units) return demand;
  if (units <= 0) return share;
  std::vector<double> rem(demand.size());
  int given = 0;
  for (std::size_t j = 0; j < demand.size(); ++j) {
    const double quota = static_cast<double>(units) * demand[j] / total;
    share[j] = std::min(static_cast<int>(std::floor(quota + 1e-9)), demand[j]);
    rem[j] = quota - share[j];
    given += share[j];
  }
  std::vector<std::size_t> order(demand.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t q = 0; q < order.size() && given < units; ++q) {
    if (share[order[q]] < demand[order[q]]) {
      ++share[order[q]];
      ++given;
    }
  }
  return share;
}

inline OracleFlow simulate_passengers(std::vector<Passenger> people, int stations,
                                      const std::vector<std::vector<double>>& departures,
                                      const std::vector<int>& capacities) {
  OracleFlow out;
  const int trains = static_cast<int>(departures.size());
  std::vector<double> prev(stations, 0.0);
  for (int k = 0; k < trains; ++k) {
    std::vector<Passenger*> riding;
    int free = capacities[k];
    for (int i = 0; i < stations; ++i) {
      // Alight.
      std::erase_if(riding, [&](Passenger* p) {
        if (p->destination == i) {
          ++free;
          return true;
        }
        return false;
      });
      const double now = departures[k][i];
      std::map<int, std::vector<Passenger*>> old_queue, new_queue;
      for (auto& p : people) {
        if (p.origin != i || p.boarded_train >= 0) continue;
        if (p.arrival < prev[i]) old_queue[p.destination].push_back(&p);
        else if (p.arrival < now) new_queue[p.destination].push_back(&p);
      }
      for (int j = i + 1; j < stations; ++j) {
        out.waiting[{k, i, j}] = static_cast<int>(old_queue[j].size());
        out.arrivals[{k, i, j}] = static_cast<int>(new_queue[j].size());
      }
      for (auto* queue : {&old_queue, &new_queue}) {
        std::vector<int> dests, counts;
        for (int j = i + 1; j < stations; ++j) {
          dests.push_back(j);
          counts.push_back(static_cast<int>((*queue)[j].size()));
        }
        const auto share = largest_remainder(free, counts);
        for (std::size_t d = 0; d < dests.size(); ++d) {
          auto& q = (*queue)[dests[d]];
          for (int m = 0; m < share[d]; ++m) {
            q[m]->boarded_train = k;
            riding.push_back(q[m]);
          }
          free -= share[d];
          auto& tally = queue == &old_queue ? out.boarded_waiting : out.boarded_new;
          tally[{k, i, dests[d]}] = share[d];
        }
      }
      for (int j = i + 1; j < stations; ++j) {
        out.missed_waiting[{k, i, j}] = out.waiting[{k, i, j}] - out.boarded_waiting[{k, i, j}];
        out.missed_new[{k, i, j}] = out.arrivals[{k, i, j}] - out.boarded_new[{k, i, j}];
        out.boarded[{k, i, j}] = out.boarded_waiting[{k, i, j}] + out.boarded_new[{k, i, j}];
      }
      out.free_capacity[{k, i}] = free;
      prev[i] = now;
    }
  }
  return out;
}


// Closed-form evaluation of a 2-station, single-pair, all-stop instance
// with no dwell: backlog first, capacity c per train, waiting charged per
// interval as in the objective, and riders not carried by the last train
// charged until 2T. `cum` gives cumulative demand.
inline double two_station_awt(const std::function<double(double)>& cum, const std::vector<double>& departures,
                              double capacity, double horizon) {
  double prev = 0.0, backlog = 0.0, cost = 0.0;
  for (double t : departures) {
    const double arrived = cum(t) - cum(prev);
    cost += (t - prev) * backlog + 0.5 * (t - prev) * arrived;
    const double board = std::min(capacity, backlog + arrived);
    backlog = backlog + arrived - board;
    prev = t;
  }
  const double sweep = 2.0 * horizon;
  cost += (sweep - prev) * backlog + 0.5 * (sweep - prev) * (cum(sweep) - cum(prev));
  return cost / (cum(horizon) - cum(0.0));
}

}  // namespace railtt::support

#endif  // RAILTT_TESTS_SUPPORT_HPP
