#ifndef RAILTT_METRICS_HPP
#define RAILTT_METRICS_HPP

// Timetable quality and profitability measures: load factors, served
// demand, random-incidence waiting and their per-timetable aggregates.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "railtt/line_model.hpp"
#include "railtt/passenger_flow.hpp"

namespace railtt {

struct TrainMetrics {
  int train = 0;            // timetable index
  double lf = 0.0;          // passenger-km over capacity-km
  double vlf = 0.0;         // peak occupancy over capacity
  double hlf = 0.0;         // mean occupancy over peak occupancy
  double sd = 0.0;          // boarded over newly arrived
  double peak_load = 0.0;   // passengers
  double mean_load = 0.0;   // length-weighted, passengers
  bool empty = false;       // peak load is zero; hlf set to 0
  bool no_arrivals = false; // nothing arrived for this train; sd set to 1
  bool backlog = false;     // sd above 1 because the backlog boarded
};

struct TimetableMetrics {
  std::vector<TrainMetrics> trains;
  double asd = 0.0;   // percent
  double alf = 0.0;   // percent
  double avlf = 0.0;  // percent
  double ahlf = 0.0;  // percent
  double awt = 0.0;   // minutes
  double interdeparture_mean = 0.0;
  double interdeparture_var = 0.0;
  std::optional<double> rit_expected_wait;
  std::optional<double> awt_rit_gap;  // awt - rit_expected_wait
};

namespace detail {

inline void require_capacity(const FlowState& fs, int q) {
  if (q < 0 || q >= fs.trains()) throw std::out_of_range("train is not active in this flow");
  if (!(fs.capacity[q] > 0.0)) throw std::invalid_argument("load factor undefined for zero capacity");
}

inline double peak_load(const FlowState& fs, int q) {
  double pm = 0.0;
  for (int i = 0; i + 1 < fs.stations(); ++i) pm = std::max(pm, fs.occupancy(q, i));
  return pm;
}

inline double mean_load(const FlowState& fs, const Line& line, int q) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i + 1 < fs.stations(); ++i) {
    num += fs.occupancy(q, i) * line.segments[i].length_km;
    den += line.segments[i].length_km;
  }
  // A weighted mean cannot exceed the maximum; rounding can say otherwise.
  return std::min(num / den, peak_load(fs, q));
}

}  // namespace detail

// `q` below is the train's position among active trains in the flow.

inline double load_factor(const FlowState& fs, const Line& line, int q) {
  detail::require_capacity(fs, q);
  double num = 0.0, den = 0.0;
  for (int i = 0; i + 1 < fs.stations(); ++i) {
    num += fs.occupancy(q, i) * line.segments[i].length_km;
    den += fs.capacity[q] * line.segments[i].length_km;
  }
  return num / den;
}

inline double vertical_load_factor(const FlowState& fs, int q) {
  detail::require_capacity(fs, q);
  return detail::peak_load(fs, q) / fs.capacity[q];
}

/// Mean over peak occupancy; 0 for a train that never carries anyone.
inline double horizontal_load_factor(const FlowState& fs, const Line& line, int q, bool* empty = nullptr) {
  const double pm = detail::peak_load(fs, q);
  if (empty) *empty = !(pm > 0.0);
  if (!(pm > 0.0)) return 0.0;
  return detail::mean_load(fs, line, q) / pm;
}

/// Boarded over newly arrived. The last active train also answers for
/// everyone arriving after it up to the horizon. Can exceed 1 when a train
/// clears backlog; defined as 1 when nobody arrived.
inline double served_demand(const FlowState& fs, int q, bool* no_arrivals = nullptr) {
  if (q < 0 || q >= fs.trains()) throw std::out_of_range("train is not active in this flow");
  double boarded = 0.0, arrived = 0.0;
  const int s = fs.stations();
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j) {
      boarded += fs.boarded(q, i, j);
      arrived += fs.arrivals(q, i, j);
      if (q + 1 == fs.trains()) arrived += fs.late(0, i, j);
    }
  if (no_arrivals) *no_arrivals = !(arrived > 0.0);
  if (!(arrived > 0.0)) return 1.0;
  return boarded / arrived;
}

/// Expected wait under random incidence: Var(y) / (2 E(y)) + E(y) / 2,
/// population variance over the given headways.
inline double random_incidence_wait(std::span<const double> headways) {
  if (headways.empty()) throw std::invalid_argument("random incidence wait needs at least one headway");
  double mean = 0.0;
  for (double y : headways) mean += y;
  mean /= static_cast<double>(headways.size());
  if (!(mean > 0.0)) throw std::invalid_argument("random incidence wait needs a positive mean headway");
  double var = 0.0;
  for (double y : headways) var += (y - mean) * (y - mean);
  var /= static_cast<double>(headways.size());
  return var / (2.0 * mean) + mean / 2.0;
}

inline TrainMetrics train_metrics(const FlowState& fs, const Line& line, int q) {
  TrainMetrics m;
  m.train = fs.train_ids[q];
  m.lf = load_factor(fs, line, q);
  m.vlf = vertical_load_factor(fs, q);
  m.hlf = horizontal_load_factor(fs, line, q, &m.empty);
  m.sd = served_demand(fs, q, &m.no_arrivals);
  m.backlog = m.sd > 1.0;
  m.peak_load = detail::peak_load(fs, q);
  m.mean_load = detail::mean_load(fs, line, q);
  return m;
}

/// Per-train measures plus their averages over active trains (in percent),
/// headway statistics and the random-incidence comparison.
inline TimetableMetrics summarize(const FlowState& fs, const Timetable& tt, const Line& line,
                                  const AwtBreakdown& awt_value) {
  if (fs.trains() == 0) throw std::invalid_argument("no active trains to summarize");
  TimetableMetrics out;
  for (int q = 0; q < fs.trains(); ++q) out.trains.push_back(train_metrics(fs, line, q));
  const double n = static_cast<double>(fs.trains());
  for (const auto& m : out.trains) {
    out.asd += m.sd;
    out.alf += m.lf;
    out.avlf += m.vlf;
    out.ahlf += m.hlf;
  }
  out.asd *= 100.0 / n;
  out.alf *= 100.0 / n;
  out.avlf *= 100.0 / n;
  out.ahlf *= 100.0 / n;
  out.awt = awt_value.total_awt;
  const auto gaps = interdeparture_times(tt);
  if (!gaps.empty()) {
    double mean = 0.0;
    for (double y : gaps) mean += y;
    mean /= static_cast<double>(gaps.size());
    double var = 0.0;
    for (double y : gaps) var += (y - mean) * (y - mean);
    out.interdeparture_mean = mean;
    out.interdeparture_var = var / static_cast<double>(gaps.size());
    if (mean > 0.0) {
      out.rit_expected_wait = random_incidence_wait(gaps);
      out.awt_rit_gap = out.awt - *out.rit_expected_wait;
    }
  }
  return out;
}

}  // namespace railtt

#endif  // RAILTT_METRICS_HPP
