#ifndef RAILTT_SYNTHETIC_HPP
#define RAILTT_SYNTHETIC_HPP

// A six-station suburban corridor with three daily peaks. Station names
// follow a slice of a Madrid commuter line; distances and demand are made up.

#include <array>
#include <vector>

#include "railtt/demand_model.hpp"
#include "railtt/line_model.hpp"

namespace railtt::synthetic {

inline constexpr double kCorridorDemand = 11581.0;

inline Line corridor_line() {
  Line line;
  line.station_names = {"Mostoles-Soto", "Mostoles", "Las Retamas", "Alarcon", "San Jose", "Cuatro Vientos"};
  for (double km : {1.4, 2.6, 1.6, 1.9, 2.3}) {
    Segment seg;
    seg.length_km = km;
    seg.min_unit_time = 1.0;   // 60 km/h
    seg.max_unit_time = 1.5;   // 40 km/h
    line.segments.push_back(seg);
  }
  line.safety_headway = 2.0;
  line.min_stop = 0.5;
  line.max_stop = 2.0;
  line.flow_rate = 0.005;
  line.horizon = 1440.0;
  return line;
}

// Morning, midday and evening peaks shared by every pair, scaled so the
// whole day carries kCorridorDemand passengers.
inline ODDemandMatrix corridor_demand() {
  constexpr int s = 6;
  constexpr std::array<double, 3> peak_time{480.0, 840.0, 1110.0};
  constexpr std::array<double, 3> peak_share{0.45, 0.2, 0.35};
  constexpr std::array<double, 3> peak_slope{0.02, 0.015, 0.018};
  std::vector<std::array<double, 3>> weights;
  double total = 0.0;
  for (int i = 0; i < s; ++i) {
    for (int j = i + 1; j < s; ++j) {
      // Heavier from the outer stations and towards the last one.
      const double w = (s - i) * (1.0 + 0.5 * (j == s - 1)) / (1.0 + 0.15 * (j - i));
      weights.push_back({static_cast<double>(i), static_cast<double>(j), w});
      total += w;
    }
  }
  ODDemandMatrix od(s);
  for (const auto& [i, j, w] : weights) {
    std::vector<SigmoidTerm> terms;
    const double pair_total = kCorridorDemand * w / total;
    // Later origins see each peak a little later.
    for (int r = 0; r < 3; ++r) terms.push_back({pair_total * peak_share[r], peak_time[r] + 2.0 * i, peak_slope[r]});
    od.set(static_cast<int>(i), static_cast<int>(j), SigmoidSum(std::move(terms)));
  }
  return od;
}

}  // namespace railtt::synthetic

#endif  // RAILTT_SYNTHETIC_HPP
