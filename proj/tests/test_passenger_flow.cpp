#include <gtest/gtest.h>

#include <random>

#include "railtt/passenger_flow.hpp"
#include "support.hpp"

using namespace railtt;

namespace {

ODDemandMatrix single_pair(int stations, int i, int j, SigmoidSum f) {
  ODDemandMatrix od(stations);
  od.set(i, j, std::move(f));
  return od;
}

// Random flow instance with several OD pairs and tight capacities.
struct Instance {
  Line line;
  ODDemandMatrix od;
  Timetable tt;
};

Instance random_instance(std::mt19937_64& rng, int stations, int trains) {
  Instance in;
  in.line = support::simple_line(stations, 5.0);
  in.line.max_stop = 3.0;
  in.od = ODDemandMatrix(stations);
  std::uniform_real_distribution<double> k(0.0, 300.0), x(0.0, 1440.0), b(0.005, 0.1), dep(0.0, 1400.0);
  for (int i = 0; i < stations; ++i)
    for (int j = i + 1; j < stations; ++j)
      if (rng() % 4 != 0) in.od.set(i, j, SigmoidSum({{k(rng), x(rng), b(rng)}, {k(rng), x(rng), b(rng)}}));
  std::vector<double> t;
  for (int q = 0; q < trains; ++q) t.push_back(dep(rng));
  std::sort(t.begin(), t.end());
  std::vector<int> carriages;
  for (int q = 0; q < trains; ++q) carriages.push_back(1 + static_cast<int>(rng() % 4));
  in.tt = support::timetable_for(in.line, t, carriages, 40.0);
  return in;
}

void expect_consistent(const FlowState& fs, const Timetable& tt, const ODDemandMatrix& od, double tol) {
  const int s = fs.stations();
  for (int q = 0; q < fs.trains(); ++q) {
    const double cap = fs.capacity[q];
    double on_board_check = 0.0;
    for (int i = 0; i < s; ++i) {
      double nad = 0, ead = 0, sad = 0, nao = 0, eao = 0, sao = 0;
      for (int j = i + 1; j < s; ++j) {
        EXPECT_GE(fs.arrivals(q, i, j), -tol);
        EXPECT_GE(fs.boarded_new(q, i, j), -tol);
        EXPECT_GE(fs.missed_new(q, i, j), -tol);
        EXPECT_GE(fs.boarded_waiting(q, i, j), -tol);
        EXPECT_GE(fs.missed_waiting(q, i, j), -tol);
        EXPECT_EQ(fs.arrivals(q, i, j), fs.boarded_new(q, i, j) + fs.missed_new(q, i, j));
        EXPECT_EQ(fs.waiting(q, i, j), fs.boarded_waiting(q, i, j) + fs.missed_waiting(q, i, j));
        EXPECT_EQ(fs.boarded(q, i, j), fs.boarded_new(q, i, j) + fs.boarded_waiting(q, i, j));
        if (q == 0) EXPECT_EQ(fs.waiting(q, i, j), 0.0);
        if (q + 1 < fs.trains()) {
          EXPECT_NEAR(fs.waiting(q + 1, i, j), fs.waiting(q, i, j) + fs.arrivals(q, i, j) - fs.boarded(q, i, j),
                      tol);
        }
        nad += fs.arrivals(q, i, j);
        ead += fs.waiting(q, i, j);
        sad += fs.boarded(q, i, j);
      }
      for (int p = 0; p < i; ++p) {
        nao += fs.arrivals(q, p, i);
        eao += fs.waiting(q, p, i);
        sao += fs.boarded(q, p, i);
      }
      EXPECT_NEAR(fs.arrivals_at_origin(q, i), nad, tol);
      EXPECT_NEAR(fs.waiting_at_origin(q, i), ead, tol);
      EXPECT_NEAR(fs.boarding_at_origin(q, i), sad, tol);
      EXPECT_NEAR(fs.arrivals_to_destination(q, i), nao, tol);
      EXPECT_NEAR(fs.waiting_to_destination(q, i), eao, tol);
      EXPECT_NEAR(fs.alighting_at_destination(q, i), sao, tol);
      const double prev = i == 0 ? cap : fs.free_capacity(q, i - 1);
      EXPECT_NEAR(fs.free_capacity(q, i), prev + sao - sad, tol * (1.0 + cap));
      EXPECT_GE(fs.free_capacity(q, i), -tol);
      EXPECT_LE(fs.free_capacity(q, i), cap + tol);
      // Onboard count from the pair flows, independent of the balance.
      if (i + 1 < s) {
        on_board_check = 0.0;
        for (int p = 0; p <= i; ++p)
          for (int r = i + 1; r < s; ++r) on_board_check += fs.boarded(q, p, r);
        EXPECT_NEAR(on_board_check, fs.occupancy(q, i), tol * (1.0 + cap));
      }
    }
  }
  // Conservation per OD pair.
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j) {
      double arrived = 0.0, served = 0.0;
      for (int q = 0; q < fs.trains(); ++q) {
        arrived += fs.arrivals(q, i, j);
        served += fs.boarded(q, i, j);
      }
      EXPECT_NEAR(served + fs.leftover(0, i, j), arrived, tol * (1.0 + arrived));
      if (fs.trains() > 0) {
        const double last = tt.trains[fs.train_ids.back()].departure[i];
        EXPECT_NEAR(arrived, od.interval(i, j, 0.0, last), tol * (1.0 + arrived));
      }
    }
}

}  // namespace

TEST(ArrivalsBetweenTrains, OneTrainAtHorizonSeesTheDay) {
  const Line line = support::simple_line(2);
  const SigmoidSum f({{1000.0, 720.0, 0.05}});
  const auto od = single_pair(2, 0, 1, f);
  const auto tt = support::timetable_for(line, {1440.0}, {1});
  const double quad = support::integrate([&](double t) { return f.density(t); }, 0.0, 1440.0);
  EXPECT_NEAR(arrivals_between_trains(od, tt)(0, 0, 1), quad, 1e-6);
  EXPECT_NEAR(arrivals_between_trains(od, tt)(0, 0, 1), 1000.0, 1e-6);
}

TEST(ArrivalsBetweenTrains, SimultaneousTrainsSplitNothing) {
  const Line line = support::simple_line(2);
  const auto od = single_pair(2, 0, 1, SigmoidSum({{1000.0, 720.0, 0.05}}));
  const auto tt = support::timetable_for(line, {800.0, 800.0}, {1, 1});
  EXPECT_EQ(arrivals_between_trains(od, tt)(1, 0, 1), 0.0);
}

TEST(ArrivalsBetweenTrains, ZeroDemand) {
  const Line line = support::simple_line(3);
  const auto tt = support::timetable_for(line, {100.0, 500.0}, {1, 1});
  const auto n = arrivals_between_trains(ODDemandMatrix(3), tt);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) EXPECT_EQ(n(k, i, j), 0.0);
}

TEST(ArrivalsBetweenTrains, RejectsUnorderedDepartures) {
  const Line line = support::simple_line(2);
  Timetable tt = support::timetable_for(line, {500.0, 100.0}, {1, 1});
  EXPECT_THROW(arrivals_between_trains(ODDemandMatrix(2), tt), std::invalid_argument);
}

TEST(ArrivalsBetweenTrains, InactiveTrainsDoNotCount) {
  const Line line = support::simple_line(2);
  const auto od = single_pair(2, 0, 1, support::point_masses({{50.0, 7}, {150.0, 3}}));
  Timetable tt = support::timetable_for(line, {100.0, 200.0}, {1, 1});
  tt.trains.push_back(make_train(line, 2880.0, TrainConfig{1, 1.0}, false));
  tt = propagate_departures(tt, line);
  const auto n = arrivals_between_trains(od, tt);
  EXPECT_EQ(n.trains(), 2);
  EXPECT_EQ(n(0, 0, 1), 7.0);
  EXPECT_EQ(n(1, 0, 1), 3.0);
}

TEST(LoadPassengers, AmpleCapacity) {
  const Line line = support::simple_line(2);
  const auto od = single_pair(2, 0, 1, support::point_masses({{50.0, 60}}));
  const auto fs = load_passengers(od, support::timetable_for(line, {100.0}, {100}), line);
  EXPECT_EQ(fs.boarded_new(0, 0, 1), 60.0);
  EXPECT_EQ(fs.missed_new(0, 0, 1), 0.0);
  EXPECT_EQ(fs.free_capacity(0, 0), 40.0);
  EXPECT_EQ(fs.leftover(0, 0, 1), 0.0);
}

TEST(LoadPassengers, CapacityBinds) {
  const Line line = support::simple_line(2);
  const auto od = single_pair(2, 0, 1, support::point_masses({{50.0, 60}}));
  const auto fs = load_passengers(od, support::timetable_for(line, {100.0}, {40}), line);
  EXPECT_EQ(fs.boarded(0, 0, 1), 40.0);
  EXPECT_EQ(fs.missed_new(0, 0, 1), 20.0);
  EXPECT_EQ(fs.free_capacity(0, 0), 0.0);
  EXPECT_EQ(fs.leftover(0, 0, 1), 20.0);
}

TEST(LoadPassengers, FullTrainPassesIntermediateStation) {
  const Line line = support::simple_line(3);
  ODDemandMatrix od(3);
  od.set(0, 2, support::point_masses({{10.0, 50}}));
  od.set(1, 2, support::point_masses({{20.0, 30}}));
  const auto fs = load_passengers(od, support::timetable_for(line, {100.0, 200.0}, {50, 50}), line);
  EXPECT_EQ(fs.alighting_at_destination(0, 1), 0.0);
  EXPECT_EQ(fs.boarding_at_origin(0, 1), 0.0);
  EXPECT_EQ(fs.free_capacity(0, 1), 0.0);
  EXPECT_EQ(fs.waiting_at_origin(1, 1), fs.waiting_at_origin(0, 1) + fs.arrivals_at_origin(0, 1));
  EXPECT_EQ(fs.waiting_at_origin(1, 1), 30.0);
  EXPECT_EQ(fs.boarded_waiting(1, 1, 2), 30.0);
}

TEST(LoadPassengers, BacklogBoardsBeforeNewArrivals) {
  const Line line = support::simple_line(2);
  const auto od = single_pair(2, 0, 1, support::point_masses({{50.0, 30}, {150.0, 30}}));
  const auto fs = load_passengers(od, support::timetable_for(line, {100.0, 200.0}, {20, 20}), line);
  EXPECT_EQ(fs.waiting(1, 0, 1), 10.0);
  EXPECT_EQ(fs.boarded_waiting(1, 0, 1), 10.0);
  EXPECT_EQ(fs.boarded_new(1, 0, 1), 10.0);
  EXPECT_EQ(fs.missed_new(1, 0, 1), 20.0);
}

TEST(LoadPassengers, ProportionalRationingAcrossDestinations) {
  const Line line = support::simple_line(3);
  ODDemandMatrix od(3);
  od.set(0, 1, support::point_masses({{10.0, 30}}));
  od.set(0, 2, support::point_masses({{10.0, 10}}));
  const auto fs = load_passengers(od, support::timetable_for(line, {100.0}, {20}), line);
  EXPECT_DOUBLE_EQ(fs.boarded(0, 0, 1), 15.0);
  EXPECT_DOUBLE_EQ(fs.boarded(0, 0, 2), 5.0);
}

TEST(LoadPassengers, SkippedStationsNeitherBoardNorAlight) {
  const Line line = support::simple_line(3);
  ODDemandMatrix od(3);
  od.set(0, 1, support::point_masses({{10.0, 4}}));
  od.set(0, 2, support::point_masses({{10.0, 6}}));
  od.set(1, 2, support::point_masses({{10.0, 5}}));
  Train t = make_train(line, 100.0, TrainConfig{100, 1.0});
  t.stops[1] = false;
  const Timetable tt = propagate_departures(Timetable{{t}}, line);
  const auto fs = load_passengers(od, tt, line);
  EXPECT_EQ(fs.boarded(0, 0, 1), 0.0);  // destination skipped
  EXPECT_EQ(fs.boarded(0, 0, 2), 6.0);
  EXPECT_EQ(fs.boarded(0, 1, 2), 0.0);
  EXPECT_EQ(fs.alighting_at_destination(0, 1), 0.0);
  EXPECT_EQ(fs.leftover(0, 0, 1), 4.0);
  EXPECT_EQ(fs.leftover(0, 1, 2), 5.0);
}

TEST(LoadPassengers, RejectsStationMismatch) {
  const Line line = support::simple_line(3);
  EXPECT_THROW(load_passengers(ODDemandMatrix(2), support::timetable_for(line, {100.0}, {1}), line),
               std::invalid_argument);
}

TEST(LoadPassengers, InvariantsOnRandomInstances) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng, 2 + trial % 5, 1 + trial % 6);
    const auto fs = load_passengers(in.od, in.tt, in.line);
    expect_consistent(fs, in.tt, in.od, 1e-9);
  }
}

TEST(LoadPassengers, MatchesIndividualPassengerSimulation) {
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int s = 2 + static_cast<int>(rng() % 2);
    const int trains = 1 + static_cast<int>(rng() % 3);
    const Line line = support::simple_line(s);
    std::vector<support::Passenger> people;
    ODDemandMatrix od(s);
    for (int i = 0; i < s; ++i)
      for (int j = i + 1; j < s; ++j) {
        std::vector<std::pair<double, int>> masses;
        const int instants = static_cast<int>(rng() % 5);
        for (int m = 0; m < instants; ++m) {
          const double at = static_cast<double>(1 + rng() % 200);
          const int count = static_cast<int>(rng() % 9);
          masses.push_back({at, count});
          for (int c = 0; c < count; ++c) people.push_back({i, j, at});
        }
        std::map<double, int> merged;
        for (auto [at, c] : masses) merged[at] += c;
        std::vector<std::pair<double, int>> unique(merged.begin(), merged.end());
        if (!unique.empty()) od.set(i, j, support::point_masses(unique));
      }
    std::vector<double> t;
    std::vector<int> caps;
    for (int q = 0; q < trains; ++q) {
      t.push_back(static_cast<double>(rng() % 200) + 0.5);
      caps.push_back(static_cast<int>(rng() % 12));
    }
    std::sort(t.begin(), t.end());
    const auto tt = support::timetable_for(line, t, caps);
    std::vector<std::vector<double>> dep;
    for (const auto& tr : tt.trains) dep.push_back(tr.departure);

    const auto fs = load_passengers(od, tt, line, PassengerMode::integer);
    const auto oracle = support::simulate_passengers(people, s, dep, caps);
    for (int q = 0; q < trains; ++q) {
      for (int i = 0; i < s; ++i) {
        for (int j = i + 1; j < s; ++j) {
          const std::tuple key{q, i, j};
          ASSERT_EQ(fs.arrivals(q, i, j), oracle.arrivals.at(key)) << "trial " << trial;
          ASSERT_EQ(fs.waiting(q, i, j), oracle.waiting.at(key)) << "trial " << trial;
          ASSERT_EQ(fs.boarded_new(q, i, j), oracle.boarded_new.at(key)) << "trial " << trial;
          ASSERT_EQ(fs.boarded_waiting(q, i, j), oracle.boarded_waiting.at(key)) << "trial " << trial;
          ASSERT_EQ(fs.missed_new(q, i, j), oracle.missed_new.at(key)) << "trial " << trial;
          ASSERT_EQ(fs.missed_waiting(q, i, j), oracle.missed_waiting.at(key)) << "trial " << trial;
          ASSERT_EQ(fs.boarded(q, i, j), oracle.boarded.at(key)) << "trial " << trial;
        }
        ASSERT_EQ(fs.free_capacity(q, i), oracle.free_capacity.at({q, i})) << "trial " << trial;
      }
    }
    ++compared;
  }
  EXPECT_EQ(compared, 300);
}

TEST(RealizedStopTimes, NoBoardingMeansMinimumDwell) {
  Line line = support::simple_line(2);
  line.min_stop = 0.3;
  line.max_stop = 2.0;
  line.flow_rate = 0.01;
  const auto tt = support::timetable_for(line, {100.0}, {10});
  const auto fs = load_passengers(ODDemandMatrix(2), tt, line);
  EXPECT_DOUBLE_EQ(realized_stop_times(fs, tt, line)[0][0], 0.3);
}

TEST(RealizedStopTimes, SmallestUpperBound) {
  Line line = support::simple_line(3);
  line.min_stop = 0.3;
  line.max_stop = 2.0;
  line.flow_rate = 0.01;
  ODDemandMatrix od(3);
  od.set(0, 2, support::point_masses({{10.0, 50}}));
  od.set(1, 2, support::point_masses({{10.0, 50}}));
  const auto tt = support::timetable_for(line, {100.0}, {250});
  const auto fs = load_passengers(od, tt, line);
  ASSERT_EQ(fs.free_capacity(0, 0), 200.0);
  ASSERT_EQ(fs.boarding_at_origin(0, 1), 50.0);
  EXPECT_DOUBLE_EQ(realized_stop_times(fs, tt, line)[0][1], 0.8);
  EXPECT_DOUBLE_EQ(fs.stop_time(0, 1), 0.8);
  // Station 1 uses the full capacity as its free-capacity bound.
  EXPECT_DOUBLE_EQ(fs.stop_time(0, 0), 0.8);
}

TEST(RealizedStopTimes, SkippedStationIsZero) {
  Line line = support::simple_line(3);
  line.min_stop = 0.3;
  line.max_stop = 2.0;
  Train t = make_train(line, 100.0, TrainConfig{10, 1.0});
  t.stops[1] = false;
  const Timetable tt = propagate_departures(Timetable{{t}}, line);
  const auto fs = load_passengers(ODDemandMatrix(3), tt, line);
  EXPECT_EQ(realized_stop_times(fs, tt, line)[0][1], 0.0);
}

TEST(Awt, EvenHeadwaysUniformArrivalsHalfHeadway) {
  const double h = 12.0, horizon = 120.0;
  for (double spacing : {1.0, 0.25}) {
    const Line line = support::simple_line(2, 10.0, 1.0, horizon);
    const auto od = single_pair(2, 0, 1, support::uniform_demand(5.0, 0.0, horizon, spacing));
    std::vector<double> t;
    std::vector<int> c;
    for (double x = h; x <= horizon + 1e-9; x += h) {
      t.push_back(x);
      c.push_back(1000);
    }
    const auto tt = support::timetable_for(line, t, c);
    const auto fs = load_passengers(od, tt, line);
    const auto a = awt(fs, tt, od, horizon);
    EXPECT_EQ(a.waiting_component, 0.0);
    EXPECT_NEAR(a.total_awt, h / 2.0, 1e-6);
  }
}

TEST(Awt, SingleTrainAtHorizon) {
  const double horizon = 60.0;
  const Line line = support::simple_line(2, 10.0, 1.0, horizon);
  const SigmoidSum f = support::uniform_demand(10.0, 0.0, horizon, 0.5);
  const auto od = single_pair(2, 0, 1, f);
  const auto tt = support::timetable_for(line, {horizon}, {10000});
  const auto a = awt(load_passengers(od, tt, line), tt, od, horizon);
  // Mean of (T - t) under the arrival density.
  const double num = support::integrate([&](double t) { return (horizon - t) * f.density(t); }, 0.0, horizon, 1e-9);
  EXPECT_NEAR(a.total_awt, num / f.interval(0.0, horizon), 0.05);
  EXPECT_NEAR(a.total_awt, horizon / 2.0, 0.05);
}

TEST(Awt, TwoTrainToy) {
  const Line line = support::simple_line(2);
  const auto od = single_pair(2, 0, 1, support::point_masses({{10.0, 4}, {60.0, 6}}));
  const auto tt = support::timetable_for(line, {50.0, 100.0}, {10, 10});
  const auto a = awt(load_passengers(od, tt, line), tt, od, 1440.0);
  EXPECT_EQ(a.waiting_component, 0.0);
  EXPECT_DOUBLE_EQ(a.total_awt, 0.5 * (50.0 * 4 + 50.0 * 6) / 10.0);
}

TEST(Awt, BacklogTermAndDecomposition) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng, 3 + trial % 3, 2 + trial % 4);
    const auto fs = load_passengers(in.od, in.tt, in.line);
    if (!(in.od.total_interval(0.0, in.line.horizon) > 0.0)) continue;
    const auto a = awt(fs, in.tt, in.od, in.line.horizon);
    double w = 0.0, n = 0.0;
    for (int i = 0; i + 1 < fs.stations(); ++i) {
      double prev = 0.0;
      for (int q = 0; q < fs.trains(); ++q) {
        const double t = in.tt.trains[fs.train_ids[q]].departure[i];
        for (int j = i + 1; j < fs.stations(); ++j) {
          w += (t - prev) * fs.waiting(q, i, j);
          n += (t - prev) * fs.arrivals(q, i, j);
        }
        prev = t;
      }
    }
    EXPECT_NEAR(a.waiting_component, w, 1e-9 * (1.0 + w));
    EXPECT_NEAR(a.arrival_component, 0.5 * n, 1e-9 * (1.0 + n));
    EXPECT_NEAR(a.total_awt, (w + 0.5 * n) / a.total_demand, 1e-9 * (1.0 + a.total_awt));
  }
}

TEST(Awt, UnservedPassengersChargedUntilDeactivation) {
  const double horizon = 100.0;
  const Line line = support::simple_line(2, 10.0, 1.0, horizon);
  const auto od = single_pair(2, 0, 1, support::point_masses({{10.0, 10}, {80.0, 4}}));
  const auto tt = support::timetable_for(line, {50.0}, {6});
  const auto fs = load_passengers(od, tt, line);
  const auto plain = awt(fs, tt, od, horizon);
  EXPECT_DOUBLE_EQ(plain.total_awt, 0.5 * 50.0 * 10 / 14.0);
  EXPECT_DOUBLE_EQ(plain.unserved, 8.0);
  const auto charged = awt(fs, tt, od, horizon, UnservedCost::until_deactivation);
  // 4 left behind wait from 50 to 200; 4 later arrivals cost half the gap.
  EXPECT_DOUBLE_EQ(charged.total_awt, (0.5 * 50.0 * 10 + 150.0 * 4 + 0.5 * 150.0 * 4) / 14.0);
}

TEST(Awt, RejectsZeroDemand) {
  const Line line = support::simple_line(2);
  const auto tt = support::timetable_for(line, {100.0}, {1});
  const ODDemandMatrix od(2);
  EXPECT_THROW(awt(load_passengers(od, tt, line), tt, od, 1440.0), std::invalid_argument);
}

TEST(Realize, FixedPointIsSelfConsistent) {
  Line line = support::simple_line(4, 3.0);
  line.min_stop = 0.3;
  line.max_stop = 2.0;
  line.flow_rate = 0.01;
  line.safety_headway = 2.0;
  ODDemandMatrix od(4);
  od.set(0, 3, SigmoidSum({{400.0, 300.0, 0.05}}));
  od.set(1, 2, SigmoidSum({{300.0, 320.0, 0.05}}));
  od.set(2, 3, SigmoidSum({{100.0, 350.0, 0.05}}));
  const auto tt = support::timetable_for(line, {280.0, 300.0, 330.0, 360.0}, {3, 3, 3, 3}, 40.0);
  const auto r = realize(od, tt, line, {.repair_headways = true});
  EXPECT_TRUE(r.converged);
  const auto v = validate(r.timetable, line);
  EXPECT_TRUE(v.feasible());
  const auto again = load_passengers(od, r.timetable, line);
  for (int q = 0; q < again.trains(); ++q)
    for (int i = 0; i < again.stations(); ++i)
      EXPECT_NEAR(again.stop_time(q, i), r.timetable.trains[again.train_ids[q]].stop_time[i], 1e-6);
  expect_consistent(r.flow, r.timetable, od, 1e-9);
}

TEST(RepairHeadways, ShiftsFollowerWholeTrajectory) {
  Line line = support::simple_line(3);
  line.safety_headway = 2.0;
  Timetable tt = support::timetable_for(line, {100.0, 100.5}, {1, 1});
  repair_headways(tt, line);
  EXPECT_GE(tt.trains[1].departure[0], 102.0);
  EXPECT_TRUE(validate(tt, line).feasible());
}
