#include <gtest/gtest.h>

#include <random>

#include "railtt/io.hpp"
#include "railtt/synthetic.hpp"
#include "support.hpp"

using namespace railtt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("railtt_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Values whose shortest decimal form needs all 17 digits.
double awkward(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return std::nextafter(u(rng) * 1000.0, 2000.0);
}

}  // namespace

TEST(Samples, ParsesPairsWithHeader) {
  const auto dir = scratch("samples");
  io::write_file(dir / "s.csv", "origin,destination,t,count\n1,2,0,0\n1,2,10,5\n2,3,0,1\n2,3,5,1.5\n");
  const auto load = io::load_samples(dir / "s.csv");
  ASSERT_EQ(load.series.size(), 2u);
  EXPECT_TRUE(load.diagnostics.empty());
  EXPECT_EQ(load.series[0].origin, 0);
  EXPECT_EQ(load.series[0].destination, 1);
  EXPECT_EQ(load.series[1].samples[1].count, 1.5);
}

TEST(Samples, EmptyFileNamesTheFile) {
  const auto dir = scratch("empty");
  io::write_file(dir / "nothing.csv", "");
  try {
    io::load_samples(dir / "nothing.csv");
    FAIL();
  } catch (const io::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("nothing.csv"), std::string::npos);
  }
}

TEST(Samples, NonMonotoneSeriesIsRejected) {
  const auto dir = scratch("mono");
  io::write_file(dir / "s.csv", "1,2,0,0\n1,2,10,5\n1,2,20,4\n");
  try {
    io::load_samples(dir / "s.csv");
    FAIL();
  } catch (const io::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("non-decreasing"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("(1,2)"), std::string::npos);
  }
}

TEST(Samples, FewMalformedRowsAreReportedWithLineNumbers) {
  const auto dir = scratch("malformed");
  std::string text = "origin,destination,t,count\n";
  for (int n = 0; n < 20; ++n) text += fmt::format("1,2,{},{}\n", n, n);
  text += "1,2,oops,3\n";
  io::write_file(dir / "s.csv", text);
  const auto load = io::load_samples(dir / "s.csv");
  ASSERT_EQ(load.diagnostics.size(), 1u);
  EXPECT_EQ(load.diagnostics[0].line, 22);
  EXPECT_EQ(load.series[0].samples.size(), 20u);
}

TEST(Samples, ManyMalformedRowsAbort) {
  const auto dir = scratch("abort");
  io::write_file(dir / "s.csv", "1,2,0,0\n1,2,1,1\n1,2\nx,2,3,3\n1,2,4,4\n");
  EXPECT_THROW(io::load_samples(dir / "s.csv"), io::InputError);
}

TEST(Samples, WriterRoundTrips) {
  std::mt19937_64 rng(1);
  DemandSampleSeries s{0, 2, {}};
  double c = 0.0;
  for (int n = 0; n < 50; ++n) s.samples.push_back({n * 1.5 + 0.1, c += awkward(rng)});
  const auto dir = scratch("samples_rt");
  io::write_file(dir / "s.csv", io::samples_csv(std::vector{s}));
  const auto back = io::load_samples(dir / "s.csv");
  ASSERT_EQ(back.series.size(), 1u);
  for (std::size_t n = 0; n < s.samples.size(); ++n) {
    EXPECT_EQ(back.series[0].samples[n].t, s.samples[n].t);
    EXPECT_EQ(back.series[0].samples[n].count, s.samples[n].count);
  }
}

TEST(Matrix, RoundTripsBitExactly) {
  std::mt19937_64 rng(2);
  ODDemandMatrix od(4);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) od.set(i, j, SigmoidSum({{awkward(rng), awkward(rng), awkward(rng) / 1e4}}));
  const auto dir = scratch("matrix");
  io::save_matrix(dir / "m.json", od);
  EXPECT_EQ(io::load_matrix(dir / "m.json"), od);
  EXPECT_EQ(io::load_matrix(dir / "m.json"), od);
}

TEST(Matrix, RejectsMissingFields) {
  const auto dir = scratch("matrix_bad");
  io::write_file(dir / "m.json", R"({"stations": 3, "pairs": [{"origin": 1, "terms": []}]})");
  EXPECT_THROW(io::load_matrix(dir / "m.json"), io::InputError);
  EXPECT_THROW(io::load_matrix(dir / "absent.json"), io::InputError);
}

TEST(LineConfig, RoundTrips) {
  Line line = synthetic::corridor_line();
  line.headway_overrides[{2, 4}] = 3.25;
  line.accel_decel = true;
  EXPECT_EQ(io::line_from_json(io::line_json(line), "x"), line);
}

TEST(Timetable, RoundTripsBitExactly) {
  std::mt19937_64 rng(3);
  const Line line = support::simple_line(4);
  Timetable tt;
  for (int k = 0; k < 5; ++k) {
    auto tr = make_train(line, awkward(rng), TrainConfig{1 + k, 40.0}, k < 4);
    tr.stops[1] = k % 2 == 0;
    for (auto& u : tr.unit_time) u = 1.0 + awkward(rng) / 1e4;
    tt.trains.push_back(std::move(tr));
  }
  tt = propagate_departures(std::move(tt), line);
  const auto dir = scratch("timetable");
  io::write_file(dir / "t.csv", io::timetable_csv(tt));
  EXPECT_EQ(io::load_timetable(dir / "t.csv"), tt);
}

TEST(Timetable, MalformedRowNamesFileAndLine) {
  const auto dir = scratch("timetable_bad");
  io::write_file(dir / "t.csv", io::header_line(io::kTimetableHeader) + "1,1,1,1,abc,0.5,1,2,40\n");
  try {
    io::load_timetable(dir / "t.csv");
    FAIL();
  } catch (const io::InputError& e) {
    EXPECT_NE(std::string(e.what()).find("t.csv:2"), std::string::npos);
  }
}

TEST(Flow, RoundTripsBitExactly) {
  const Line line = synthetic::corridor_line();
  const auto od = synthetic::corridor_demand();
  auto tt = support::timetable_for(line, {400.0, 470.0, 900.0, 1100.0}, {3, 2, 2, 4});
  tt.trains.push_back(make_train(line, 2880.0, TrainConfig{0, 40.0}, false));
  tt = propagate_departures(std::move(tt), line);
  const auto fs = load_passengers(od, tt, line);
  const auto dir = scratch("flow");
  io::save_flow(dir, fs);
  EXPECT_EQ(io::load_flow(dir, line.n_stations()), fs);
}

TEST(Points, RoundTripAndTable2Shape) {
  std::mt19937_64 rng(4);
  std::vector<ParetoPoint> pts;
  for (int w : {50, 100})
    for (int n : {1, 5}) {
      ParetoPoint p;
      p.capacity_level = 40 * w;
      p.wagons = w;
      p.train_count = n;
      p.awt = awkward(rng);
      p.asd = awkward(rng) / 10;
      p.alf = awkward(rng) / 10;
      p.avlf = awkward(rng) / 10;
      p.ahlf = awkward(rng) / 10;
      p.dominated = n == 5;
      p.solution_ref = cell_ref(p.capacity_level, n);
      pts.push_back(p);
    }
  const auto dir = scratch("points");
  io::write_file(dir / "p.csv", io::points_csv(pts));
  EXPECT_EQ(io::load_points(dir / "p.csv"), pts);

  const auto report = io::table2_report(pts);
  std::istringstream in(report);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "wagons,trains,ASD,ALF,AVLF,AHLF");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("100,1,", 0), 0u);
  const auto f = io::split(line);
  ASSERT_EQ(f.size(), 6u);
  for (std::size_t c = 2; c < 6; ++c) {
    const auto dot = f[c].find('.');
    ASSERT_NE(dot, std::string_view::npos);
    EXPECT_EQ(f[c].size() - dot - 1, 2u);
  }
}

TEST(Surface, WritesNanForFailedCells) {
  SurfaceGrid g;
  g.capacity_levels = {2000, 4000};
  g.train_counts = {1, 5};
  g.asd = {{1.5, std::numeric_limits<double>::quiet_NaN()}, {2.0, 3.0}};
  EXPECT_EQ(io::surface_text(g, g.asd), "capacity,1,5\n2000,1.5,nan\n4000,2,3\n");
}

TEST(Curve, VertexList) {
  const std::vector<Polyline> lines{{{1.0, 2.0}, {1.5, 3.0}}, {{4.0, 5.0}}};
  EXPECT_EQ(io::curve_csv(lines), "polyline,capacity,trains\n1,1,2\n1,1.5,3\n2,4,5\n");
}
