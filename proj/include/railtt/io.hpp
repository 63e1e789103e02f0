#ifndef RAILTT_IO_HPP
#define RAILTT_IO_HPP

// Text formats for every artifact: demand samples and fitted matrices,
// line configs, timetables, passenger-flow tensors, metric reports and
// sweep outputs. Machine-readable numbers are written in shortest
// round-trip form so a reload gives the same bits.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "json.hpp"
#include "railtt/demand_model.hpp"
#include "railtt/line_model.hpp"
#include "railtt/metrics.hpp"
#include "railtt/optimizer.hpp"
#include "railtt/pareto.hpp"
#include "railtt/passenger_flow.hpp"

namespace railtt::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Unreadable or malformed input; the message names the file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- helpers

inline std::string num(double x) { return fmt::format("{}", x); }

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot write file");
  out << text;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  for (std::size_t start = 0;;) {
    const auto at = line.find(sep, start);
    out.push_back(trim(line.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long> parse_long(std::string_view s) {
  long v = 0;
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Rows of a delimited file with their 1-based line numbers; blank lines
// and '#' comments dropped.
struct Row {
  int line = 0;
  std::vector<std::string_view> fields;
};

inline std::vector<Row> rows(std::string_view text) {
  std::vector<Row> out;
  int n = 0;
  for (std::size_t start = 0; start < text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    ++n;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    out.push_back({n, split(line)});
  }
  return out;
}

// Strict table reader for files this module writes: the header must match
// and every field must parse.
class Table {
 public:
  Table(const fs::path& path, std::vector<std::string> header) : path_(path), text_(read_file(path)) {
    rows_ = rows(text_);
    if (rows_.empty()) throw InputError(path_.string() + ": empty file");
    const auto& h = rows_.front().fields;
    bool ok = h.size() == header.size();
    for (std::size_t c = 0; ok && c < h.size(); ++c) ok = h[c] == header[c];
    if (!ok) throw InputError(path_.string() + ": unexpected header");
    rows_.erase(rows_.begin());
    for (const auto& r : rows_) {
      if (r.fields.size() != header.size()) fail(r, "expected " + std::to_string(header.size()) + " fields");
    }
  }

  const std::vector<Row>& data() const noexcept { return rows_; }

  double real(const Row& r, std::size_t c) const {
    auto v = parse_double(r.fields[c]);
    if (!v) fail(r, "field " + std::to_string(c + 1) + " is not a number");
    return *v;
  }

  long integer(const Row& r, std::size_t c) const {
    auto v = parse_long(r.fields[c]);
    if (!v) fail(r, "field " + std::to_string(c + 1) + " is not an integer");
    return *v;
  }

  [[noreturn]] void fail(const Row& r, const std::string& what) const {
    throw InputError(path_.string() + ":" + std::to_string(r.line) + ": " + what);
  }

 private:
  fs::path path_;
  std::string text_;
  std::vector<Row> rows_;
};

// ---------------------------------------------------------------- demand

struct SampleDiagnostic {
  int line = 0;
  std::string message;
};

struct SampleLoad {
  std::vector<DemandSampleSeries> series;
  std::vector<SampleDiagnostic> diagnostics;  // skipped rows
};

/// Reads `origin,destination,t,count` rows (1-based stations, optional
/// header). Malformed rows are skipped with a diagnostic unless they exceed
/// a tenth of the data rows; each resulting series must be cumulative.
inline SampleLoad load_samples(const fs::path& path) {
  const auto text = read_file(path);
  auto all = rows(text);
  if (all.empty()) throw InputError(path.string() + ": empty file, no samples");
  if (!all.front().fields.empty() && !parse_double(all.front().fields.front())) all.erase(all.begin());
  if (all.empty()) throw InputError(path.string() + ": no sample rows after the header");

  SampleLoad out;
  std::map<std::pair<int, int>, DemandSampleSeries> by_pair;
  for (const auto& r : all) {
    auto bad = [&](std::string msg) { out.diagnostics.push_back({r.line, std::move(msg)}); };
    if (r.fields.size() != 4) {
      bad("expected 4 fields (origin,destination,t,count), found " + std::to_string(r.fields.size()));
      continue;
    }
    const auto o = parse_long(r.fields[0]), d = parse_long(r.fields[1]);
    const auto t = parse_double(r.fields[2]), c = parse_double(r.fields[3]);
    if (!o || !d) {
      bad("station indices must be integers");
      continue;
    }
    if (!t || !c) {
      bad("time and count must be numbers");
      continue;
    }
    if (*o < 1 || *d <= *o) {
      bad("stations must satisfy 1 <= origin < destination");
      continue;
    }
    auto& s = by_pair[{static_cast<int>(*o) - 1, static_cast<int>(*d) - 1}];
    s.origin = static_cast<int>(*o) - 1;
    s.destination = static_cast<int>(*d) - 1;
    s.samples.push_back({*t, *c});
  }
  if (out.diagnostics.size() * 10 > all.size()) {
    std::string msg = fmt::format("{}: {} of {} rows malformed, aborting", path.string(), out.diagnostics.size(),
                                  all.size());
    for (const auto& d : out.diagnostics) msg += fmt::format("\n  line {}: {}", d.line, d.message);
    throw InputError(msg);
  }
  for (auto& [key, s] : by_pair) {
    if (auto err = s.check()) {
      throw InputError(fmt::format("{}: pair ({},{}) rejected: {}", path.string(), key.first + 1, key.second + 1,
                                   *err));
    }
    out.series.push_back(std::move(s));
  }
  return out;
}

inline std::string samples_csv(std::span<const DemandSampleSeries> series) {
  std::string out = "origin,destination,t,count\n";
  for (const auto& s : series)
    for (const auto& smp : s.samples)
      out += fmt::format("{},{},{},{}\n", s.origin + 1, s.destination + 1, num(smp.t), num(smp.count));
  return out;
}

inline json matrix_json(const ODDemandMatrix& od) {
  json pairs = json::array();
  for (const auto& [key, f] : od.entries()) {
    json terms = json::array();
    for (const auto& t : f.terms()) terms.push_back({{"K", t.asymptote}, {"beta", t.slope}, {"x", t.shift}});
    pairs.push_back({{"origin", key.first + 1}, {"destination", key.second + 1}, {"terms", terms}});
  }
  return {{"schema_version", kSchemaVersion}, {"stations", od.n_stations()}, {"pairs", pairs}};
}

inline ODDemandMatrix matrix_from_json(const json& j, const std::string& where) {
  try {
    ODDemandMatrix od(j.at("stations").get<int>());
    for (const auto& p : j.at("pairs")) {
      std::vector<SigmoidTerm> terms;
      for (const auto& t : p.at("terms"))
        terms.push_back({t.at("K").get<double>(), t.at("x").get<double>(), t.at("beta").get<double>()});
      od.set(p.at("origin").get<int>() - 1, p.at("destination").get<int>() - 1, SigmoidSum(std::move(terms)));
    }
    return od;
  } catch (const json::exception& e) {
    throw InputError(where + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(where + ": " + e.what());
  }
}

inline json parse_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline void save_matrix(const fs::path& path, const ODDemandMatrix& od) {
  write_file(path, matrix_json(od).dump(2) + "\n");
}

inline ODDemandMatrix load_matrix(const fs::path& path) { return matrix_from_json(parse_json(path), path.string()); }

inline std::string fit_report_csv(const MatrixFitReport& r) {
  std::string out = "origin,destination,terms,sse,iterations,converged,degenerate\n";
  for (const auto& f : r.fits) {
    out += fmt::format("{},{},{},{},{},{},{}\n", f.origin + 1, f.destination + 1, f.terms, num(f.report.sse),
                       f.report.iterations, int(f.report.converged), int(f.report.degenerate));
  }
  return out;
}

// ---------------------------------------------------------------- line

inline json line_json(const Line& line) {
  json segs = json::array();
  for (const auto& s : line.segments) {
    segs.push_back({{"length_km", s.length_km},
                    {"min_unit_time", s.min_unit_time},
                    {"max_unit_time", s.max_unit_time},
                    {"accel_time", s.accel_time},
                    {"decel_time", s.decel_time}});
  }
  json overrides = json::array();
  for (const auto& [key, h] : line.headway_overrides)
    overrides.push_back({{"station", key.first + 1}, {"train", key.second + 1}, {"minutes", h}});
  return {{"stations", line.station_names},
          {"segments", segs},
          {"safety_headway", line.safety_headway},
          {"headway_overrides", overrides},
          {"min_stop", line.min_stop},
          {"max_stop", line.max_stop},
          {"flow_rate", line.flow_rate},
          {"horizon", line.horizon},
          {"accel_decel", line.accel_decel}};
}

inline Line line_from_json(const json& j, const std::string& where) {
  try {
    Line line;
    line.station_names = j.at("stations").get<std::vector<std::string>>();
    for (const auto& s : j.at("segments")) {
      Segment seg;
      seg.length_km = s.at("length_km").get<double>();
      seg.min_unit_time = s.at("min_unit_time").get<double>();
      seg.max_unit_time = s.value("max_unit_time", seg.min_unit_time);
      seg.accel_time = s.value("accel_time", 0.0);
      seg.decel_time = s.value("decel_time", 0.0);
      line.segments.push_back(seg);
    }
    line.safety_headway = j.value("safety_headway", 0.0);
    for (const auto& o : j.value("headway_overrides", json::array()))
      line.headway_overrides[{o.at("station").get<int>() - 1, o.at("train").get<int>() - 1}] = o.at("minutes");
    line.min_stop = j.value("min_stop", 0.0);
    line.max_stop = j.value("max_stop", 0.0);
    line.flow_rate = j.value("flow_rate", 0.0);
    line.horizon = j.value("horizon", 1440.0);
    line.accel_decel = j.value("accel_decel", false);
    line.check();
    return line;
  } catch (const json::exception& e) {
    throw InputError(where + ": line: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(where + ": line: " + e.what());
  }
}

// ---------------------------------------------------------------- timetable

inline const std::vector<std::string> kTimetableHeader{
    "train", "station", "active", "stops", "departure", "stop_time", "unit_time", "carriages", "capacity_per_carriage"};

/// One row per (train, station); unit_time is the running time per km of
/// the segment leaving the station, empty at the terminus.
inline std::string timetable_csv(const Timetable& tt) {
  std::string out;
  for (std::size_t c = 0; c < kTimetableHeader.size(); ++c) out += (c ? "," : "") + kTimetableHeader[c];
  out += "\n";
  for (int k = 0; k < tt.size(); ++k) {
    const auto& tr = tt.trains[k];
    for (std::size_t i = 0; i < tr.departure.size(); ++i) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", k + 1, i + 1, int(tr.active), int(tr.stops[i]),
                         num(tr.departure[i]), num(tr.stop_time[i]),
                         i < tr.unit_time.size() ? num(tr.unit_time[i]) : std::string(), tr.config.carriages,
                         num(tr.config.capacity_per_carriage));
    }
  }
  return out;
}

inline Timetable load_timetable(const fs::path& path) {
  Table t(path, kTimetableHeader);
  Timetable tt;
  for (const auto& r : t.data()) {
    const long k = t.integer(r, 0), i = t.integer(r, 1);
    if (k < 1 || k > tt.size() + 1) t.fail(r, "train numbers must start at 1 and be contiguous");
    if (k == tt.size() + 1) {
      if (i != 1) t.fail(r, "each train must start at station 1");
      tt.trains.emplace_back();
      tt.trains.back().active = t.integer(r, 2) != 0;
      tt.trains.back().config = {static_cast<int>(t.integer(r, 7)), t.real(r, 8)};
    }
    auto& tr = tt.trains[k - 1];
    if (i != static_cast<long>(tr.departure.size()) + 1) t.fail(r, "stations must be listed in order");
    tr.stops.push_back(t.integer(r, 3) != 0);
    tr.departure.push_back(t.real(r, 4));
    tr.stop_time.push_back(t.real(r, 5));
    if (!r.fields[6].empty()) tr.unit_time.push_back(t.real(r, 6));
  }
  for (const auto& tr : tt.trains) {
    if (tr.unit_time.size() + 1 != tr.departure.size()) {
      throw InputError(path.string() + ": every station but the last needs a unit time");
    }
  }
  return tt;
}

// ---------------------------------------------------------------- flow

inline const std::vector<std::string> kFlowTrainHeader{"position", "train", "capacity"};
inline const std::vector<std::string> kFlowPairHeader{"position", "origin", "destination", "N", "ns", "ne",
                                                      "E",        "es",     "ee",          "S"};
inline const std::vector<std::string> kFlowStationHeader{"position", "station", "NAD", "EAD", "SAD", "NAO",
                                                         "EAO",      "SAO",     "FS",  "stop_time"};
inline const std::vector<std::string> kFlowLeftoverHeader{"origin", "destination", "leftover", "late"};

inline std::string header_line(const std::vector<std::string>& h) {
  std::string out;
  for (std::size_t c = 0; c < h.size(); ++c) out += (c ? "," : "") + h[c];
  return out + "\n";
}

/// Writes flow_trains.csv, flow_pairs.csv, flow_stations.csv and
/// flow_leftover.csv under `dir`.
inline void save_flow(const fs::path& dir, const FlowState& f) {
  const int s = f.stations();
  std::string trains = header_line(kFlowTrainHeader), pairs = header_line(kFlowPairHeader),
              stations = header_line(kFlowStationHeader), left = header_line(kFlowLeftoverHeader);
  for (int q = 0; q < f.trains(); ++q) {
    trains += fmt::format("{},{},{}\n", q + 1, f.train_ids[q] + 1, num(f.capacity[q]));
    for (int i = 0; i < s; ++i) {
      for (int j = i + 1; j < s; ++j) {
        pairs += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", q + 1, i + 1, j + 1, num(f.arrivals(q, i, j)),
                             num(f.boarded_new(q, i, j)), num(f.missed_new(q, i, j)), num(f.waiting(q, i, j)),
                             num(f.boarded_waiting(q, i, j)), num(f.missed_waiting(q, i, j)),
                             num(f.boarded(q, i, j)));
      }
      stations += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", q + 1, i + 1, num(f.arrivals_at_origin(q, i)),
                              num(f.waiting_at_origin(q, i)), num(f.boarding_at_origin(q, i)),
                              num(f.arrivals_to_destination(q, i)), num(f.waiting_to_destination(q, i)),
                              num(f.alighting_at_destination(q, i)), num(f.free_capacity(q, i)),
                              num(f.stop_time(q, i)));
    }
  }
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j) left += fmt::format("{},{},{},{}\n", i + 1, j + 1, num(f.leftover(0, i, j)), num(f.late(0, i, j)));
  write_file(dir / "flow_trains.csv", trains);
  write_file(dir / "flow_pairs.csv", pairs);
  write_file(dir / "flow_stations.csv", stations);
  write_file(dir / "flow_leftover.csv", left);
}

inline FlowState load_flow(const fs::path& dir, int stations) {
  FlowState f;
  Table trains(dir / "flow_trains.csv", kFlowTrainHeader);
  for (const auto& r : trains.data()) {
    if (trains.integer(r, 0) != f.trains() + 1) trains.fail(r, "positions must be contiguous from 1");
    f.train_ids.push_back(static_cast<int>(trains.integer(r, 1)) - 1);
    f.capacity.push_back(trains.real(r, 2));
  }
  const int k = f.trains();
  for (auto* t : {&f.arrivals, &f.boarded_new, &f.missed_new, &f.waiting, &f.boarded_waiting, &f.missed_waiting,
                  &f.boarded})
    *t = PairTensor(k, stations);
  for (auto* t : {&f.arrivals_at_origin, &f.waiting_at_origin, &f.boarding_at_origin, &f.arrivals_to_destination,
                  &f.waiting_to_destination, &f.alighting_at_destination, &f.free_capacity, &f.stop_time})
    *t = StationTensor(k, stations);
  f.leftover = PairTensor(1, stations);
  f.late = PairTensor(1, stations);

  auto index = [&](const Table& t, const Row& r, std::size_t c, int limit) {
    const long v = t.integer(r, c);
    if (v < 1 || v > limit) t.fail(r, "index out of range");
    return static_cast<int>(v) - 1;
  };
  Table pairs(dir / "flow_pairs.csv", kFlowPairHeader);
  for (const auto& r : pairs.data()) {
    const int q = index(pairs, r, 0, k), i = index(pairs, r, 1, stations), j = index(pairs, r, 2, stations);
    PairTensor* fam[] = {&f.arrivals, &f.boarded_new, &f.missed_new, &f.waiting,
                         &f.boarded_waiting, &f.missed_waiting, &f.boarded};
    for (std::size_t c = 0; c < 7; ++c) (*fam[c])(q, i, j) = pairs.real(r, 3 + c);
  }
  Table st(dir / "flow_stations.csv", kFlowStationHeader);
  for (const auto& r : st.data()) {
    const int q = index(st, r, 0, k), i = index(st, r, 1, stations);
    StationTensor* fam[] = {&f.arrivals_at_origin,      &f.waiting_at_origin,        &f.boarding_at_origin,
                            &f.arrivals_to_destination, &f.waiting_to_destination,   &f.alighting_at_destination,
                            &f.free_capacity,           &f.stop_time};
    for (std::size_t c = 0; c < 8; ++c) (*fam[c])(q, i) = st.real(r, 2 + c);
  }
  Table left(dir / "flow_leftover.csv", kFlowLeftoverHeader);
  for (const auto& r : left.data()) {
    const int i = index(left, r, 0, stations), j = index(left, r, 1, stations);
    f.leftover(0, i, j) = left.real(r, 2);
    f.late(0, i, j) = left.real(r, 3);
  }
  return f;
}

inline std::string occupancy_csv(const FlowState& f) {
  std::string out = "train,segment,occupancy,capacity\n";
  for (int q = 0; q < f.trains(); ++q)
    for (int seg = 0; seg + 1 < f.stations(); ++seg)
      out += fmt::format("{},{},{},{}\n", f.train_ids[q] + 1, seg + 1, num(f.occupancy(q, seg)), num(f.capacity[q]));
  return out;
}

// ---------------------------------------------------------------- metrics

inline std::string train_metrics_csv(const TimetableMetrics& m) {
  std::string out = "train,lf,vlf,hlf,sd,peak_load,mean_load,empty,no_arrivals,backlog\n";
  for (const auto& t : m.trains) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", t.train + 1, num(t.lf), num(t.vlf), num(t.hlf), num(t.sd),
                       num(t.peak_load), num(t.mean_load), int(t.empty), int(t.no_arrivals), int(t.backlog));
  }
  return out;
}

inline std::string metrics_report(const TimetableMetrics& m, const AwtBreakdown& a) {
  std::string out = "measure,value\n";
  auto row = [&](std::string_view name, double v) { out += fmt::format("{},{}\n", name, num(v)); };
  row("awt", a.total_awt);
  row("awt_waiting_component", a.waiting_component);
  row("awt_arrival_component", a.arrival_component);
  row("total_demand", a.total_demand);
  row("unserved", a.unserved);
  row("asd", m.asd);
  row("alf", m.alf);
  row("avlf", m.avlf);
  row("ahlf", m.ahlf);
  row("interdeparture_mean", m.interdeparture_mean);
  row("interdeparture_var", m.interdeparture_var);
  if (m.rit_expected_wait) row("rit_expected_wait", *m.rit_expected_wait);
  if (m.awt_rit_gap) row("awt_rit_gap", *m.awt_rit_gap);
  return out;
}

/// Solver statistics; wall time is left out so reruns compare equal.
inline std::string solver_stats(const SolverStats& s) {
  std::string out = fmt::format("evaluations {}\nrestarts {}\nconverged {}\n", s.evaluations, s.restarts,
                                s.converged ? "yes" : "no");
  for (const auto& d : s.explored_patterns) {
    out += "pattern ";
    for (bool b : d) out += b ? '1' : '0';
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- sweep

inline const std::vector<std::string> kPointHeader{"capacity_level", "wagons", "trains", "AWT", "ASD", "ALF",
                                                   "AVLF", "AHLF", "dominated", "pooled_dominated", "solution"};

inline std::string points_csv(std::span<const ParetoPoint> pts) {
  std::string out = header_line(kPointHeader);
  for (const auto& p : pts) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", p.capacity_level, p.wagons, p.train_count, num(p.awt),
                       num(p.asd), num(p.alf), num(p.avlf), num(p.ahlf), int(p.dominated), int(p.pooled_dominated),
                       p.solution_ref);
  }
  return out;
}

inline std::vector<ParetoPoint> load_points(const fs::path& path) {
  Table t(path, kPointHeader);
  std::vector<ParetoPoint> out;
  for (const auto& r : t.data()) {
    ParetoPoint p;
    p.capacity_level = static_cast<int>(t.integer(r, 0));
    p.wagons = static_cast<int>(t.integer(r, 1));
    p.train_count = static_cast<int>(t.integer(r, 2));
    p.awt = t.real(r, 3);
    p.asd = t.real(r, 4);
    p.alf = t.real(r, 5);
    p.avlf = t.real(r, 6);
    p.ahlf = t.real(r, 7);
    p.dominated = t.integer(r, 8) != 0;
    p.pooled_dominated = t.integer(r, 9) != 0;
    p.solution_ref = std::string(r.fields[10]);
    out.push_back(std::move(p));
  }
  return out;
}

/// Summary table: wagons, trains and the four averages in
/// percent at two decimals, wagons descending then trains ascending.
inline std::string table2_report(std::vector<ParetoPoint> pts) {
  std::stable_sort(pts.begin(), pts.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.wagons != b.wagons ? a.wagons > b.wagons : a.train_count < b.train_count;
  });
  std::string out = "wagons,trains,ASD,ALF,AVLF,AHLF\n";
  for (const auto& p : pts)
    out += fmt::format("{},{},{:.2f},{:.2f},{:.2f},{:.2f}\n", p.wagons, p.train_count, p.asd, p.alf, p.avlf, p.ahlf);
  return out;
}

inline std::string failed_cells_csv(std::span<const FailedCell> cells) {
  std::string out = "capacity_level,trains,reason\n";
  for (const auto& c : cells) {
    std::string reason;
    for (char ch : c.reason) reason += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    out += fmt::format("{},{},\"{}\"\n", c.capacity_level, c.train_count, reason);
  }
  return out;
}

/// Grid text: a header of train counts, then one row per capacity level.
inline std::string surface_text(const SurfaceGrid& g, const std::vector<std::vector<double>>& z) {
  std::string out = "capacity";
  for (int n : g.train_counts) out += fmt::format(",{}", n);
  out += "\n";
  for (std::size_t r = 0; r < g.capacity_levels.size(); ++r) {
    out += std::to_string(g.capacity_levels[r]);
    for (double v : z[r]) out += "," + num(v);
    out += "\n";
  }
  return out;
}

inline std::string curve_csv(const std::vector<Polyline>& lines) {
  std::string out = "polyline,capacity,trains\n";
  for (std::size_t l = 0; l < lines.size(); ++l)
    for (const auto& v : lines[l]) out += fmt::format("{},{},{}\n", l + 1, num(v.capacity), num(v.trains));
  return out;
}

}  // namespace railtt::io

#endif  // RAILTT_IO_HPP
