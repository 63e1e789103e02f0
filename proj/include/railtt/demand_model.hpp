#ifndef RAILTT_DEMAND_MODEL_HPP
#define RAILTT_DEMAND_MODEL_HPP

// Continuous cumulative origin-destination demand. Each OD pair carries a
// cumulative curve F(t) = sum_r K_r / (1 + exp(-beta_r (t - x_r))) in
// passengers, with t in minutes from midnight.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "railtt/detail/parallel.hpp"

namespace railtt {

/// Logistic function evaluated without overflow for any finite argument.
inline double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// logistic(b) - logistic(a), computed on the side of the curve where the
/// values are small so that differences near the asymptote keep precision.
inline double logistic_difference(double a, double b) noexcept {
  if (a >= 0.0 && b >= 0.0) return logistic(-a) - logistic(-b);
  return logistic(b) - logistic(a);
}

/// One demand peak: asymptotic value K (passengers), time shift x (minutes)
/// and slope beta (1/minutes). All three are non-negative.
struct SigmoidTerm {
  double asymptote = 0.0;
  double shift = 0.0;
  double slope = 0.0;

  bool operator==(const SigmoidTerm&) const = default;
};

class SigmoidSum {
 public:
  SigmoidSum() = default;

  explicit SigmoidSum(std::vector<SigmoidTerm> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
      if (!(t.asymptote >= 0.0) || !(t.shift >= 0.0) || !(t.slope >= 0.0)) {
        throw std::invalid_argument("sigmoid term parameters must be non-negative and finite");
      }
      if (!std::isfinite(t.asymptote) || !std::isfinite(t.shift) || !std::isfinite(t.slope)) {
        throw std::invalid_argument("sigmoid term parameters must be non-negative and finite");
      }
    }
  }

  const std::vector<SigmoidTerm>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }

  /// Cumulative passengers arrived by time t.
  double operator()(double t) const noexcept {
    double sum = 0.0;
    for (const auto& term : terms_) sum += term.asymptote * logistic(term.slope * (t - term.shift));
    return sum;
  }

  /// Arrival rate F'(t) in passengers per minute.
  double density(double t) const noexcept {
    double sum = 0.0;
    for (const auto& term : terms_) {
      const double s = logistic(term.slope * (t - term.shift));
      sum += term.asymptote * term.slope * s * (1.0 - s);
    }
    return sum;
  }

  /// Passengers arriving in [t1, t2]; throws when t1 > t2.
  double interval(double t1, double t2) const {
    if (t1 > t2) throw std::invalid_argument("interval demand requires t1 <= t2");
    double sum = 0.0;
    for (const auto& term : terms_) {
      sum += term.asymptote *
             logistic_difference(term.slope * (t1 - term.shift), term.slope * (t2 - term.shift));
    }
    return sum;
  }

  /// Value approached as t grows without bound.
  double total_mass() const noexcept {
    double sum = 0.0;
    for (const auto& term : terms_) sum += term.asymptote;
    return sum;
  }

  bool operator==(const SigmoidSum&) const = default;

 private:
  std::vector<SigmoidTerm> terms_;
};

inline double cumulative_at(const SigmoidSum& f, double t) noexcept { return f(t); }
inline double interval_demand(const SigmoidSum& f, double t1, double t2) { return f.interval(t1, t2); }

/// Upper-triangular OD matrix for one travel direction. Stations are
/// 0-based in memory; absent pairs carry zero demand.
class ODDemandMatrix {
 public:
  using Key = std::pair<int, int>;

  ODDemandMatrix() = default;
  explicit ODDemandMatrix(int n_stations) : n_stations_(n_stations) {
    if (n_stations < 2) throw std::invalid_argument("OD matrix needs at least two stations");
  }

  int n_stations() const noexcept { return n_stations_; }

  void set(int origin, int destination, SigmoidSum curve) {
    if (origin < 0 || destination >= n_stations_ || origin >= destination) {
      throw std::invalid_argument("OD entry (" + std::to_string(origin + 1) + "," +
                                  std::to_string(destination + 1) +
                                  ") must satisfy 1 <= i < j <= stations");
    }
    entries_[{origin, destination}] = std::move(curve);
  }

  const SigmoidSum* find(int origin, int destination) const noexcept {
    auto it = entries_.find({origin, destination});
    return it == entries_.end() ? nullptr : &it->second;
  }

  double cumulative(int origin, int destination, double t) const noexcept {
    const auto* f = find(origin, destination);
    return f ? (*f)(t) : 0.0;
  }

  double interval(int origin, int destination, double t1, double t2) const {
    const auto* f = find(origin, destination);
    if (t1 > t2) throw std::invalid_argument("interval demand requires t1 <= t2");
    return f ? f->interval(t1, t2) : 0.0;
  }

  /// Sum over all pairs of the demand in [t1, t2].
  double total_interval(double t1, double t2) const {
    double sum = 0.0;
    for (const auto& [key, f] : entries_) sum += f.interval(t1, t2);
    return sum;
  }

  const std::map<Key, SigmoidSum>& entries() const noexcept { return entries_; }

  bool operator==(const ODDemandMatrix&) const = default;

 private:
  int n_stations_ = 0;
  std::map<Key, SigmoidSum> entries_;
};

struct DemandSample {
  double t = 0.0;
  double count = 0.0;
};

/// Raw cumulative counts for one OD pair (0-based stations).
struct DemandSampleSeries {
  int origin = 0;
  int destination = 1;
  std::vector<DemandSample> samples;

  /// Returns a description of the first broken invariant, if any.
  std::optional<std::string> check() const {
    if (origin < 0 || destination <= origin) return "series must satisfy origin < destination";
    for (std::size_t n = 0; n < samples.size(); ++n) {
      if (!std::isfinite(samples[n].t) || !std::isfinite(samples[n].count)) {
        return "sample " + std::to_string(n + 1) + " is not finite";
      }
      if (samples[n].count < 0.0) return "sample " + std::to_string(n + 1) + " has a negative count";
      if (n == 0) continue;
      if (!(samples[n].t > samples[n - 1].t)) {
        return "sample times must be strictly increasing (sample " + std::to_string(n + 1) + ")";
      }
      if (samples[n].count < samples[n - 1].count) {
        return "cumulative counts must be non-decreasing (sample " + std::to_string(n + 1) + ")";
      }
    }
    return std::nullopt;
  }
};

struct FitOptions {
  int starts = 8;
  int max_iterations = 500;
  double stationarity_tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct FitReport {
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

struct SigmoidFit {
  SigmoidSum curve;
  FitReport report;
};

namespace detail {

// Parameter layout: [K_0, beta_0, x_0, K_1, beta_1, x_1, ...].
class SigmoidLeastSquares {
 public:
  SigmoidLeastSquares(std::span<const DemandSample> samples, int terms, double cap)
      : samples_(samples), terms_(terms), cap_(cap) {}

  double sse(const Eigen::VectorXd& p) const {
    double s = 0.0;
    for (const auto& smp : samples_) {
      const double r = model(p, smp.t) - smp.count;
      s += r * r;
    }
    return s;
  }

  double model(const Eigen::VectorXd& p, double t) const {
    double f = 0.0;
    for (int r = 0; r < terms_; ++r) f += p[3 * r] * logistic(p[3 * r + 1] * (t - p[3 * r + 2]));
    return f;
  }

  // Fills J^T J and J^T r for the residual r = model - data.
  void normal_equations(const Eigen::VectorXd& p, Eigen::MatrixXd& jtj, Eigen::VectorXd& jtr) const {
    const int n = 3 * terms_;
    jtj.setZero(n, n);
    jtr.setZero(n);
    Eigen::VectorXd row(n);
    for (const auto& smp : samples_) {
      double f = 0.0;
      for (int r = 0; r < terms_; ++r) {
        const double k = p[3 * r], beta = p[3 * r + 1], x = p[3 * r + 2];
        const double s = logistic(beta * (smp.t - x));
        const double ds = s * (1.0 - s);
        f += k * s;
        row[3 * r] = s;
        row[3 * r + 1] = k * ds * (smp.t - x);
        row[3 * r + 2] = -k * ds * beta;
      }
      const double res = f - smp.count;
      jtj.selfadjointView<Eigen::Lower>().rankUpdate(row);
      jtr += res * row;
    }
    jtj = jtj.selfadjointView<Eigen::Lower>();
  }

  // Non-negativity, then uniform scaling of the asymptotes onto the cap.
  void project(Eigen::VectorXd& p) const {
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::max(0.0, p[i]);
    double ksum = 0.0;
    for (int r = 0; r < terms_; ++r) ksum += p[3 * r];
    if (ksum > cap_ && ksum > 0.0) {
      const double scale = cap_ / ksum;
      for (int r = 0; r < terms_; ++r) p[3 * r] *= scale;
    }
  }

  // Infinity norm of p - P(p - grad), grad being the SSE gradient.
  double projected_gradient_norm(const Eigen::VectorXd& p, const Eigen::VectorXd& jtr) const {
    Eigen::VectorXd q = p - 2.0 * jtr;
    project(q);
    return (p - q).cwiseAbs().maxCoeff();
  }

  // Directions a step may take: a variable at zero that the gradient pushes
  // negative is frozen, and an active cap that the gradient pushes against
  // keeps the sum of the free asymptotes fixed.
  Eigen::MatrixXd step_basis(const Eigen::VectorXd& p, const Eigen::VectorXd& jtr) const {
    const int n = static_cast<int>(p.size());
    std::vector<int> free, ks;
    for (int i = 0; i < n; ++i)
      if (!(p[i] <= 0.0 && jtr[i] > 0.0)) free.push_back(i);
    double ksum = 0.0, push = 0.0;
    for (int r = 0; r < terms_; ++r) ksum += p[3 * r];
    for (int i : free)
      if (i % 3 == 0) {
        ks.push_back(i);
        push -= jtr[i];
      }
    const bool capped = !ks.empty() && ksum >= cap_ * (1.0 - 1e-12) && push > 0.0;
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(free.size()) - (capped ? 1 : 0));
    int c = 0;
    for (int i : free) {
      if (capped && i == ks.back()) continue;
      z(i, c) = 1.0;
      if (capped && i % 3 == 0) z(ks.back(), c) = -1.0;
      ++c;
    }
    return z;
  }

  int terms() const noexcept { return terms_; }

 private:
  std::span<const DemandSample> samples_;
  int terms_;
  double cap_;
};

struct LmOutcome {
  Eigen::VectorXd params;
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline LmOutcome levenberg_marquardt(const SigmoidLeastSquares& problem, Eigen::VectorXd p,
                                     const FitOptions& opt) {
  problem.project(p);
  double sse = problem.sse(p);
  double lambda = 1e-3;
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd jtj(n, n), z, zjz;
  Eigen::VectorXd jtr(n), zjr;
  LmOutcome out;
  int it = 0;
  bool fresh = true;
  for (; it < opt.max_iterations; ++it) {
    if (fresh) {
      problem.normal_equations(p, jtj, jtr);
      z = problem.step_basis(p, jtr);
      zjz = z.transpose() * jtj * z;
      zjr = z.transpose() * jtr;
      fresh = false;
    }
    if (z.cols() == 0 ||
        problem.projected_gradient_norm(p, jtr) < opt.stationarity_tolerance * (1.0 + sse)) {
      out.converged = true;
      break;
    }
    bool improved = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = zjz;
      for (Eigen::Index d = 0; d < a.rows(); ++d) a(d, d) += lambda * std::max(zjz(d, d), 1e-12);
      Eigen::VectorXd step = z * a.ldlt().solve(-zjr);
      Eigen::VectorXd candidate = p + step;
      problem.project(candidate);
      const double cand_sse = problem.sse(candidate);
      if (std::isfinite(cand_sse) && cand_sse < sse) {
        const double gain = sse - cand_sse;
        p = std::move(candidate);
        sse = cand_sse;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        fresh = true;
        if (gain <= 1e-15 * (1.0 + sse)) lambda = 1e16;  // no meaningful progress left
        break;
      }
      lambda *= 4.0;
    }
    if (!improved || lambda >= 1e16) {
      // Numerically stalled: no projected step lowers the objective.
      problem.normal_equations(p, jtj, jtr);
      out.converged = true;
      break;
    }
  }
  out.params = std::move(p);
  out.sse = sse;
  out.iterations = it;
  return out;
}

// Start point: peaks of the smoothed finite-difference arrival rate, each
// carrying the mass between its neighbouring rate minima.
inline Eigen::VectorXd peak_seed(std::span<const DemandSample> samples, int terms, double cap,
                                 double horizon) {
  const std::size_t m = samples.size() - 1;
  std::vector<double> mid(m), rate(m);
  for (std::size_t n = 0; n < m; ++n) {
    mid[n] = 0.5 * (samples[n].t + samples[n + 1].t);
    rate[n] = (samples[n + 1].count - samples[n].count) / (samples[n + 1].t - samples[n].t);
  }
  const std::size_t half = std::max<std::size_t>(1, m / 100);
  std::vector<double> smooth(m);
  for (std::size_t n = 0; n < m; ++n) {
    const std::size_t lo = n >= half ? n - half : 0;
    const std::size_t hi = std::min(m - 1, n + half);
    double s = 0.0;
    for (std::size_t q = lo; q <= hi; ++q) s += rate[q];
    smooth[n] = s / static_cast<double>(hi - lo + 1);
  }
  std::vector<std::size_t> peaks;
  for (std::size_t n = 0; n < m; ++n) {
    const bool left = n == 0 || smooth[n] > smooth[n - 1];
    const bool right = n + 1 == m || smooth[n] >= smooth[n + 1];
    if (left && right && smooth[n] > 0.0) peaks.push_back(n);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::size_t a, std::size_t b) { return smooth[a] > smooth[b]; });
  if (peaks.size() > static_cast<std::size_t>(terms)) peaks.resize(terms);
  std::sort(peaks.begin(), peaks.end());

  Eigen::VectorXd p(3 * terms);
  const double t0 = samples.front().t, t1 = samples.back().t;
  const double span = std::max(t1 - t0, 1.0);
  const double total = std::max(cap, 1e-12);
  int r = 0;
  for (std::size_t q = 0; q < peaks.size(); ++q, ++r) {
    // Mass between valleys on either side of this peak.
    std::size_t lo = q == 0 ? 0 : peaks[q - 1];
    std::size_t hi = q + 1 == peaks.size() ? m - 1 : peaks[q + 1];
    std::size_t left = peaks[q], right = peaks[q];
    for (std::size_t n = lo; n < peaks[q]; ++n)
      if (smooth[n] <= smooth[left]) left = n;
    for (std::size_t n = peaks[q]; n <= hi; ++n)
      if (smooth[n] <= smooth[right]) right = n;
    if (q == 0) left = 0;
    if (q + 1 == peaks.size()) right = m - 1;
    const double mass = std::max(samples[right + 1].count - samples[left].count, total / (4.0 * terms));
    const double k = std::min(mass, total);
    p[3 * r] = k;
    p[3 * r + 1] = std::max(4.0 * smooth[peaks[q]] / std::max(k, 1e-12), 1e-4);
    p[3 * r + 2] = std::max(0.0, mid[peaks[q]]);
  }
  // Fewer distinct peaks than terms: spread the rest evenly.
  for (int extra = 0; r < terms; ++r, ++extra) {
    p[3 * r] = total / (2.0 * terms);
    p[3 * r + 1] = 8.0 / span;
    p[3 * r + 2] = std::clamp(t0 + span * (extra + 0.5) / (terms - static_cast<int>(peaks.size())),
                              0.0, std::max(horizon, t1));
  }
  return p;
}

inline SigmoidSum to_curve(const Eigen::VectorXd& p, int terms) {
  std::vector<SigmoidTerm> out;
  out.reserve(terms);
  for (int r = 0; r < terms; ++r) out.push_back({p[3 * r], p[3 * r + 2], p[3 * r + 1]});
  std::sort(out.begin(), out.end(), [](const SigmoidTerm& a, const SigmoidTerm& b) {
    return a.shift < b.shift || (a.shift == b.shift && a.asymptote < b.asymptote);
  });
  return SigmoidSum(std::move(out));
}

}  // namespace detail

/// Bound-constrained least-squares fit of an M-term sigmoid sum to a
/// cumulative series. Damped Gauss-Newton with projection onto
/// {K, beta, x >= 0, sum K <= max count}; multi-start around rate peaks.
inline SigmoidFit fit_sigmoid_sum(const DemandSampleSeries& data, int terms, double horizon,
                                  const FitOptions& options = {}) {
  if (terms < 1) throw std::invalid_argument("fit needs at least one sigmoid term");
  if (auto err = data.check()) throw std::invalid_argument(*err);
  if (data.samples.size() < 3 * static_cast<std::size_t>(terms)) {
    throw std::invalid_argument("fit needs at least 3*M samples");
  }
  const auto& s = data.samples;
  double cap = 0.0;
  for (const auto& smp : s) cap = std::max(cap, smp.count);

  // Constant series: one term holding the constant.
  if (s.front().count == s.back().count) {
    SigmoidFit out;
    const double t_first = s.front().t;
    SigmoidTerm term{cap, 0.0, 0.0};
    if (cap > 0.0) {
      term.shift = std::max(0.0, t_first - 1.0);
      term.slope = 50.0;
    }
    out.curve = SigmoidSum({term});
    double sse = 0.0;
    for (const auto& smp : s) sse += std::pow(out.curve(smp.t) - smp.count, 2);
    out.report = {sse, 0, true, true};
    return out;
  }

  const detail::SigmoidLeastSquares problem(s, terms, cap);
  const Eigen::VectorXd base = detail::peak_seed(s, terms, cap, horizon);
  const double span = std::max(s.back().t - s.front().t, 1.0);

  std::mt19937_64 rng(detail::mix_seed(options.seed, {static_cast<std::uint64_t>(terms),
                                                      static_cast<std::uint64_t>(data.origin),
                                                      static_cast<std::uint64_t>(data.destination)}));
  std::normal_distribution<double> gauss(0.0, 1.0);

  detail::LmOutcome best;
  best.sse = std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  for (int start = 0; start < std::max(1, options.starts); ++start) {
    Eigen::VectorXd p = base;
    if (start > 0) {
      for (int r = 0; r < terms; ++r) {
        p[3 * r] *= std::exp(0.2 * gauss(rng));
        p[3 * r + 1] *= std::exp(0.5 * gauss(rng));
        p[3 * r + 2] += 0.02 * span * gauss(rng);
      }
    }
    auto out = detail::levenberg_marquardt(problem, std::move(p), options);
    total_iterations += out.iterations;
    if (out.sse < best.sse) best = std::move(out);
  }

  SigmoidFit fit;
  fit.curve = detail::to_curve(best.params, terms);
  fit.report = {best.sse, total_iterations, best.converged, false};
  return fit;
}

struct PairFit {
  int origin = 0;
  int destination = 1;
  int terms = 0;
  FitReport report;
};

struct MatrixFitReport {
  std::vector<PairFit> fits;
  std::vector<std::pair<int, int>> missing;

  bool all_converged() const {
    return std::all_of(fits.begin(), fits.end(), [](const PairFit& f) { return f.report.converged; });
  }
};

struct MatrixFit {
  ODDemandMatrix matrix;
  MatrixFitReport report;
};

/// Elbow rule: grow M while it keeps lowering SSE by at least 5 percent.
inline SigmoidFit fit_with_term_selection(const DemandSampleSeries& data, int max_terms,
                                          double horizon, const FitOptions& options = {}) {
  SigmoidFit chosen = fit_sigmoid_sum(data, 1, horizon, options);
  if (chosen.report.degenerate) return chosen;
  // Below this the fit is exact to rounding and relative gains are noise.
  double exact = 0.0;
  for (const auto& smp : data.samples) exact += smp.count * smp.count;
  exact *= 1e-10;
  for (int m = 2; m <= max_terms; ++m) {
    if (data.samples.size() < 3 * static_cast<std::size_t>(m)) break;
    if (chosen.report.sse <= exact) break;
    SigmoidFit next = fit_sigmoid_sum(data, m, horizon, options);
    if (next.report.sse >= 0.95 * chosen.report.sse) break;
    chosen = std::move(next);
  }
  return chosen;
}

inline MatrixFit fit_od_matrix(std::span<const DemandSampleSeries> series, int n_stations,
                               int max_terms, double horizon, const FitOptions& options = {},
                               int workers = 1) {
  if (max_terms < 1) throw std::invalid_argument("max_terms must be at least 1");
  MatrixFit out{ODDemandMatrix(n_stations), {}};
  std::map<std::pair<int, int>, std::size_t> index;
  for (std::size_t n = 0; n < series.size(); ++n) {
    const auto& sr = series[n];
    if (sr.origin < 0 || sr.destination >= n_stations || sr.origin >= sr.destination) {
      throw std::invalid_argument("series pair (" + std::to_string(sr.origin + 1) + "," +
                                  std::to_string(sr.destination + 1) + ") outside the line");
    }
    if (!index.emplace(std::pair{sr.origin, sr.destination}, n).second) {
      throw std::invalid_argument("duplicate series for pair (" + std::to_string(sr.origin + 1) +
                                  "," + std::to_string(sr.destination + 1) + ")");
    }
  }
  std::vector<std::size_t> order;
  for (const auto& [key, n] : index) order.push_back(n);
  std::vector<SigmoidFit> fits(order.size());
  detail::parallel_for(order.size(), workers, [&](std::size_t q) {
    fits[q] = fit_with_term_selection(series[order[q]], max_terms, horizon, options);
  });
  for (std::size_t q = 0; q < order.size(); ++q) {
    const auto& sr = series[order[q]];
    out.report.fits.push_back({sr.origin, sr.destination, static_cast<int>(fits[q].curve.size()),
                               fits[q].report});
    out.matrix.set(sr.origin, sr.destination, std::move(fits[q].curve));
  }
  for (int i = 0; i < n_stations; ++i)
    for (int j = i + 1; j < n_stations; ++j)
      if (!index.contains({i, j})) out.report.missing.emplace_back(i, j);
  return out;
}

}  // namespace railtt

#endif  // RAILTT_DEMAND_MODEL_HPP
