#pragma once

// Error diagnostics and the Monte Carlo harness. The squared error norm per
// dimension splits as V = V1 + V2 with V1 = n * nu^2 (n times the squared
// mean error, driven down by adaptation) and V2 = sum_i (err_i - nu)^2 (the
// spread across sensors, driven down by mixing). Traces record both, per
// iteration and per dimension, and aggregate across seeded trials with a
// fixed pairwise reduction tree so results do not depend on execution order
// or thread count.

#include <cmath>
#include <cstdint>
#include <future>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dpe/drem.hpp"
#include "dpe/estimator.hpp"
#include "dpe/graph.hpp"
#include "dpe/linalg.hpp"
#include "dpe/model.hpp"
#include "dpe/rng.hpp"

namespace dpe {

struct LyapunovPoint {
  double V = 0.0;
  double V1 = 0.0;
  double V2 = 0.0;
  double nu = 0.0;     // mean estimation error
  double sigma = 0.0;  // variance of estimation errors (= V2)
};

// Per-dimension Lyapunov quantities of an estimate matrix against the true
// parameter.
inline std::vector<LyapunovPoint> lyapunov(const Mat& estimates, const Vec& theta) {
  if (estimates.cols != static_cast<int>(theta.size()))
    throw std::invalid_argument("lyapunov: dimension mismatch");
  const int n = estimates.rows;
  const int d = estimates.cols;
  std::vector<LyapunovPoint> out(static_cast<std::size_t>(d));
  for (int l = 0; l < d; ++l) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += estimates(i, l) - theta[static_cast<std::size_t>(l)];
    mean /= n;
    double spread = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = estimates(i, l) - theta[static_cast<std::size_t>(l)] - mean;
      spread += e * e;
    }
    LyapunovPoint& p = out[static_cast<std::size_t>(l)];
    p.nu = mean;
    p.V1 = n * mean * mean;
    p.V2 = spread;
    p.sigma = spread;
    p.V = p.V1 + p.V2;
  }
  return out;
}

struct OracleResult {
  bool applicable = false;  // premise held, conclusion was checked
  bool passed = true;       // vacuously true when not applicable
  std::string detail;
};

// Near-consensus sign lemma: if the spread is small relative to the total,
// x'(I-J)x <= c x'x with 0 < c < 1/(n+1), then all entries share a sign and
// each x_i^2 >= (1/n)(1 - sqrt(cn/(1-c)))^2 x'Jx.
inline OracleResult lemma2_oracle(const Vec& x, double c, double tol = 1e-12) {
  OracleResult r;
  const int n = static_cast<int>(x.size());
  if (n < 1) throw std::invalid_argument("lemma2: empty vector");
  if (!(c > 0.0 && c < 1.0 / (n + 1))) {
    r.detail = "c outside (0, 1/(n+1))";
    return r;
  }
  double mean = 0.0, total = 0.0;
  for (double v : x) {
    mean += v;
    total += v * v;
  }
  mean /= n;
  double spread = 0.0;
  for (double v : x) spread += (v - mean) * (v - mean);
  if (spread > c * total) {
    r.detail = "spread premise not met";
    return r;
  }
  r.applicable = true;
  bool nonneg = true, neg = true;
  for (double v : x) {
    nonneg = nonneg && v >= 0.0;
    neg = neg && v < 0.0;
  }
  const double scale = std::max(1.0, total);
  if (!nonneg && !neg) {
    r.passed = false;
    r.detail = "entries disagree in sign";
    return r;
  }
  const double xjx = n * mean * mean;
  const double root = 1.0 - std::sqrt(c * n / (1.0 - c));
  const double floor = root * root * xjx / n;
  for (double v : x) {
    if (v * v < floor - tol * scale) {
      r.passed = false;
      r.detail = "entry below the squared-mean floor";
      return r;
    }
  }
  return r;
}

// Doubly stochastic mixing is non-expansive in both the total and the
// spread: x'x >= x'A'Ax and x'(I-J)x >= x'A'(I-J)Ax.
inline OracleResult lemma3_oracle(const Vec& x, const WeightedDigraph& A, double tol = 1e-12) {
  OracleResult r;
  if (A.n != static_cast<int>(x.size())) throw std::invalid_argument("lemma3: dimension mismatch");
  if (!validate(A, /*require_doubly_stochastic=*/true).valid()) {
    r.detail = "matrix not doubly stochastic";
    return r;
  }
  r.applicable = true;
  const int n = A.n;
  const Vec ax = matvec(A.adjacency, x);
  auto spread_of = [n](const Vec& v) {
    double m = 0.0;
    for (double e : v) m += e;
    m /= n;
    double s = 0.0;
    for (double e : v) s += (e - m) * (e - m);
    return s;
  };
  const double scale = std::max(1.0, dot(x, x));
  if (dot(x, x) - dot(ax, ax) < -tol * scale) {
    r.passed = false;
    r.detail = "total energy grew under mixing";
    return r;
  }
  if (spread_of(x) - spread_of(ax) < -tol * scale) {
    r.passed = false;
    r.detail = "spread grew under mixing";
    return r;
  }
  return r;
}

inline double excitation_gain_floor(double alpha, double omega_underbar, double mu) {
  const double q = alpha * omega_underbar / (mu + omega_underbar);
  return (2.0 - q) * q;
}

// Excited-sensor energy drop: whenever delta_i^2 >= omega_underbar, the
// adaptation map G = I - alpha L Delta satisfies
// x'x - x'G'Gx >= zeta_i x_i^2 with zeta_i = (2 - q) q in (0, 1),
// q = alpha omega_underbar / (mu_i + omega_underbar).
inline OracleResult lemma4_oracle(const Vec& x, const Vec& deltas, const Vec& mus, double alpha,
                                  double omega_underbar, double tol = 1e-12) {
  OracleResult r;
  const int n = static_cast<int>(x.size());
  if (static_cast<int>(deltas.size()) != n || static_cast<int>(mus.size()) != n)
    throw std::invalid_argument("lemma4: dimension mismatch");
  if (!(alpha > 0.0 && alpha <= 1.0) || !(omega_underbar > 0.0)) {
    r.detail = "alpha or omega floor outside range";
    return r;
  }
  bool excited = false;
  for (double d : deltas) excited = excited || d * d >= omega_underbar;
  if (!excited) {
    r.detail = "no excited sensor";
    return r;
  }
  r.applicable = true;
  double drop = 0.0;
  for (int i = 0; i < n; ++i) {
    const double di = deltas[static_cast<std::size_t>(i)];
    const double g = 1.0 - alpha * di * di / (mus[static_cast<std::size_t>(i)] + di * di);
    drop += (1.0 - g * g) * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
  }
  const double scale = std::max(1.0, dot(x, x));
  for (int i = 0; i < n; ++i) {
    const double di = deltas[static_cast<std::size_t>(i)];
    if (di * di < omega_underbar) continue;
    const double zeta = excitation_gain_floor(alpha, omega_underbar, mus[static_cast<std::size_t>(i)]);
    if (!(zeta > 0.0 && zeta < 1.0)) {
      r.passed = false;
      r.detail = "zeta escaped (0, 1)";
      return r;
    }
    if (drop < zeta * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)] - tol * scale) {
      r.passed = false;
      r.detail = "energy drop below the excited-sensor floor";
      return r;
    }
  }
  return r;
}

// A fully resolved simulation: every seeded choice (true parameter, initial
// estimates, placements) has already been drawn, so all trials share the
// same initial state and differ only in their observation noise streams.
struct SimSetup {
  std::string name;
  RegressionModel model;
  TopologySchedule topology;
  RegressorSource source;
  Vec mu;
  StepsizeSchedule stepsize;
  Variant variant = Variant::Cta;
  Mat initial_estimates;  // n x d
  std::int64_t horizon = 0;
  std::int64_t pe_window = 0;  // T for excitation scans

  int n() const { return model.n(); }
  int d() const { return model.d(); }

  void check() const {
    model.check();
    if (source.n != n() || source.d != d()) throw std::invalid_argument("setup: source dimensions mismatch");
    if (variant != Variant::Isolated && topology.n != n())
      throw std::invalid_argument("setup: topology size mismatch");
    if (static_cast<int>(mu.size()) != n()) throw std::invalid_argument("setup: mu size mismatch");
    for (double m : mu)
      if (!(m > 0.0)) throw std::invalid_argument("setup: mu entries must be positive");
    if (initial_estimates.rows != n() || initial_estimates.cols != d())
      throw std::invalid_argument("setup: initial estimate shape mismatch");
    if (horizon < 1) throw std::invalid_argument("setup: horizon must be >= 1");
    if (pe_window < 1 || pe_window > horizon) throw std::invalid_argument("setup: pe window out of range");
  }
};

// Per-iteration records, averaged across trials once finalized. Row k holds
// the estimates AFTER the update that consumed the time-k samples, together
// with the alpha(k) and delta_i(k) used by that update.
struct Trace {
  int n = 0;
  int d = 0;
  std::int64_t horizon = 0;
  int trials = 0;
  std::vector<std::uint64_t> seeds;
  Vec alpha;                   // [k]
  Vec V, V1, V2, nu, sigma;    // [k * d + l]
  Vec err;                     // [k * n + i], per-sensor error norm
  Vec delta;                   // [k * n + i]
  Mat final_estimates;         // n x d

  double total_V(std::int64_t k) const {
    double s = 0.0;
    for (int l = 0; l < d; ++l) s += V[static_cast<std::size_t>(k) * d + l];
    return s;
  }
};

namespace detail {

inline Trace make_trace(int n, int d, std::int64_t horizon) {
  Trace t;
  t.n = n;
  t.d = d;
  t.horizon = horizon;
  t.alpha.assign(static_cast<std::size_t>(horizon), 0.0);
  const std::size_t kd = static_cast<std::size_t>(horizon) * d;
  t.V.assign(kd, 0.0);
  t.V1.assign(kd, 0.0);
  t.V2.assign(kd, 0.0);
  t.nu.assign(kd, 0.0);
  t.sigma.assign(kd, 0.0);
  const std::size_t kn = static_cast<std::size_t>(horizon) * n;
  t.err.assign(kn, 0.0);
  t.delta.assign(kn, 0.0);
  t.final_estimates = Mat(n, d);
  return t;
}

inline void add_into(Vec& into, const Vec& other) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += other[i];
}

// Fixed-order elementwise accumulation; the reduction tree calls this with
// left-then-right operands only, keeping float sums independent of thread
// scheduling.
inline void accumulate(Trace& into, const Trace& other) {
  if (into.n != other.n || into.d != other.d || into.horizon != other.horizon)
    throw std::logic_error("trace accumulate: shape mismatch");
  add_into(into.alpha, other.alpha);
  add_into(into.V, other.V);
  add_into(into.V1, other.V1);
  add_into(into.V2, other.V2);
  add_into(into.nu, other.nu);
  add_into(into.sigma, other.sigma);
  add_into(into.err, other.err);
  add_into(into.delta, other.delta);
  add_into(into.final_estimates.a, other.final_estimates.a);
  into.trials += other.trials;
  into.seeds.insert(into.seeds.end(), other.seeds.begin(), other.seeds.end());
}

}  // namespace detail

// One seeded trial. Observation noise is the only seed-dependent input; each
// sensor owns a counter-based stream keyed by (seed, sensor).
inline Trace run_trial(const SimSetup& setup, std::uint64_t seed) {
  setup.check();
  const int n = setup.n();
  const int d = setup.d();
  const std::int64_t K = setup.horizon;

  std::vector<GaussianStream> noise(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    noise[static_cast<std::size_t>(i)] = GaussianStream{derive_key(seed, StreamPurpose::Noise, static_cast<std::uint64_t>(i))};

  std::vector<DremWindow> windows(static_cast<std::size_t>(n), DremWindow(d));
  EstimatorState state{setup.initial_estimates, setup.mu, setup.variant, 0};
  state.check();

  const WeightedDigraph eye(Mat::identity(n));
  Trace tr = detail::make_trace(n, d, K);
  tr.trials = 1;
  tr.seeds = {seed};

  for (std::int64_t k = 0; k < K; ++k) {
    const WeightedDigraph& A = (setup.variant == Variant::Isolated) ? eye : setup.topology.at(k);
    for (int i = 0; i < n; ++i) {
      const Vec phi = setup.source.at(i, k);
      const double y = measure(setup.model, i, phi, noise[static_cast<std::size_t>(i)], k);
      windows[static_cast<std::size_t>(i)].push(phi, y);
      tr.delta[static_cast<std::size_t>(k) * n + i] = windows[static_cast<std::size_t>(i)].delta();
    }
    const double a = setup.stepsize.alpha(k);
    tr.alpha[static_cast<std::size_t>(k)] = a;
    state = diffusion_step(state, A, windows, a);

    const auto lps = lyapunov(state.estimates, setup.model.theta);
    for (int l = 0; l < d; ++l) {
      const std::size_t idx = static_cast<std::size_t>(k) * d + l;
      tr.V[idx] = lps[static_cast<std::size_t>(l)].V;
      tr.V1[idx] = lps[static_cast<std::size_t>(l)].V1;
      tr.V2[idx] = lps[static_cast<std::size_t>(l)].V2;
      tr.nu[idx] = lps[static_cast<std::size_t>(l)].nu;
      tr.sigma[idx] = lps[static_cast<std::size_t>(l)].sigma;
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int l = 0; l < d; ++l) {
        const double e = state.estimates(i, l) - setup.model.theta[static_cast<std::size_t>(l)];
        s += e * e;
      }
      tr.err[static_cast<std::size_t>(k) * n + i] = std::sqrt(s);
    }
  }
  tr.final_estimates = state.estimates;
  return tr;
}

namespace detail {

// Pairwise reduction over the trial index range [lo, hi). The tree shape
// depends only on the range, so sums are bitwise identical no matter how
// many of the top levels run on their own threads.
inline Trace reduce_trials(const SimSetup& setup, std::uint64_t base_seed, int lo, int hi, int par_depth) {
  if (hi - lo == 1) return run_trial(setup, base_seed + static_cast<std::uint64_t>(lo));
  const int mid = lo + (hi - lo) / 2;
  if (par_depth > 0) {
    auto left = std::async(std::launch::async, reduce_trials, std::cref(setup), base_seed, lo, mid,
                           par_depth - 1);
    Trace right = reduce_trials(setup, base_seed, mid, hi, par_depth - 1);
    Trace sum = left.get();
    accumulate(sum, right);
    return sum;
  }
  Trace sum = reduce_trials(setup, base_seed, lo, mid, 0);
  const Trace right = reduce_trials(setup, base_seed, mid, hi, 0);
  accumulate(sum, right);
  return sum;
}

}  // namespace detail

// Runs `trials` trials with seeds base_seed + t and returns across-trial
// means of every per-iteration field. Deterministic for fixed arguments
// regardless of thread count.
inline Trace run_monte_carlo(const SimSetup& setup, int trials, std::uint64_t base_seed,
                             int max_threads = 0) {
  if (trials < 1) throw std::invalid_argument("monte carlo: trials must be >= 1");
  setup.check();
  if (max_threads <= 0) max_threads = static_cast<int>(std::thread::hardware_concurrency());
  if (max_threads < 1) max_threads = 1;
  int depth = 0;
  while ((1 << (depth + 1)) <= max_threads && (1 << (depth + 1)) <= trials) ++depth;
  Trace sum = detail::reduce_trials(setup, base_seed, 0, trials, depth);
  const double inv = 1.0 / static_cast<double>(trials);
  auto scale = [inv](Vec& v) {
    for (double& e : v) e *= inv;
  };
  scale(sum.alpha);
  scale(sum.V);
  scale(sum.V1);
  scale(sum.V2);
  scale(sum.nu);
  scale(sum.sigma);
  scale(sum.err);
  scale(sum.delta);
  scale(sum.final_estimates.a);
  return sum;
}

// Noise-free scalar regressor sequences of a setup: delta depends only on
// the regressors, so excitation scans never need measurements.
inline std::vector<Vec> delta_sequences(const SimSetup& setup, std::int64_t horizon) {
  const int n = setup.n();
  std::vector<Vec> out(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(horizon), 0.0));
  for (int i = 0; i < n; ++i) {
    DremWindow w(setup.d());
    for (std::int64_t k = 0; k < horizon; ++k) {
      w.push(setup.source.at(i, k), 0.0);
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = w.delta();
    }
  }
  return out;
}

}  // namespace dpe
