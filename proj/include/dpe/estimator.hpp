#pragma once

// Diffusion estimators on the mixed scalar regressions. Each step combines
// neighborhood estimates through the doubly stochastic weights and adapts
// every parameter dimension with the shared scalar regressor:
//
//   combine:  thetabar_i = sum_j a_ij thetahat_j
//   adapt:    thetahat_i^l <- thetabar_i^l
//               + alpha * delta_i / (mu_i + delta_i^2) * (ybar_i^l - delta_i thetabar_i^l)
//
// CTA runs combine-then-adapt, ATC adapts first and combines the adapted
// values, Isolated skips combination entirely. All n*d updates read the
// pre-step state (synchronous semantics); dimensions are decoupled and
// processed in ascending order.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpe/drem.hpp"
#include "dpe/graph.hpp"
#include "dpe/linalg.hpp"

namespace dpe {

enum class Variant { Cta, Atc, Isolated };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Cta: return "cta";
    case Variant::Atc: return "atc";
    case Variant::Isolated: return "isolated";
  }
  return "?";
}

// alpha(k) = min(1, c / (k + k0)^p) with p in (1/2, 1]: monotone
// non-increasing, alpha in (0, 1], divergent sum, convergent squared sum.
// The constant family violates the squared-sum condition and exists only for
// diagnostics.
struct StepsizeSchedule {
  enum class Family { PowerLaw, Constant };
  Family family = Family::PowerLaw;
  double c = 1.0;
  double k0 = 1.0;
  double p = 1.0;

  static StepsizeSchedule power_law(double c, double k0, double p) {
    if (c <= 0.0) throw std::invalid_argument("stepsize: c must be positive");
    if (k0 < 0.0) throw std::invalid_argument("stepsize: k0 must be >= 0");
    if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("stepsize: p must lie in (1/2, 1]");
    return StepsizeSchedule{Family::PowerLaw, c, k0, p};
  }

  static StepsizeSchedule constant(double c) {
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("stepsize: constant value must lie in (0, 1]");
    return StepsizeSchedule{Family::Constant, c, 1.0, 0.0};
  }

  bool square_summable() const { return family == Family::PowerLaw; }

  double alpha(std::int64_t k) const {
    if (k < 0) throw std::invalid_argument("stepsize: negative time");
    if (family == Family::Constant) return c;
    const double base = static_cast<double>(k) + k0;
    if (base <= 0.0) return 1.0;  // k = 0 with k0 = 0: the clamp applies
    return std::min(1.0, c / std::pow(base, p));
  }
};

struct EstimatorState {
  Mat estimates;  // n x d, row i = sensor i's estimate
  Vec mu;         // per-sensor mu_i > 0
  Variant variant = Variant::Cta;
  std::int64_t k = 0;

  int n() const { return estimates.rows; }
  int d() const { return estimates.cols; }

  void check() const {
    if (static_cast<int>(mu.size()) != n()) throw std::invalid_argument("estimator state: mu size mismatch");
    for (double m : mu)
      if (!(m > 0.0)) throw std::invalid_argument("estimator state: mu entries must be positive");
  }
};

namespace detail {

inline void check_step_inputs(const EstimatorState& state, const WeightedDigraph& A,
                              const std::vector<DremWindow>& windows, double alpha) {
  if (A.n != state.n()) throw std::invalid_argument("diffusion step: topology size mismatch");
  if (static_cast<int>(windows.size()) != state.n())
    throw std::invalid_argument("diffusion step: window count mismatch");
  for (const auto& w : windows)
    if (w.d() != state.d()) throw std::invalid_argument("diffusion step: window dimension mismatch");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("diffusion step: alpha outside (0, 1]");
  const auto rep = validate(A, /*require_doubly_stochastic=*/true);
  if (!rep.valid()) throw std::invalid_argument("diffusion step: adjacency not doubly stochastic: " + rep.violations.front());
}

// Scalar gain and contraction sanity for one sensor. The per-dimension
// contraction factor 1 - alpha delta^2 / (mu + delta^2) must stay in (0, 1].
inline double sensor_gain(double delta, double mu, double alpha) {
  const double g = delta / (mu + delta * delta);
  const double contraction = 1.0 - alpha * delta * g;
  if (!(contraction > 0.0 && contraction <= 1.0))
    throw std::logic_error("diffusion step: contraction factor escaped (0, 1]");
  return g;
}

}  // namespace detail

// Combine-then-adapt. Returns the post-step state; input state is the
// synchronous pre-step snapshot.
inline EstimatorState cta_step(const EstimatorState& state, const WeightedDigraph& A,
                               const std::vector<DremWindow>& windows, double alpha) {
  detail::check_step_inputs(state, A, windows, alpha);
  const int n = state.n();
  const int d = state.d();
  EstimatorState next = state;
  const Mat combined = A.adjacency * state.estimates;
  next.estimates = combined;
  for (int i = 0; i < n; ++i) {
    const double delta = windows[static_cast<std::size_t>(i)].delta();
    const double gain = detail::sensor_gain(delta, state.mu[static_cast<std::size_t>(i)], alpha);
    if (delta == 0.0) continue;  // zero innovation either way
    const Vec yb = windows[static_cast<std::size_t>(i)].ybar();
    for (int l = 0; l < d; ++l) {
      const double base = combined(i, l);
      next.estimates(i, l) = base + alpha * gain * (yb[static_cast<std::size_t>(l)] - delta * base);
    }
  }
  next.k = state.k + 1;
  return next;
}

// Adapt-then-combine: same adaptation applied to the pre-step estimates,
// then one mixing pass over the adapted values.
inline EstimatorState atc_step(const EstimatorState& state, const WeightedDigraph& A,
                               const std::vector<DremWindow>& windows, double alpha) {
  detail::check_step_inputs(state, A, windows, alpha);
  const int n = state.n();
  const int d = state.d();
  Mat adapted = state.estimates;
  for (int i = 0; i < n; ++i) {
    const double delta = windows[static_cast<std::size_t>(i)].delta();
    const double gain = detail::sensor_gain(delta, state.mu[static_cast<std::size_t>(i)], alpha);
    if (delta == 0.0) continue;
    const Vec yb = windows[static_cast<std::size_t>(i)].ybar();
    for (int l = 0; l < d; ++l) {
      const double base = state.estimates(i, l);
      adapted(i, l) = base + alpha * gain * (yb[static_cast<std::size_t>(l)] - delta * base);
    }
  }
  EstimatorState next = state;
  next.estimates = A.adjacency * adapted;
  next.k = state.k + 1;
  return next;
}

// Adaptation without any mixing; the non-cooperative baseline.
inline EstimatorState isolated_step(const EstimatorState& state, const std::vector<DremWindow>& windows,
                                    double alpha) {
  WeightedDigraph eye(Mat::identity(state.n()));
  return cta_step(state, eye, windows, alpha);
}

inline EstimatorState diffusion_step(const EstimatorState& state, const WeightedDigraph& A,
                                     const std::vector<DremWindow>& windows, double alpha) {
  switch (state.variant) {
    case Variant::Cta: return cta_step(state, A, windows, alpha);
    case Variant::Atc: return atc_step(state, A, windows, alpha);
    case Variant::Isolated: return isolated_step(state, windows, alpha);
  }
  throw std::logic_error("diffusion step: unknown variant");
}

// Error-dynamics cross-check for the CTA step: with G = I - alpha L Delta
// and L = diag(delta_i / (mu_i + delta_i^2)), the error obeys
//   Thetatilde^l(k+1) = G A Thetatilde^l(k) + alpha L W^l(k),
// where W^l stacks the mixed noises wbar_i^l = (adj(Phi_i) w_i-stack)_l.
// Requires the simulation ground truth (theta and raw noise stacks); used
// only to verify the step implementation.
inline Mat error_recursion_oracle(const EstimatorState& state, const WeightedDigraph& A,
                                  const std::vector<DremWindow>& windows, double alpha, const Vec& theta,
                                  const std::vector<Vec>& raw_noise_stacks) {
  const int n = state.n();
  const int d = state.d();
  if (static_cast<int>(theta.size()) != d) throw std::invalid_argument("error oracle: theta dimension mismatch");
  if (static_cast<int>(raw_noise_stacks.size()) != n)
    throw std::invalid_argument("error oracle: noise stack count mismatch");

  Vec gain(static_cast<std::size_t>(n));
  Vec delta(static_cast<std::size_t>(n));
  Mat wbar(n, d);
  for (int i = 0; i < n; ++i) {
    delta[static_cast<std::size_t>(i)] = windows[static_cast<std::size_t>(i)].delta();
    gain[static_cast<std::size_t>(i)] =
        delta[static_cast<std::size_t>(i)] /
        (state.mu[static_cast<std::size_t>(i)] + delta[static_cast<std::size_t>(i)] * delta[static_cast<std::size_t>(i)]);
    const Vec w = windows[static_cast<std::size_t>(i)].mix(raw_noise_stacks[static_cast<std::size_t>(i)]);
    for (int l = 0; l < d; ++l) wbar(i, l) = w[static_cast<std::size_t>(l)];
  }

  Mat err = state.estimates;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < d; ++l) err(i, l) -= theta[static_cast<std::size_t>(l)];

  const Mat mixed = A.adjacency * err;
  Mat next(n, d);
  for (int i = 0; i < n; ++i) {
    const double g = 1.0 - alpha * gain[static_cast<std::size_t>(i)] * delta[static_cast<std::size_t>(i)];
    for (int l = 0; l < d; ++l)
      next(i, l) = g * mixed(i, l) + alpha * gain[static_cast<std::size_t>(i)] * wbar(i, l);
  }
  return next;
}

}  // namespace dpe
