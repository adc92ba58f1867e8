#pragma once

// Cooperative excitation analysis on the scalar regressors delta_i(k): the
// windowed network-wide sum of squares, the per-sensor excitation floor
// omega_underbar = omega / (n T), and the Gram-matrix equivalence between
// delta-level and phi-level excitation with its explicit constants.
//
// Alignment: delta_i(t) is the determinant of the window stacking
// phi_i(t) ... phi_i(t-d+1), so a delta value at time t summarizes the Gram
// matrix over [t-d+1, t]. Scans typically start at t = d-1 to skip the
// zero-padded warm-up; reports carry the scan start so downstream checks can
// account for it.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpe/linalg.hpp"

namespace dpe {

struct ExcitationWitness {
  std::int64_t window_start = 0;
  std::int64_t t = 0;
  int sensor = 0;
};

struct ExcitationReport {
  bool satisfied = false;
  std::int64_t T = 0;
  double omega = 0.0;            // minimum windowed double sum over the scan
  double omega_underbar = 0.0;   // omega / (n T)
  std::int64_t scan_begin = 0;   // first window start scanned
  std::int64_t scan_end = 0;     // last window start scanned (inclusive)
  std::string note;
  std::vector<ExcitationWitness> witness_windows;
};

// Scans every window [k, k+T-1] of the supplied per-sensor delta sequences
// and reports the achieved excitation constant omega (the infimum over
// windows of sum_t sum_i delta_i(t)^2). When omega > 0 it also records, for
// each window, one (t, sensor) whose delta^2 reaches omega / (n T); such a
// witness always exists because a window's n*T terms sum to at least omega.
inline ExcitationReport cooperative_pe_scan(const std::vector<Vec>& deltas, std::int64_t T,
                                            std::int64_t scan_begin = 0, bool collect_witnesses = true) {
  if (deltas.empty()) throw std::invalid_argument("pe scan: no sensors");
  const int n = static_cast<int>(deltas.size());
  const std::int64_t K = static_cast<std::int64_t>(deltas.front().size());
  for (const auto& s : deltas)
    if (static_cast<std::int64_t>(s.size()) != K) throw std::invalid_argument("pe scan: ragged sequences");
  if (T < 1 || T > K) throw std::invalid_argument("pe scan: window length out of range");
  if (scan_begin < 0 || scan_begin > K - T) throw std::invalid_argument("pe scan: bad scan start");

  // Network-wide delta^2 per step, then windowed sums by prefix sums.
  Vec total(static_cast<std::size_t>(K), 0.0);
  for (const auto& s : deltas)
    for (std::int64_t t = 0; t < K; ++t) total[static_cast<std::size_t>(t)] += s[static_cast<std::size_t>(t)] * s[static_cast<std::size_t>(t)];
  Vec prefix(static_cast<std::size_t>(K + 1), 0.0);
  for (std::int64_t t = 0; t < K; ++t) prefix[static_cast<std::size_t>(t + 1)] = prefix[static_cast<std::size_t>(t)] + total[static_cast<std::size_t>(t)];

  ExcitationReport rep;
  rep.T = T;
  rep.scan_begin = scan_begin;
  rep.scan_end = K - T;
  rep.note = "delta at time t covers the regressor window [t-d+1, t]; scan start skips warm-up";

  double omega = std::numeric_limits<double>::infinity();
  for (std::int64_t k = scan_begin; k <= rep.scan_end; ++k)
    omega = std::min(omega, prefix[static_cast<std::size_t>(k + T)] - prefix[static_cast<std::size_t>(k)]);
  rep.omega = omega;
  rep.omega_underbar = omega / (static_cast<double>(n) * static_cast<double>(T));
  rep.satisfied = omega > 0.0;

  if (rep.satisfied && collect_witnesses) {
    for (std::int64_t k = scan_begin; k <= rep.scan_end; ++k) {
      bool found = false;
      for (std::int64_t t = k; t < k + T && !found; ++t) {
        for (int i = 0; i < n && !found; ++i) {
          const double v = deltas[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
          if (v * v >= rep.omega_underbar) {
            rep.witness_windows.push_back({k, t, i});
            found = true;
          }
        }
      }
    }
  }
  return rep;
}

// First (t, sensor) in [k, k+T-1] with delta^2 >= omega_underbar, if any.
inline std::optional<std::pair<std::int64_t, int>> per_sensor_excitation(const std::vector<Vec>& deltas,
                                                                         std::int64_t k, std::int64_t T,
                                                                         double omega_underbar) {
  if (deltas.empty()) throw std::invalid_argument("per-sensor excitation: no sensors");
  const std::int64_t K = static_cast<std::int64_t>(deltas.front().size());
  if (k < 0 || T < 1 || k + T > K) throw std::invalid_argument("per-sensor excitation: window out of range");
  for (std::int64_t t = k; t < k + T; ++t) {
    for (int i = 0; i < static_cast<int>(deltas.size()); ++i) {
      const double v = deltas[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
      if (v * v >= omega_underbar) return std::make_pair(t, i);
    }
  }
  return std::nullopt;
}

// Gram matrix of one sensor's regressors over [t, t+d-1].
inline Mat gram_matrix(const std::vector<Vec>& phis, std::int64_t t, int d) {
  if (t < 0 || t + d > static_cast<std::int64_t>(phis.size()))
    throw std::invalid_argument("gram: window outside supplied sequence");
  const int dim = static_cast<int>(phis[static_cast<std::size_t>(t)].size());
  Mat g(dim, dim);
  for (std::int64_t tau = t; tau < t + d; ++tau) {
    const Vec& p = phis[static_cast<std::size_t>(tau)];
    if (static_cast<int>(p.size()) != dim) throw std::invalid_argument("gram: ragged regressors");
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g(i, j) += p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(j)];
  }
  return g;
}

// True iff sum_{tau=t}^{t+d-1} phi(tau) phi'(tau) >= omega2 * I, i.e. the
// smallest eigenvalue of the window Gram matrix clears omega2.
inline bool gram_excitation_check(const std::vector<Vec>& phis, std::int64_t t, int d, double omega2) {
  return smallest_eigenvalue(gram_matrix(phis, t, d)) >= omega2;
}

// Constants linking the determinant-level and eigenvalue-level excitation
// statements. rho is a uniform bound on the entries of the window Gram
// matrix (for regressor entries bounded by rho_phi, d * rho_phi^2 is such a
// bound): det(Gram) >= omega_underbar implies lambda_min >= omega_underbar /
// (d rho)^{d-1}, and lambda_min >= omega2 implies det(Gram) >= omega2^d.
inline double excitation_eigen_floor(double omega_underbar, int d, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("excitation bounds: rho must be positive");
  if (d < 1) throw std::invalid_argument("excitation bounds: d must be >= 1");
  if (omega_underbar < 0.0) throw std::invalid_argument("excitation bounds: negative omega");
  return omega_underbar / std::pow(static_cast<double>(d) * rho, d - 1);
}

inline double excitation_det_floor(double omega2, int d) {
  if (d < 1) throw std::invalid_argument("excitation bounds: d must be >= 1");
  return std::pow(omega2, d);
}

}  // namespace dpe
