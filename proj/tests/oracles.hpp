#pragma once

// Test-only reference implementations, kept independent of the library's
// computation paths: Laplace-expansion determinants/adjugates, quadratic
// forms through explicit J matrices, and random doubly stochastic matrices
// via alternating row/column normalization.

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpe/graph.hpp"
#include "dpe/linalg.hpp"
#include "dpe/rng.hpp"

namespace oracles {

using dpe::Mat;
using dpe::Vec;

inline Mat drop_row_col(const Mat& m, int row, int col) {
  Mat out(m.rows - 1, m.cols - 1);
  int r2 = 0;
  for (int r = 0; r < m.rows; ++r) {
    if (r == row) continue;
    int c2 = 0;
    for (int c = 0; c < m.cols; ++c) {
      if (c == col) continue;
      out(r2, c2) = m(r, c);
      ++c2;
    }
    ++r2;
  }
  return out;
}

// Laplace expansion along the first row; exponential, fine for d <= 7.
inline double naive_det(const Mat& m) {
  if (m.rows == 1) return m(0, 0);
  double sum = 0.0;
  double sign = 1.0;
  for (int c = 0; c < m.cols; ++c) {
    sum += sign * m(0, c) * naive_det(drop_row_col(m, 0, c));
    sign = -sign;
  }
  return sum;
}

inline Mat naive_adjugate(const Mat& m) {
  const int n = m.rows;
  Mat adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double minor = naive_det(drop_row_col(m, j, i));
      adj(i, j) = (((i + j) % 2) != 0) ? -minor : minor;
    }
  return adj;
}

// x' M x via the explicit matrix, for the Lyapunov decomposition checks.
inline double quad_form(const Vec& x, const Mat& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) s += x[static_cast<std::size_t>(i)] * m(i, j) * x[static_cast<std::size_t>(j)];
  return s;
}

inline Mat averaging_projector(int n) {
  Mat j(n, n, 1.0 / n);
  return j;
}

// Random doubly stochastic matrix by Sinkhorn balancing of a positive
// random matrix; imbalance below 1e-13 after a few hundred sweeps.
inline dpe::WeightedDigraph random_doubly_stochastic(int n, dpe::CounterStream& cs) {
  Mat m(n, n);
  for (double& v : m.a) v = 0.05 + cs.next_uniform();
  for (int sweep = 0; sweep < 500; ++sweep) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      double rs = 0.0;
      for (int j = 0; j < n; ++j) rs += m(i, j);
      for (int j = 0; j < n; ++j) m(i, j) /= rs;
    }
    for (int j = 0; j < n; ++j) {
      double csum = 0.0;
      for (int i = 0; i < n; ++i) csum += m(i, j);
      for (int i = 0; i < n; ++i) m(i, j) /= csum;
      worst = std::max(worst, std::abs(csum - 1.0));
    }
    if (worst < 1e-14) break;
  }
  return dpe::WeightedDigraph(std::move(m));
}

// Convex combination of the identity and random permutation matrices with
// dyadic weights: exactly doubly stochastic, sparse, self-loops everywhere.
inline dpe::WeightedDigraph random_sparse_doubly_stochastic(int n, dpe::CounterStream& cs) {
  auto random_perm = [&cs, n]() {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(cs.next_index(static_cast<std::uint64_t>(i + 1)));
      std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
  };
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) += 0.5;
  const auto p1 = random_perm();
  const auto p2 = random_perm();
  for (int i = 0; i < n; ++i) {
    m(i, p1[static_cast<std::size_t>(i)]) += 0.25;
    m(i, p2[static_cast<std::size_t>(i)]) += 0.25;
  }
  return dpe::WeightedDigraph(std::move(m));
}

inline double min_positive_entry(const Mat& m) {
  double v = 1.0;
  for (double e : m.a)
    if (e > 0.0) v = std::min(v, e);
  return v;
}

}  // namespace oracles
