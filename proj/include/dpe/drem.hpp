#pragma once

// Sliding-window regressor extension and mixing. The window stacks the last
// d regressors (newest first) into a square matrix Phi and exposes
//
//   delta = det(Phi)                        the shared scalar regressor,
//   ybar  = adj(Phi) * [y(k) ... y(k-d+1)]' the mixed measurements,
//
// which decouple the d-dimensional problem into d scalar regressions
// ybar^l = delta * theta^l + wbar^l sharing one delta. ybar is always formed
// through the adjugate, never through delta * Phi^{-1}, so singular windows
// need no special casing.
//
// Before d samples have arrived the buffers are zero-padded; the padded rows
// force delta = 0 and the estimators' own delta-gating makes the warm-up
// steps no-ops.

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dpe/linalg.hpp"

namespace dpe {

class DremWindow {
 public:
  explicit DremWindow(int d) : d_(d) {
    if (d < 1) throw std::invalid_argument("drem window: d must be >= 1");
    phi_.assign(static_cast<std::size_t>(d) * d, 0.0);
    y_.assign(static_cast<std::size_t>(d), 0.0);
  }

  int d() const { return d_; }

  // Newest sample becomes row 0; the oldest row falls off.
  void push(const Vec& phi, double y) {
    if (static_cast<int>(phi.size()) != d_) throw std::invalid_argument("drem window: regressor dimension mismatch");
    for (int r = d_ - 1; r > 0; --r) {
      for (int c = 0; c < d_; ++c) phi_[static_cast<std::size_t>(r) * d_ + c] = phi_[static_cast<std::size_t>(r - 1) * d_ + c];
      y_[static_cast<std::size_t>(r)] = y_[static_cast<std::size_t>(r - 1)];
    }
    for (int c = 0; c < d_; ++c) phi_[static_cast<std::size_t>(c)] = phi[static_cast<std::size_t>(c)];
    y_[0] = y;
  }

  // Row l is the regressor from lag l.
  Mat extended_matrix() const {
    Mat m(d_, d_);
    m.a = phi_;
    return m;
  }

  const Vec& measurement_stack() const { return y_; }

  double delta() const { return det_buffer(phi_.data(), d_); }

  // adj(Phi) applied to an arbitrary stack aligned with the window rows;
  // used for ybar and, in diagnostics, for the raw-noise stack.
  Vec mix(const Vec& stack) const {
    if (static_cast<int>(stack.size()) != d_) throw std::invalid_argument("drem window: stack dimension mismatch");
    std::vector<double> adj(static_cast<std::size_t>(d_) * d_);
    adjugate_buffer(phi_.data(), d_, adj.data());
    Vec out(static_cast<std::size_t>(d_), 0.0);
    for (int i = 0; i < d_; ++i) {
      double s = 0.0;
      for (int j = 0; j < d_; ++j) s += adj[static_cast<std::size_t>(i) * d_ + j] * stack[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = s;
    }
    return out;
  }

  Vec ybar() const { return mix(y_); }

  // The d decoupled scalar regression instances (ybar^l, delta), all carrying
  // the same scalar regressor.
  std::vector<std::pair<double, double>> scalar_regressions() const {
    const double dlt = delta();
    const Vec yb = ybar();
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(d_));
    for (int l = 0; l < d_; ++l) out.emplace_back(yb[static_cast<std::size_t>(l)], dlt);
    return out;
  }

 private:
  int d_;
  std::vector<double> phi_;  // d x d row-major, row 0 newest
  Vec y_;                    // y_[r] aligned with row r
};

}  // namespace dpe
