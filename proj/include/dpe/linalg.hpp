#pragma once

// Small dense matrix helpers. Everything here is sized for estimation
// problems with a handful of sensors and parameter dimensions (n, d <= a few
// hundred for matrices, d <= 16 for determinant/adjugate paths), so the
// implementations favor exactness and simplicity over asymptotics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpe {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  friend bool operator==(const Mat& x, const Mat& y) {
    return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
  }
};

inline Mat operator*(const Mat& x, const Mat& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matmul: inner dimensions differ");
  Mat r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i) {
    for (int k = 0; k < x.cols; ++k) {
      const double v = x(i, k);
      if (v == 0.0) continue;
      const double* yr = y.row(k);
      double* rr = r.row(i);
      for (int j = 0; j < y.cols; ++j) rr[j] += v * yr[j];
    }
  }
  return r;
}

inline Mat operator+(const Mat& x, const Mat& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("mat add: shape mismatch");
  Mat r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

inline Vec matvec(const Mat& m, const Vec& v) {
  if (m.cols != static_cast<int>(v.size())) throw std::invalid_argument("matvec: dimension mismatch");
  Vec r(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double* mr = m.row(i);
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += mr[j] * v[j];
    r[i] = s;
  }
  return r;
}

inline Mat transpose(const Mat& m) {
  Mat r(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) r(j, i) = m(i, j);
  return r;
}

inline double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline double max_abs(const Mat& m) {
  double v = 0.0;
  for (double e : m.a) v = std::max(v, std::abs(e));
  return v;
}

namespace detail {

// Determinant of an n x n row-major buffer by in-place Gaussian elimination
// with partial pivoting. Returns exactly 0.0 when a pivot column vanishes,
// which covers duplicated/zero rows without any epsilon.
inline double det_inplace(double* m, int n) {
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(m[col * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(m[r * n + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (piv != col) {
      for (int j = col; j < n; ++j) std::swap(m[piv * n + j], m[col * n + j]);
      det = -det;
    }
    const double p = m[col * n + col];
    det *= p;
    for (int r = col + 1; r < n; ++r) {
      const double f = m[r * n + col] / p;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) m[r * n + j] -= f * m[col * n + j];
    }
  }
  return det;
}

constexpr int kMaxDet = 16;

}  // namespace detail

// Determinant. Closed-form cofactor expressions up to 3x3 (these are exact
// for the degenerate windows that occur in practice), pivoted elimination
// beyond that.
inline double det_buffer(const double* m, int n) {
  switch (n) {
    case 0:
      return 1.0;
    case 1:
      return m[0];
    case 2:
      return m[0] * m[3] - m[1] * m[2];
    case 3:
      return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
             m[2] * (m[3] * m[7] - m[4] * m[6]);
    default: {
      if (n > detail::kMaxDet) throw std::invalid_argument("det: dimension above supported limit");
      double scratch[detail::kMaxDet * detail::kMaxDet];
      std::copy(m, m + static_cast<std::size_t>(n) * n, scratch);
      return detail::det_inplace(scratch, n);
    }
  }
}

inline double det(const Mat& m) {
  if (m.rows != m.cols) throw std::invalid_argument("det: matrix not square");
  return det_buffer(m.a.data(), m.rows);
}

// Adjugate: adj(M) * M = M * adj(M) = det(M) * I, defined for singular M.
// Cofactor formulas up to 3x3; per-entry signed minor determinants beyond.
inline void adjugate_buffer(const double* m, int n, double* out) {
  switch (n) {
    case 1:
      out[0] = 1.0;
      return;
    case 2:
      out[0] = m[3];
      out[1] = -m[1];
      out[2] = -m[2];
      out[3] = m[0];
      return;
    case 3:
      out[0] = m[4] * m[8] - m[5] * m[7];
      out[1] = -(m[1] * m[8] - m[2] * m[7]);
      out[2] = m[1] * m[5] - m[2] * m[4];
      out[3] = -(m[3] * m[8] - m[5] * m[6]);
      out[4] = m[0] * m[8] - m[2] * m[6];
      out[5] = -(m[0] * m[5] - m[2] * m[3]);
      out[6] = m[3] * m[7] - m[4] * m[6];
      out[7] = -(m[0] * m[7] - m[1] * m[6]);
      out[8] = m[0] * m[4] - m[1] * m[3];
      return;
    default: {
      if (n > detail::kMaxDet) throw std::invalid_argument("adjugate: dimension above supported limit");
      double minor[detail::kMaxDet * detail::kMaxDet];
      const int k = n - 1;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          // adj(i,j) = (-1)^{i+j} * minor of M with row j, column i removed
          int mr = 0;
          for (int r = 0; r < n; ++r) {
            if (r == j) continue;
            int mc = 0;
            for (int c = 0; c < n; ++c) {
              if (c == i) continue;
              minor[mr * k + mc] = m[r * n + c];
              ++mc;
            }
            ++mr;
          }
          const double d = detail::det_inplace(minor, k);
          out[i * n + j] = (((i + j) & 1) != 0) ? -d : d;
        }
      }
      return;
    }
  }
}

inline Mat adjugate(const Mat& m) {
  if (m.rows != m.cols) throw std::invalid_argument("adjugate: matrix not square");
  Mat r(m.rows, m.cols);
  adjugate_buffer(m.a.data(), m.rows, r.a.data());
  return r;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
// Convergence: off-diagonal Frobenius norm below `tol`, capped sweep count.
inline Vec jacobi_eigenvalues(Mat m, double tol = 1e-12, int max_sweeps = 100) {
  if (m.rows != m.cols) throw std::invalid_argument("jacobi: matrix not square");
  const int n = m.rows;
  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += m(i, j) * m(i, j);
    return std::sqrt(2.0 * s);
  };
  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double app = m(p, p);
        const double aqq = m(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  Vec ev(n);
  for (int i = 0; i < n; ++i) ev[i] = m(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double smallest_eigenvalue(const Mat& sym, double tol = 1e-12) {
  const Vec ev = jacobi_eigenvalues(sym, tol);
  if (ev.empty()) throw std::invalid_argument("smallest_eigenvalue: empty matrix");
  return ev.front();
}

}  // namespace dpe
