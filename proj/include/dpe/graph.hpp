#pragma once

// Time-varying weighted digraphs over a fixed sensor set. The adjacency
// orientation matches the combination step of the estimators: entry (i, j)
// is the weight sensor i applies to sensor j's message, so a_ij > 0 means
// the edge (j, i) is present, i.e. j sends to i.

#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpe/linalg.hpp"

namespace dpe {

struct WeightedDigraph {
  int n = 0;
  Mat adjacency;  // n x n, non-negative

  WeightedDigraph() = default;
  explicit WeightedDigraph(Mat a) : n(a.rows), adjacency(std::move(a)) {
    if (adjacency.rows != adjacency.cols) throw std::invalid_argument("digraph: adjacency not square");
  }

  // edge j -> i present
  bool has_edge(int from, int to) const { return adjacency(to, from) > 0.0; }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

// Checks Assumption-1 style structural properties: non-negative entries,
// row/column sums equal to 1 when the doubly stochastic flag is set
// (tolerance 1e-12), and a floor on the positive weights including the
// self-loops when min_weight > 0 is declared.
inline ValidationReport validate(const WeightedDigraph& g, bool require_doubly_stochastic,
                                 double min_weight = 0.0) {
  ValidationReport rep;
  const int n = g.n;
  const Mat& A = g.adjacency;
  auto add = [&rep](const std::string& s) { rep.violations.push_back(s); };
  constexpr double kSumTol = 1e-12;

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = A(i, j);
      if (v < 0.0) {
        std::ostringstream os;
        os << "negative entry (" << i << "," << j << ") = " << v;
        add(os.str());
      } else if (min_weight > 0.0 && v > 0.0 && v < min_weight) {
        std::ostringstream os;
        os << "positive entry (" << i << "," << j << ") = " << v << " below minimum weight " << min_weight;
        add(os.str());
      }
    }
    if (min_weight > 0.0 && A(i, i) < min_weight) {
      std::ostringstream os;
      os << "self-loop weight (" << i << "," << i << ") = " << A(i, i) << " below minimum weight "
         << min_weight;
      add(os.str());
    }
  }
  if (require_doubly_stochastic) {
    for (int i = 0; i < n; ++i) {
      double rs = 0.0, cs = 0.0;
      for (int j = 0; j < n; ++j) {
        rs += A(i, j);
        cs += A(j, i);
      }
      if (std::abs(rs - 1.0) > kSumTol) {
        std::ostringstream os;
        os << "row " << i << " sums to " << rs;
        add(os.str());
      }
      if (std::abs(cs - 1.0) > kSumTol) {
        std::ostringstream os;
        os << "column " << i << " sums to " << cs;
        add(os.str());
      }
    }
  }
  return rep;
}

// A schedule is a pure function of the time index; periodic schedules
// declare their period so whole-horizon statements reduce to one period.
struct TopologySchedule {
  int n = 0;
  std::int64_t period = 0;        // 0 = time-invariant
  int connectivity_horizon = 0;   // declared h of the joint-connectivity assumption
  double min_weight = 0.0;        // declared floor on positive weights, 0 = undeclared
  std::function<WeightedDigraph(std::int64_t)> rule;

  WeightedDigraph at(std::int64_t k) const {
    if (!rule) throw std::logic_error("topology schedule has no rule");
    WeightedDigraph g = rule(k);
    if (g.n != n) throw std::logic_error("topology schedule produced wrong sensor count");
    return g;
  }
};

inline TopologySchedule constant_schedule(WeightedDigraph g, int horizon_hint = 0, double min_weight = 0.0) {
  TopologySchedule s;
  s.n = g.n;
  s.period = 1;
  s.connectivity_horizon = horizon_hint;
  s.min_weight = min_weight;
  s.rule = [g = std::move(g)](std::int64_t) { return g; };
  return s;
}

inline TopologySchedule periodic_schedule(std::vector<WeightedDigraph> graphs, int horizon_hint = 0,
                                          double min_weight = 0.0) {
  if (graphs.empty()) throw std::invalid_argument("periodic schedule: no graphs");
  TopologySchedule s;
  s.n = graphs.front().n;
  s.period = static_cast<std::int64_t>(graphs.size());
  s.connectivity_horizon = horizon_hint;
  s.min_weight = min_weight;
  for (const auto& g : graphs)
    if (g.n != s.n) throw std::invalid_argument("periodic schedule: mixed sensor counts");
  s.rule = [gs = std::move(graphs)](std::int64_t k) {
    const std::int64_t p = static_cast<std::int64_t>(gs.size());
    return gs[static_cast<std::size_t>(((k % p) + p) % p)];
  };
  return s;
}

// Union over [k1, k2]: edge set union, adjacency summed entrywise.
inline WeightedDigraph union_graph(const TopologySchedule& s, std::int64_t k1, std::int64_t k2) {
  if (k1 > k2) throw std::invalid_argument("union_graph: k1 > k2");
  Mat acc = s.at(k1).adjacency;
  for (std::int64_t k = k1 + 1; k <= k2; ++k) acc = acc + s.at(k).adjacency;
  return WeightedDigraph(std::move(acc));
}

namespace detail {

// Reachability from `start` following edges j -> i (a_ij > 0), on the graph
// itself or its transpose. Weights are thresholded at exactly > 0.
inline std::vector<char> reach(const Mat& A, int start, bool transpose) {
  const int n = A.rows;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (seen[v]) continue;
      const double w = transpose ? A(u, v) : A(v, u);  // forward: u sends to v iff a_vu > 0
      if (w > 0.0) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace detail

// Strongly connected components count equal to one, computed as full
// forward plus backward reachability from node 0.
inline bool is_strongly_connected(const WeightedDigraph& g) {
  if (g.n == 0) return false;
  if (g.n == 1) return true;
  const auto fwd = detail::reach(g.adjacency, 0, false);
  const auto bwd = detail::reach(g.adjacency, 0, true);
  for (int i = 0; i < g.n; ++i)
    if (!fwd[i] || !bwd[i]) return false;
  return true;
}

// Joint connectivity over windows [k, k+h]: every window in one period (for
// periodic schedules) or in the declared evaluation window must have a
// strongly connected union graph.
inline bool is_jointly_connected(const TopologySchedule& s, int h,
                                 std::optional<std::int64_t> eval_window = std::nullopt) {
  if (h < 0) throw std::invalid_argument("is_jointly_connected: negative horizon");
  std::int64_t first = 0, last = 0;  // inclusive range of window starts
  if (s.period > 0) {
    first = 0;
    last = s.period - 1;
  } else if (eval_window) {
    if (*eval_window <= h) throw std::invalid_argument("is_jointly_connected: window shorter than horizon");
    first = 0;
    last = *eval_window - h - 1;
  } else {
    throw std::invalid_argument("is_jointly_connected: non-periodic schedule requires an evaluation window");
  }
  for (std::int64_t k = first; k <= last; ++k)
    if (!is_strongly_connected(union_graph(s, k, k + h))) return false;
  return true;
}

// Phi_A(k, t) = A(t) A(t-1) ... A(k). The shortest supported product is the
// single factor A(k); the empty-product convention is intentionally not
// provided.
inline Mat transition_matrix(const TopologySchedule& s, std::int64_t k, std::int64_t t) {
  if (k > t) throw std::invalid_argument("transition_matrix: k > t");
  Mat prod = s.at(k).adjacency;
  for (std::int64_t j = k + 1; j <= t; ++j) prod = s.at(j).adjacency * prod;
  return prod;
}

// Temporally ordered hop sequence i = i_{k1} -> ... -> i_{k2} = j with the
// edge (i_k, i_{k+1}) present in E(k); self-loops count whenever a_ii > 0.
inline bool has_sequential_dynamic_path(const TopologySchedule& s, int i, int j, std::int64_t k1,
                                        std::int64_t k2) {
  if (i < 0 || i >= s.n || j < 0 || j >= s.n)
    throw std::invalid_argument("has_sequential_dynamic_path: sensor index out of range");
  if (k1 > k2) throw std::invalid_argument("has_sequential_dynamic_path: k1 > k2");
  std::vector<char> frontier(s.n, 0);
  frontier[i] = 1;
  for (std::int64_t k = k1; k < k2; ++k) {
    const Mat& A = s.at(k).adjacency;
    std::vector<char> next(s.n, 0);
    for (int u = 0; u < s.n; ++u) {
      if (!frontier[u]) continue;
      for (int v = 0; v < s.n; ++v)
        if (A(v, u) > 0.0) next[v] = 1;  // u sends to v
    }
    frontier.swap(next);
  }
  return frontier[j] != 0;
}

// Smallest H such that every entry of Phi_A(k, k+H) is at least
// a_lower^H for all window starts k in one period. Left-multiplication by a
// row-stochastic factor preserves entrywise lower bounds, so the property
// extends to all tau >= H once it holds at tau = H.
inline std::optional<int> uniform_positivity_horizon(const TopologySchedule& s, double a_lower,
                                                     int h_max) {
  if (a_lower <= 0.0 || a_lower > 1.0)
    throw std::invalid_argument("uniform_positivity_horizon: a_lower must be in (0,1]");
  if (s.period <= 0)
    throw std::invalid_argument("uniform_positivity_horizon: requires a periodic schedule");
  for (int H = 1; H <= h_max; ++H) {
    const double bound = std::pow(a_lower, H);
    bool ok = true;
    for (std::int64_t k = 0; k < s.period && ok; ++k) {
      const Mat prod = transition_matrix(s, k, k + H);
      for (double e : prod.a) {
        if (e < bound) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return H;
  }
  return std::nullopt;
}

}  // namespace dpe
