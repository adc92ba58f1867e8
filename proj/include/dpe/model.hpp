#pragma once

// Ground-truth regression model y_i(k) = theta' phi_i(k) + w_i(k) and the
// regressor sources used by the bundled scenarios. Sources are pure
// functions of (sensor, k); noise comes from counter-based streams keyed per
// (trial, sensor), so nothing here carries hidden state between steps.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "dpe/linalg.hpp"
#include "dpe/rng.hpp"

namespace dpe {

struct RegressionModel {
  Vec theta;            // true parameter, d >= 1
  Vec noise_variances;  // per-sensor variance R_i >= 0

  int d() const { return static_cast<int>(theta.size()); }
  int n() const { return static_cast<int>(noise_variances.size()); }

  void check() const {
    if (theta.empty()) throw std::invalid_argument("model: parameter dimension must be >= 1");
    for (double r : noise_variances)
      if (r < 0.0) throw std::invalid_argument("model: negative noise variance");
  }
};

// One noisy scalar observation at time k. Noise-free sensors (R_i = 0)
// return theta' phi exactly and do not touch the stream.
inline double measure(const RegressionModel& m, int sensor, const Vec& phi,
                      const GaussianStream& noise, std::int64_t k) {
  if (static_cast<int>(phi.size()) != m.d()) throw std::invalid_argument("measure: regressor dimension mismatch");
  if (sensor < 0 || sensor >= m.n()) throw std::invalid_argument("measure: sensor index out of range");
  const double clean = dot(m.theta, phi);
  const double r = m.noise_variances[sensor];
  if (r == 0.0) return clean;
  return clean + std::sqrt(r) * noise.at(static_cast<std::uint64_t>(k));
}

struct RegressorSource {
  int n = 0;
  int d = 0;
  double rho = 0.0;  // declared bound on the absolute value of any entry
  std::function<Vec(int sensor, std::int64_t k)> phi;

  Vec at(int sensor, std::int64_t k) const {
    if (sensor < 0 || sensor >= n) throw std::invalid_argument("regressor source: sensor out of range");
    if (k < 0) throw std::invalid_argument("regressor source: negative time");
    return phi(sensor, k);
  }
};

// Explicit per-sensor tables; period 0 means the table must cover every
// queried k.
struct ScriptedTable {
  std::vector<std::vector<Vec>> rows;  // rows[sensor][t]
  std::int64_t period = 0;
};

inline RegressorSource scripted_source(ScriptedTable table) {
  if (table.rows.empty()) throw std::invalid_argument("scripted source: empty table");
  const int n = static_cast<int>(table.rows.size());
  int d = -1;
  double rho = 0.0;
  for (const auto& sensor_rows : table.rows) {
    if (sensor_rows.empty()) throw std::invalid_argument("scripted source: sensor with no entries");
    for (const auto& v : sensor_rows) {
      if (d < 0) d = static_cast<int>(v.size());
      if (static_cast<int>(v.size()) != d) throw std::invalid_argument("scripted source: ragged dimensions");
      for (double e : v) rho = std::max(rho, std::abs(e));
    }
  }
  RegressorSource src;
  src.n = n;
  src.d = d;
  src.rho = rho;
  src.phi = [t = std::move(table)](int sensor, std::int64_t k) {
    const auto& rows = t.rows[static_cast<std::size_t>(sensor)];
    std::int64_t idx = k;
    if (t.period > 0) {
      idx = k % t.period;
      if (idx >= static_cast<std::int64_t>(rows.size()))
        throw std::invalid_argument("scripted source: table shorter than period");
    } else if (idx >= static_cast<std::int64_t>(rows.size())) {
      throw std::invalid_argument("scripted source: undefined (sensor, k)");
    }
    return rows[static_cast<std::size_t>(idx)];
  };
  return src;
}

namespace detail {

inline Vec canonical(int d, int p) {
  Vec e(d, 0.0);
  e[p] = 1.0;
  return e;
}

}  // namespace detail

// Canonical-vector schedule with staggered activation offsets
// {s, m+s, 2m+s, 2m+s+1, ...} for one-based excited sensors s <= m, period n.
// Sensors outside the excited set produce the zero vector.
inline RegressorSource rotating_canonical_source(int n = 30, int d = 5, int excited = 6) {
  if (n < excited || excited < 1 || d < 1) throw std::invalid_argument("rotating canonical source: bad sizes");
  RegressorSource src;
  src.n = n;
  src.d = d;
  src.rho = 1.0;
  src.phi = [n, d, excited](int sensor, std::int64_t k) {
    const int s = sensor + 1;  // one-based in the activation rules
    if (s > excited) return Vec(static_cast<std::size_t>(d), 0.0);
    const int r = static_cast<int>(k % n);
    if (r == s) return detail::canonical(d, 0);
    for (int p = 1; p < d; ++p) {
      const int offset = (p == 1) ? excited : 2 * excited + (p - 2);
      if (r == offset + s) return detail::canonical(d, p);
    }
    return Vec(static_cast<std::size_t>(d), 0.0);
  };
  return src;
}

// Canonical-vector schedule where each excited sensor receives e_1 ... e_d on
// d consecutive steps of its own turn; period excited * d. Consecutive
// activation is what makes the d-sample extended regressor nonsingular once
// per period, so the network satisfies the cooperative excitation condition.
inline RegressorSource turn_canonical_source(int n, int d, int excited) {
  if (n < excited || excited < 1 || d < 1) throw std::invalid_argument("turn canonical source: bad sizes");
  RegressorSource src;
  src.n = n;
  src.d = d;
  src.rho = 1.0;
  src.phi = [n, d, excited](int sensor, std::int64_t k) {
    if (sensor >= excited) return Vec(static_cast<std::size_t>(d), 0.0);
    const std::int64_t period = static_cast<std::int64_t>(excited) * d;
    const std::int64_t r = k % period;
    const std::int64_t lo = static_cast<std::int64_t>(sensor) * d;
    if (r >= lo && r < lo + d) return detail::canonical(d, static_cast<int>(r - lo));
    return Vec(static_cast<std::size_t>(d), 0.0);
  };
  return src;
}

// Seeded sensor placement and random-walk mobility on an integer grid.
// Mobile sensors take one unit step in a uniformly random cardinal direction
// per time step, reflecting at the boundary; steps landing on a target cell
// are resampled. Positions are precomputed for the whole horizon so both the
// regressor source and the communication graph read the same trajectory.
class MobilityModel {
 public:
  struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell& o) const { return x == o.x && y == o.y; }
  };

  MobilityModel(int grid, int n_sensors, int n_mobile, int n_targets, std::int64_t horizon,
                std::uint64_t seed)
      : grid_(grid), n_(n_sensors), mobile_(n_mobile), horizon_(horizon) {
    if (grid < 2 || n_sensors < 1 || n_mobile < 0 || n_mobile > n_sensors || n_targets < 1)
      throw std::invalid_argument("mobility model: bad sizes");
    if (n_targets >= grid * grid) throw std::invalid_argument("mobility model: too many targets");

    CounterStream place{derive_key(seed, StreamPurpose::Placement)};
    while (static_cast<int>(targets_.size()) < n_targets) {
      Cell c = random_cell(place);
      if (!is_target(c)) targets_.push_back(c);
    }
    std::vector<Cell> start(n_);
    for (int i = 0; i < n_; ++i) {
      Cell c = random_cell(place);
      while (is_target(c)) c = random_cell(place);
      start[i] = c;
    }

    positions_.resize(static_cast<std::size_t>(horizon_));
    positions_[0] = start;
    for (std::int64_t k = 1; k < horizon_; ++k) {
      std::vector<Cell> cur = positions_[static_cast<std::size_t>(k - 1)];
      for (int i = 0; i < mobile_; ++i) {
        const std::uint64_t key = derive_key(seed, StreamPurpose::Walk, static_cast<std::uint64_t>(i));
        Cell next = cur[i];
        for (int attempt = 0; attempt < 8; ++attempt) {
          const auto dir = uniform_index_at(key, static_cast<std::uint64_t>(k) * 8 + attempt, 4);
          Cell c = cur[i];
          if (dir == 0) c.x += 1;
          if (dir == 1) c.x -= 1;
          if (dir == 2) c.y += 1;
          if (dir == 3) c.y -= 1;
          c.x = reflect(c.x);
          c.y = reflect(c.y);
          if (!is_target(c)) {
            next = c;
            break;
          }
        }
        cur[i] = next;
      }
      positions_[static_cast<std::size_t>(k)] = std::move(cur);
    }
  }

  int n() const { return n_; }
  int grid() const { return grid_; }
  std::int64_t horizon() const { return horizon_; }
  int target_count() const { return static_cast<int>(targets_.size()); }
  const std::vector<Cell>& targets() const { return targets_; }

  const std::vector<Cell>& positions_at(std::int64_t k) const {
    if (k < 0 || k >= horizon_) throw std::logic_error("mobility model: time outside precomputed horizon");
    return positions_[static_cast<std::size_t>(k)];
  }

  double sensor_target_distance(std::int64_t k, int sensor, int target) const {
    const Cell& s = positions_at(k)[static_cast<std::size_t>(sensor)];
    const Cell& t = targets_[static_cast<std::size_t>(target)];
    const double dx = s.x - t.x;
    const double dy = s.y - t.y;
    return std::sqrt(dx * dx + dy * dy);
  }

 private:
  Cell random_cell(CounterStream& cs) const {
    Cell c;
    c.x = static_cast<int>(cs.next_index(static_cast<std::uint64_t>(grid_)));
    c.y = static_cast<int>(cs.next_index(static_cast<std::uint64_t>(grid_)));
    return c;
  }
  bool is_target(const Cell& c) const {
    for (const auto& t : targets_)
      if (t == c) return true;
    return false;
  }
  int reflect(int v) const {
    if (v < 0) return -v;
    if (v > grid_ - 1) return 2 * (grid_ - 1) - v;
    return v;
  }

  int grid_;
  int n_;
  int mobile_;
  std::int64_t horizon_;
  std::vector<Cell> targets_;
  std::vector<std::vector<Cell>> positions_;
};

// phi_i(k)[j] = beta / d_ij(k)^3 with d_ij the sensor-to-target distance.
// Static sensors therefore produce constant regressors. Lattice placement
// keeps every distance >= 1, so entries are bounded by beta.
inline RegressorSource temperature_source(std::shared_ptr<const MobilityModel> mobility, double beta) {
  if (!mobility) throw std::invalid_argument("temperature source: null mobility model");
  if (beta <= 0.0) throw std::invalid_argument("temperature source: beta must be positive");
  RegressorSource src;
  src.n = mobility->n();
  src.d = mobility->target_count();
  src.rho = beta;
  src.phi = [mobility, beta](int sensor, std::int64_t k) {
    const int d = mobility->target_count();
    Vec v(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      const double dist = mobility->sensor_target_distance(k, sensor, j);
      v[static_cast<std::size_t>(j)] = beta / (dist * dist * dist);
    }
    return v;
  };
  return src;
}

}  // namespace dpe
