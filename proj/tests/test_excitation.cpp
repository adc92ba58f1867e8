#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dpe/analysis.hpp"
#include "dpe/excitation.hpp"
#include "dpe/rng.hpp"
#include "dpe/scenario.hpp"
#include "oracles.hpp"

using Catch::Approx;
using dpe::Mat;
using dpe::Vec;

namespace {

// Benchmark-family delta sequences over [0, K), computed through windows.
std::vector<Vec> ex1_deltas(std::int64_t K) {
  const auto src = dpe::scripted_source(dpe::ex1_regressor_table());
  std::vector<Vec> out(4, Vec(static_cast<std::size_t>(K)));
  for (int i = 0; i < 4; ++i) {
    dpe::DremWindow w(2);
    for (std::int64_t k = 0; k < K; ++k) {
      w.push(src.at(i, k), 0.0);
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = w.delta();
    }
  }
  return out;
}

}  // namespace

TEST_CASE("all-zero regressors are not cooperatively excited", "[excitation]") {
  std::vector<Vec> deltas(3, Vec(40, 0.0));
  const auto rep = dpe::cooperative_pe_scan(deltas, 5);
  REQUIRE(rep.omega == 0.0);
  REQUIRE_FALSE(rep.satisfied);
  REQUIRE(dpe::per_sensor_excitation(deltas, 0, 5, 0.1) == std::nullopt);
}

TEST_CASE("benchmark family achieves omega = 8 over windows of length 8", "[excitation]") {
  const std::int64_t K = 200;
  const auto deltas = ex1_deltas(K);
  // sensors 1 and 4 contribute nothing
  for (std::int64_t k = 0; k < K; ++k) {
    REQUIRE(deltas[0][static_cast<std::size_t>(k)] == 0.0);
    REQUIRE(deltas[3][static_cast<std::size_t>(k)] == 0.0);
  }
  const auto rep = dpe::cooperative_pe_scan(deltas, 8, /*scan_begin=*/1);
  REQUIRE(rep.satisfied);
  REQUIRE(rep.omega == Approx(8.0).margin(1e-6));
  REQUIRE(rep.omega_underbar == Approx(0.25).margin(1e-7));
  // a witness with delta^2 >= 0.25 exists in every scanned window
  REQUIRE(rep.witness_windows.size() == static_cast<std::size_t>(rep.scan_end - rep.scan_begin + 1));
  for (const auto& w : rep.witness_windows) {
    const double v = deltas[static_cast<std::size_t>(w.sensor)][static_cast<std::size_t>(w.t)];
    REQUIRE(v * v >= 0.25);
    REQUIRE(w.t >= w.window_start);
    REQUIRE(w.t < w.window_start + 8);
  }
}

TEST_CASE("single constantly excited sensor", "[excitation]") {
  std::vector<Vec> deltas(1, Vec(10, 1.0));
  const auto rep = dpe::cooperative_pe_scan(deltas, 1);
  REQUIRE(rep.omega == Approx(1.0));
  REQUIRE(rep.omega_underbar == Approx(1.0));
  const auto witness = dpe::per_sensor_excitation(deltas, 3, 1, 1.0);
  REQUIRE(witness.has_value());
  REQUIRE(witness->first == 3);
  REQUIRE(witness->second == 0);
}

TEST_CASE("scan argument validation", "[excitation]") {
  std::vector<Vec> deltas(2, Vec(10, 1.0));
  REQUIRE_THROWS_AS(dpe::cooperative_pe_scan(deltas, 11), std::invalid_argument);
  REQUIRE_THROWS_AS(dpe::cooperative_pe_scan(deltas, 0), std::invalid_argument);
}

TEST_CASE("gram excitation checks", "[excitation]") {
  // canonical cycle: Gram = I
  std::vector<Vec> phis;
  for (int k = 0; k < 6; ++k) {
    Vec e(3, 0.0);
    e[static_cast<std::size_t>(k % 3)] = 1.0;
    phis.push_back(e);
  }
  REQUIRE(dpe::gram_excitation_check(phis, 0, 3, 1.0));
  REQUIRE(dpe::smallest_eigenvalue(dpe::gram_matrix(phis, 0, 3)) == Approx(1.0).margin(1e-12));

  // constant regressor: rank-1 Gram fails any positive floor
  std::vector<Vec> flat(4, Vec{1.0, 2.0});
  REQUIRE_FALSE(dpe::gram_excitation_check(flat, 0, 2, 1e-9));

  // a full activation turn gives Gram = I for the turn-based source
  const auto turns = dpe::turn_canonical_source(30, 5, 6);
  std::vector<Vec> seq;
  for (std::int64_t k = 0; k < 5; ++k) seq.push_back(turns.at(0, k));
  REQUIRE(dpe::gram_excitation_check(seq, 0, 5, 1.0));
}

TEST_CASE("excitation bound constants", "[excitation]") {
  REQUIRE(dpe::excitation_eigen_floor(0.7, 1, 2.0) == Approx(0.7));
  REQUIRE(dpe::excitation_det_floor(0.7, 1) == Approx(0.7));
  REQUIRE(dpe::excitation_eigen_floor(1.0, 2, 1.0) == Approx(0.5));
  REQUIRE(dpe::excitation_det_floor(0.5, 2) == Approx(0.25));
  REQUIRE_THROWS_AS(dpe::excitation_eigen_floor(1.0, 2, 0.0), std::invalid_argument);
}

TEST_CASE("determinant and eigenvalue excitation floors imply each other", "[excitation]") {
  dpe::CounterStream cs{dpe::derive_key(41, dpe::StreamPurpose::Test)};
  for (int d = 1; d <= 4; ++d) {
    for (int rep = 0; rep < 40; ++rep) {
      const double rho_phi = 0.5 + cs.next_uniform();
      std::vector<Vec> phis;
      for (int k = 0; k < d; ++k) {
        Vec p(static_cast<std::size_t>(d));
        for (double& v : p) v = rho_phi * (2.0 * cs.next_uniform() - 1.0);
        phis.push_back(p);
      }
      const Mat gram = dpe::gram_matrix(phis, 0, d);
      const double det_g = dpe::det(gram);
      const double lam_min = dpe::smallest_eigenvalue(gram);
      const double rho_gram = static_cast<double>(d) * rho_phi * rho_phi;  // entry bound of the Gram

      if (det_g > 0.0) {
        const double floor = dpe::excitation_eigen_floor(det_g, d, rho_gram);
        REQUIRE(lam_min >= floor - 1e-9);
      }
      if (lam_min > 0.0) {
        REQUIRE(det_g >= dpe::excitation_det_floor(lam_min, d) - 1e-9);
      }
    }
  }
}

TEST_CASE("window Gram determinant equals delta squared", "[excitation]") {
  dpe::CounterStream cs{dpe::derive_key(42, dpe::StreamPurpose::Test)};
  for (int d : {1, 2, 3, 4}) {
    std::vector<Vec> phis;
    dpe::DremWindow w(d);
    for (int k = 0; k < d; ++k) {
      Vec p(static_cast<std::size_t>(d));
      for (double& v : p) v = 2.0 * cs.next_uniform() - 1.0;
      phis.push_back(p);
      w.push(p, 0.0);
    }
    const double delta = w.delta();
    const double det_gram = dpe::det(dpe::gram_matrix(phis, 0, d));
    REQUIRE(det_gram == Approx(delta * delta).margin(1e-9 * std::max(1.0, delta * delta)));
  }
}

TEST_CASE("every scanned window of the benchmark run contains a witness", "[excitation]") {
  const auto deltas = ex1_deltas(120);
  const auto rep = dpe::cooperative_pe_scan(deltas, 8, 1);
  for (std::int64_t k = rep.scan_begin; k <= rep.scan_end; ++k) {
    const auto w = dpe::per_sensor_excitation(deltas, k, 8, rep.omega_underbar);
    REQUIRE(w.has_value());
  }
}
