#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dpe/analysis.hpp"
#include "dpe/rng.hpp"
#include "dpe/scenario.hpp"
#include "oracles.hpp"

using Catch::Approx;
using dpe::Mat;
using dpe::Vec;

TEST_CASE("lyapunov split on hand examples", "[analysis]") {
  // all errors equal one: V = 4, V1 = 4, V2 = 0
  Mat est(4, 1, 1.0);
  auto lp = dpe::lyapunov(est, Vec{0.0});
  REQUIRE(lp[0].V == Approx(4.0).margin(1e-12));
  REQUIRE(lp[0].V1 == Approx(4.0).margin(1e-12));
  REQUIRE(lp[0].V2 == Approx(0.0).margin(1e-12));
  REQUIRE(lp[0].nu == Approx(1.0).margin(1e-15));

  // antisymmetric errors: nu = 0, V1 = 0, V2 = 2
  Mat est2(2, 1);
  est2(0, 0) = 1.0;
  est2(1, 0) = -1.0;
  lp = dpe::lyapunov(est2, Vec{0.0});
  REQUIRE(lp[0].nu == Approx(0.0).margin(1e-15));
  REQUIRE(lp[0].V1 == Approx(0.0).margin(1e-15));
  REQUIRE(lp[0].V2 == Approx(2.0).margin(1e-12));
  REQUIRE(lp[0].sigma == lp[0].V2);
}

TEST_CASE("lyapunov split matches the explicit projector algebra", "[analysis]") {
  dpe::CounterStream cs{dpe::derive_key(61, dpe::StreamPurpose::Test)};
  const int n = 5;
  const Mat J = oracles::averaging_projector(n);
  // projector identities J'J = J and (I-J)'(I-J) = I-J
  const Mat JJ = J * J;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) REQUIRE(JJ(i, j) == Approx(J(i, j)).margin(1e-12));

  for (int rep = 0; rep < 200; ++rep) {
    Mat est(n, 1);
    Vec err(n);
    for (int i = 0; i < n; ++i) {
      est(i, 0) = 4.0 * cs.next_uniform() - 2.0;
      err[static_cast<std::size_t>(i)] = est(i, 0);  // theta = 0
    }
    const auto lp = dpe::lyapunov(est, Vec{0.0});
    const double v1 = oracles::quad_form(err, J);
    double total = 0.0;
    for (double e : err) total += e * e;
    REQUIRE(lp[0].V1 == Approx(v1).margin(1e-12));
    REQUIRE(lp[0].V2 == Approx(total - v1).margin(1e-12));
    REQUIRE(lp[0].V1 + lp[0].V2 == Approx(total).margin(1e-12));
    REQUIRE(lp[0].V == lp[0].V1 + lp[0].V2);
    REQUIRE(lp[0].V1 == Approx(n * lp[0].nu * lp[0].nu).margin(1e-12));
  }
}

TEST_CASE("near-consensus sign lemma oracle", "[analysis]") {
  // consensus vector passes
  const auto r1 = dpe::lemma2_oracle(Vec{1.0, 1.0, 1.0}, 0.2);
  REQUIRE(r1.applicable);
  REQUIRE(r1.passed);

  // small perturbation with c just above the achieved ratio
  const Vec x{1.0, 1.001};
  double mean = (x[0] + x[1]) / 2.0;
  double spread = (x[0] - mean) * (x[0] - mean) + (x[1] - mean) * (x[1] - mean);
  double total = x[0] * x[0] + x[1] * x[1];
  const double c = 1.05 * spread / total;
  REQUIRE(c < 1.0 / 3.0);
  const auto r2 = dpe::lemma2_oracle(x, c);
  REQUIRE(r2.applicable);
  REQUIRE(r2.passed);

  // premise violation is vacuous
  const auto r3 = dpe::lemma2_oracle(Vec{1.0, -1.0}, 0.2);
  REQUIRE_FALSE(r3.applicable);
  REQUIRE(r3.passed);

  // randomized falsification attempt (small scale here, full scale in acceptance)
  dpe::CounterStream cs{dpe::derive_key(62, dpe::StreamPurpose::Test)};
  int applicable = 0;
  for (int rep = 0; rep < 5000; ++rep) {
    const int n = 2 + static_cast<int>(cs.next_index(5));
    const double m = (cs.next_uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + 1.5 * cs.next_uniform());
    const double c2 = (0.999 / (n + 1)) * (0.05 + 0.95 * cs.next_uniform());
    Vec x2(static_cast<std::size_t>(n));
    const double eps = 0.2 * std::abs(m) * std::sqrt(c2) * cs.next_uniform();
    for (double& v : x2) v = m + eps * (2.0 * cs.next_uniform() - 1.0);
    const auto res = dpe::lemma2_oracle(x2, c2);
    if (res.applicable) ++applicable;
    REQUIRE(res.passed);
  }
  REQUIRE(applicable > 2000);
}

TEST_CASE("mixing non-expansiveness oracle", "[analysis]") {
  const int n = 4;
  dpe::CounterStream cs{dpe::derive_key(63, dpe::StreamPurpose::Test)};

  // identity: equalities
  Vec x(n);
  for (double& v : x) v = 2.0 * cs.next_uniform() - 1.0;
  REQUIRE(dpe::lemma3_oracle(x, dpe::WeightedDigraph(Mat::identity(n))).passed);

  // full averaging
  REQUIRE(dpe::lemma3_oracle(x, dpe::WeightedDigraph(oracles::averaging_projector(n))).passed);

  // random doubly stochastic matrices
  for (int rep = 0; rep < 500; ++rep) {
    const auto A = oracles::random_doubly_stochastic(2 + static_cast<int>(cs.next_index(5)), cs);
    Vec y(static_cast<std::size_t>(A.n));
    for (double& v : y) v = 4.0 * cs.next_uniform() - 2.0;
    const auto res = dpe::lemma3_oracle(y, A);
    REQUIRE(res.applicable);
    REQUIRE(res.passed);
  }
}

TEST_CASE("excited-sensor drop oracle edge cases", "[analysis]") {
  // equality-adjacent: delta^2 exactly at the floor with alpha = 1
  const Vec x{0.5, -1.0};
  const auto r = dpe::lemma4_oracle(x, Vec{1.0, 0.0}, Vec{1.0, 1.0}, 1.0, 1.0);
  REQUIRE(r.applicable);
  REQUIRE(r.passed);

  // no excitation: vacuous, and G = I means zero drop
  const auto r2 = dpe::lemma4_oracle(x, Vec{0.0, 0.0}, Vec{1.0, 1.0}, 0.5, 0.25);
  REQUIRE_FALSE(r2.applicable);
}

TEST_CASE("monte carlo aggregation is deterministic and mean-consistent", "[analysis]") {
  auto cfg = dpe::builtin_ex1();
  cfg.horizon = 120;
  const auto compiled = dpe::compile(cfg);

  const auto single = dpe::run_trial(compiled.setup, 42);
  const auto agg1 = dpe::run_monte_carlo(compiled.setup, 1, 42);
  REQUIRE(single.V == agg1.V);
  REQUIRE(single.err == agg1.err);
  REQUIRE(single.final_estimates == agg1.final_estimates);

  const auto a = dpe::run_monte_carlo(compiled.setup, 6, 7, 1);
  const auto b = dpe::run_monte_carlo(compiled.setup, 6, 7, 4);  // different thread budget
  REQUIRE(a.V == b.V);
  REQUIRE(a.V1 == b.V1);
  REQUIRE(a.err == b.err);
  REQUIRE(a.delta == b.delta);
  REQUIRE(a.final_estimates == b.final_estimates);
  REQUIRE(a.seeds == b.seeds);

  // mean of trials equals the hand-computed mean
  const auto t0 = dpe::run_trial(compiled.setup, 7);
  const auto t1 = dpe::run_trial(compiled.setup, 8);
  const auto pair = dpe::run_monte_carlo(compiled.setup, 2, 7);
  for (std::size_t i = 0; i < pair.V.size(); ++i)
    REQUIRE(pair.V[i] == Approx((t0.V[i] + t1.V[i]) / 2.0).margin(1e-12));
}

TEST_CASE("noise-free runs make every trial identical and V non-increasing", "[analysis]") {
  auto cfg = dpe::builtin_ex1();
  cfg.horizon = 400;
  cfg.noise_variances = Vec(4, 0.0);
  const auto compiled = dpe::compile(cfg);
  const auto one = dpe::run_trial(compiled.setup, 3);
  // power-of-two trial count keeps the pairwise mean of identical traces exact
  const auto agg = dpe::run_monte_carlo(compiled.setup, 4, 3);
  REQUIRE(one.V == agg.V);
  REQUIRE(one.final_estimates == agg.final_estimates);
  const auto agg5 = dpe::run_monte_carlo(compiled.setup, 5, 3);
  for (std::size_t i = 0; i < one.V.size(); ++i)
    REQUIRE(agg5.V[i] == Approx(one.V[i]).margin(1e-12 * std::max(1.0, one.V[i])));

  // after the two-step warm-up the noise-free Lyapunov total never grows
  for (std::int64_t k = 2; k + 1 < 400; ++k) {
    REQUIRE(agg.total_V(k + 1) <= agg.total_V(k) + 1e-9);
  }
}

TEST_CASE("trace layout matches the horizon", "[analysis]") {
  auto cfg = dpe::builtin_ex1();
  cfg.horizon = 50;
  const auto compiled = dpe::compile(cfg);
  const auto tr = dpe::run_trial(compiled.setup, 1);
  REQUIRE(tr.n == 4);
  REQUIRE(tr.d == 2);
  REQUIRE(tr.horizon == 50);
  REQUIRE(tr.alpha.size() == 50);
  REQUIRE(tr.V.size() == 100);
  REQUIRE(tr.err.size() == 200);
  REQUIRE(tr.delta.size() == 200);
  // recorded deltas of sensor 2 follow the cosine ramp
  for (std::int64_t k = 1; k < 50; ++k)
    REQUIRE(tr.delta[static_cast<std::size_t>(k) * 4 + 1] ==
            Approx(std::cos(static_cast<double>(k) * M_PI / 4.0)).margin(1e-12));
}
