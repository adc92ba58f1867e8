#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dpe/analysis.hpp"
#include "dpe/estimator.hpp"
#include "dpe/rng.hpp"
#include "oracles.hpp"

using Catch::Approx;
using dpe::DremWindow;
using dpe::EstimatorState;
using dpe::Mat;
using dpe::StepsizeSchedule;
using dpe::Variant;
using dpe::Vec;
using dpe::WeightedDigraph;

namespace {

std::vector<DremWindow> random_windows(int n, int d, dpe::CounterStream& cs, const Vec& theta,
                                       double noise_scale, std::vector<Vec>* raw_stacks = nullptr) {
  std::vector<DremWindow> ws(static_cast<std::size_t>(n), DremWindow(d));
  if (raw_stacks) raw_stacks->assign(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(d), 0.0));
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < d; ++t) {
      Vec phi(static_cast<std::size_t>(d));
      for (double& v : phi) v = 2.0 * cs.next_uniform() - 1.0;
      const double w = noise_scale * cs.next_gaussian();
      ws[static_cast<std::size_t>(i)].push(phi, dpe::dot(theta, phi) + w);
      if (raw_stacks) {
        // stack order: newest first, matching the window rows
        auto& st = (*raw_stacks)[static_cast<std::size_t>(i)];
        for (int r = d - 1; r > 0; --r) st[static_cast<std::size_t>(r)] = st[static_cast<std::size_t>(r - 1)];
        st[0] = w;
      }
    }
  }
  return ws;
}

}  // namespace

TEST_CASE("power-law stepsizes clamp at one and decay", "[estimator]") {
  const auto s = StepsizeSchedule::power_law(1.8, 1.0, 1.0);
  REQUIRE(s.alpha(0) == 1.0);  // 1.8 clamped
  REQUIRE(s.alpha(17) == Approx(0.1).margin(1e-15));
  double prev = s.alpha(0);
  for (std::int64_t k = 1; k <= 10000; ++k) {
    const double a = s.alpha(k);
    REQUIRE(a <= prev);
    REQUIRE(a > 0.0);
    prev = a;
  }
  REQUIRE(s.square_summable());

  REQUIRE_NOTHROW(StepsizeSchedule::power_law(1.0, 1.0, 0.6));
  REQUIRE_THROWS_AS(StepsizeSchedule::power_law(1.0, 1.0, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(StepsizeSchedule::power_law(-1.0, 1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(StepsizeSchedule::power_law(1.0, -1.0, 1.0), std::invalid_argument);

  // k0 = 0 is the clamped 1/k ramp: finite everywhere, alpha(0) = 1
  const auto z = StepsizeSchedule::power_law(2.2, 0.0, 1.0);
  REQUIRE(z.alpha(0) == 1.0);
  REQUIRE(z.alpha(1) == 1.0);
  REQUIRE(z.alpha(22) == Approx(0.1).margin(1e-15));

  const auto c = StepsizeSchedule::constant(0.5);
  REQUIRE(c.alpha(12345) == 0.5);
  REQUIRE_FALSE(c.square_summable());
  REQUIRE_THROWS_AS(StepsizeSchedule::constant(1.5), std::invalid_argument);
}

TEST_CASE("no excitation and identity mixing leave the state unchanged", "[estimator]") {
  const int n = 3, d = 2;
  EstimatorState st{Mat(n, d), Vec(n, 1.0), Variant::Cta, 0};
  st.estimates(0, 0) = 1.0;
  st.estimates(2, 1) = -2.0;
  std::vector<DremWindow> ws(n, DremWindow(d));  // zero-padded: delta = 0
  const WeightedDigraph eye(Mat::identity(n));
  const auto next = dpe::cta_step(st, eye, ws, 0.7);
  REQUIRE(next.estimates == st.estimates);
  REQUIRE(next.k == 1);
}

TEST_CASE("the truth is a fixed point of both variants", "[estimator]") {
  dpe::CounterStream cs{dpe::derive_key(51, dpe::StreamPurpose::Test)};
  const int n = 4, d = 3;
  const Vec theta{1.0, -0.5, 2.0};
  Mat est(n, d);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < d; ++l) est(i, l) = theta[static_cast<std::size_t>(l)];
  const auto A = oracles::random_doubly_stochastic(n, cs);
  auto ws = random_windows(n, d, cs, theta, 0.0);

  EstimatorState st{est, Vec(n, 0.5), Variant::Cta, 0};
  const auto cta = dpe::cta_step(st, A, ws, 0.9);
  st.variant = Variant::Atc;
  const auto atc = dpe::atc_step(st, A, ws, 0.9);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < d; ++l) {
      REQUIRE(cta.estimates(i, l) == Approx(theta[static_cast<std::size_t>(l)]).margin(1e-12));
      REQUIRE(atc.estimates(i, l) == Approx(theta[static_cast<std::size_t>(l)]).margin(1e-12));
    }
}

TEST_CASE("single-sensor scalar update by hand", "[estimator]") {
  // n = 1, d = 1, phi = 1, mu = 1, alpha = 1, theta = 2.5, start at 0:
  // next = 0 + 1 * (1 / (1 + 1)) * (2.5 - 0) = 1.25
  EstimatorState st{Mat(1, 1), Vec{1.0}, Variant::Cta, 0};
  std::vector<DremWindow> ws(1, DremWindow(1));
  ws[0].push(Vec{1.0}, 2.5);
  const WeightedDigraph eye(Mat::identity(1));
  const auto next = dpe::cta_step(st, eye, ws, 1.0);
  REQUIRE(next.estimates(0, 0) == Approx(1.25).margin(1e-15));
}

TEST_CASE("ATC equals CTA exactly under identity mixing", "[estimator]") {
  dpe::CounterStream cs{dpe::derive_key(52, dpe::StreamPurpose::Test)};
  const int n = 5, d = 3;
  const Vec theta{0.3, 1.1, -0.7};
  for (int rep = 0; rep < 10; ++rep) {
    Mat est(n, d);
    for (double& v : est.a) v = 2.0 * cs.next_uniform() - 1.0;
    Vec mu(n);
    for (double& v : mu) v = 0.2 + cs.next_uniform();
    auto ws = random_windows(n, d, cs, theta, 0.5);
    const WeightedDigraph eye(Mat::identity(n));
    EstimatorState st{est, mu, Variant::Cta, 0};
    const auto a = dpe::cta_step(st, eye, ws, 0.3);
    const auto b = dpe::atc_step(st, eye, ws, 0.3);
    REQUIRE(a.estimates == b.estimates);  // bitwise
  }
}

TEST_CASE("ATC with zero excitation is pure consensus", "[estimator]") {
  dpe::CounterStream cs{dpe::derive_key(53, dpe::StreamPurpose::Test)};
  const int n = 4, d = 2;
  Mat est(n, d);
  for (double& v : est.a) v = 2.0 * cs.next_uniform() - 1.0;
  const auto A = oracles::random_doubly_stochastic(n, cs);
  std::vector<DremWindow> ws(n, DremWindow(d));  // all-zero windows
  EstimatorState st{est, Vec(n, 1.0), Variant::Atc, 0};
  const auto next = dpe::atc_step(st, A, ws, 0.5);
  const Mat expect = A.adjacency * est;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < d; ++l) REQUIRE(next.estimates(i, l) == Approx(expect(i, l)).margin(1e-15));
}

TEST_CASE("step rejects bad inputs", "[estimator]") {
  EstimatorState st{Mat(2, 1), Vec{1.0, 1.0}, Variant::Cta, 0};
  std::vector<DremWindow> ws(2, DremWindow(1));
  Mat bad(2, 2);
  bad(0, 0) = 0.5;
  bad(0, 1) = 0.5;
  bad(1, 0) = 0.6;
  bad(1, 1) = 0.4;
  REQUIRE_THROWS_AS(dpe::cta_step(st, WeightedDigraph(bad), ws, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(dpe::cta_step(st, WeightedDigraph(Mat::identity(2)), ws, 1.5), std::invalid_argument);
  std::vector<DremWindow> wrong(2, DremWindow(3));
  REQUIRE_THROWS_AS(dpe::cta_step(st, WeightedDigraph(Mat::identity(2)), wrong, 0.5), std::invalid_argument);
}

TEST_CASE("error recursion oracle reproduces the CTA step", "[estimator]") {
  dpe::CounterStream cs{dpe::derive_key(54, dpe::StreamPurpose::Test)};
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(cs.next_index(4));  // up to 5
    const int d = 1 + static_cast<int>(cs.next_index(3));  // up to 3
    Vec theta(static_cast<std::size_t>(d));
    for (double& v : theta) v = 2.0 * cs.next_uniform() - 1.0;
    Mat est(n, d);
    for (double& v : est.a) v = 2.0 * cs.next_uniform() - 1.0;
    Vec mu(static_cast<std::size_t>(n));
    for (double& v : mu) v = 0.2 + cs.next_uniform();
    const auto A = oracles::random_doubly_stochastic(n, cs);
    std::vector<Vec> raw;
    auto ws = random_windows(n, d, cs, theta, 0.8, &raw);
    const double alpha = 0.1 + 0.9 * cs.next_uniform();

    EstimatorState st{est, mu, Variant::Cta, 0};
    const auto next = dpe::cta_step(st, A, ws, alpha);
    const Mat predicted_err = dpe::error_recursion_oracle(st, A, ws, alpha, theta, raw);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < d; ++l) {
        const double actual_err = next.estimates(i, l) - theta[static_cast<std::size_t>(l)];
        REQUIRE(actual_err == Approx(predicted_err(i, l)).margin(1e-12));
      }
  }
}

TEST_CASE("error recursion oracle edge cases", "[estimator]") {
  // zero noise and zero excitation: error simply mixes
  dpe::CounterStream cs{dpe::derive_key(55, dpe::StreamPurpose::Test)};
  const int n = 3, d = 2;
  Mat est(n, d);
  for (double& v : est.a) v = cs.next_uniform();
  const auto A = oracles::random_doubly_stochastic(n, cs);
  std::vector<DremWindow> ws(n, DremWindow(d));
  std::vector<Vec> raw(n, Vec(d, 0.0));
  const Vec theta{0.4, -0.2};
  EstimatorState st{est, Vec(n, 1.0), Variant::Cta, 0};
  const Mat pred = dpe::error_recursion_oracle(st, A, ws, 0.5, theta, raw);
  Mat err = est;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < d; ++l) err(i, l) -= theta[static_cast<std::size_t>(l)];
  const Mat mixed = A.adjacency * err;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < d; ++l) REQUIRE(pred(i, l) == Approx(mixed(i, l)).margin(1e-15));

  // n = 1 reduces to the scalar recursion
  EstimatorState s1{Mat(1, 1), Vec{0.7}, Variant::Cta, 0};
  s1.estimates(0, 0) = 2.0;
  std::vector<DremWindow> w1(1, DremWindow(1));
  w1[0].push(Vec{1.3}, 0.0);
  std::vector<Vec> raw1(1, Vec{0.25});
  const double alpha = 0.6;
  const double delta = 1.3;
  const Mat pred1 = dpe::error_recursion_oracle(s1, WeightedDigraph(Mat::identity(1)), w1, alpha,
                                                Vec{0.5}, raw1);
  const double gain = delta / (0.7 + delta * delta);
  const double expect = (1.0 - alpha * gain * delta) * (2.0 - 0.5) + alpha * gain * 0.25;
  REQUIRE(pred1(0, 0) == Approx(expect).margin(1e-15));
}

TEST_CASE("excited-sensor energy drop bound holds on random instances", "[estimator]") {
  dpe::CounterStream cs{dpe::derive_key(56, dpe::StreamPurpose::Test)};
  int applicable = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    const int n = 2 + static_cast<int>(cs.next_index(5));
    Vec x(static_cast<std::size_t>(n)), deltas(static_cast<std::size_t>(n)), mus(static_cast<std::size_t>(n));
    for (double& v : x) v = 4.0 * cs.next_uniform() - 2.0;
    for (double& v : deltas) v = 4.0 * cs.next_uniform() - 2.0;
    for (double& v : mus) v = 0.1 + 2.0 * cs.next_uniform();
    double dmax = 0.0;
    for (double v : deltas) dmax = std::max(dmax, v * v);
    if (dmax == 0.0) continue;
    const double omega_underbar = dmax * (0.05 + 0.95 * cs.next_uniform());
    const double alpha = 0.05 + 0.95 * cs.next_uniform();
    const auto res = dpe::lemma4_oracle(x, deltas, mus, alpha, omega_underbar);
    if (res.applicable) ++applicable;
    REQUIRE(res.passed);
  }
  REQUIRE(applicable > 1000);
}
