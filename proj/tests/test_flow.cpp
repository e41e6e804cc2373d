#include "hym/flow.hpp"
#include "hym/random_fields.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

using namespace hym;
using Catch::Approx;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

MetricField perturbed_fs(const BaseGeometry& g, const BundleSpec& b,
                         unsigned long long seed, double amp) {
  auto fs = fs_metric(g, b);
  std::mt19937_64 rng(seed);
  Field w = random_endo(g, fs, rng, amp, /*trace_free=*/true).w;
  return metric_deform(fs, w, 1.0);
}

}  // namespace

TEST_CASE("he_residual at known metrics") {
  auto g = build_geometry(24, 32);

  CHECK(he_residual(g, fs_metric(g, make_bundle({2}))) < 1e-7);
  CHECK(he_residual(g, fs_metric(g, make_bundle({1, 1}))) < 1e-7);

  // [1,-1]: LambdaTheta = 2 pi diag(1,-1), gamma = 0.
  double r = he_residual(g, fs_metric(g, make_bundle({1, -1})));
  CHECK(r == Approx(kTwoPi).margin(1e-6));
  CHECK(r > 1.0);
}

TEST_CASE("flow terminates immediately at a Hermite-Einstein metric") {
  auto g = build_geometry(16, 24);
  auto fs = fs_metric(g, make_bundle({1, 1}));
  auto res = hym_run(g, fs, 0.05, 1000, 1e-5);
  CHECK(res.reached_target);
  CHECK(res.final_state.step_count == 0);
  CHECK(res.trajectory.size() == 1);
  CHECK(res.final_state.m_value == 0.0);
}

TEST_CASE("flow converges on the polystable bundle [1,1]") {
  auto g = build_geometry(24, 48);
  auto h0 = perturbed_fs(g, make_bundle({1, 1}), 11, 0.3);
  double slope0 = slope(g, h0);

  auto res = hym_run(g, h0, 0.05, 10000, 1e-6);
  CHECK(res.reached_target);
  CHECK(!res.diverged);
  CHECK(res.final_state.he_residual < 1e-6);
  CHECK(res.final_state.step_count < 10000);

  // Energy dissipation along every accepted step.
  for (size_t k = 1; k < res.trajectory.size(); ++k)
    CHECK(res.trajectory[k].m_value <= res.trajectory[k - 1].m_value + 1e-8);

  // Degree conservation (Chern-Weil invariance).
  CHECK(slope(g, res.final_state.h) == Approx(slope0).margin(1e-6));

  // Path independence: the accumulated energy matches the direct Donaldson
  // functional of the endpoint deformation.
  Field wf = metric_log(h0, res.final_state.h);
  double m_direct = m_path(g, h0, wf, 64);
  CHECK(res.final_state.m_value == Approx(m_direct).margin(5e-5));
}

TEST_CASE("flow diverges on the unstable bundle [1,-1]") {
  auto g = build_geometry(24, 48);
  auto h0 = perturbed_fs(g, make_bundle({1, -1}), 13, 0.2);

  // Stop at t = 1: the metric degenerates like e^{4 pi t} along the
  // destabilizing splitting, so longer horizons exhaust double precision.
  auto res = hym_run(g, h0, 0.05, 20, 1e-6);
  CHECK(!res.reached_target);
  for (const auto& s : res.trajectory) CHECK(s.he_residual > 0.1);
  CHECK(res.final_state.m_value < -50.0);

  // Late-time slope of M: near-linear decrease at rate -2 (2 pi)^2, the
  // squared norm of the limiting residual 2 pi diag(1,-1) of the maximal
  // destabilizer splitting.
  const auto& tr = res.trajectory;
  size_t n = tr.size();
  double slope_fit = (tr[n - 1].m_value - tr[n / 2].m_value) /
                     (tr[n - 1].time - tr[n / 2].time);
  CHECK(slope_fit == Approx(-2.0 * kTwoPi * kTwoPi).epsilon(0.05));

  // Degree is still conserved, but the margin scales with the condition
  // number e^{4 pi} the degenerating metric has already reached at t = 1.
  CHECK(slope(g, res.final_state.h) == Approx(slope(g, h0)).margin(1e-4));
}

TEST_CASE("flow is equivariant under constant unitary gauges") {
  auto g = build_geometry(16, 24);
  auto h0 = perturbed_fs(g, make_bundle({1, 1}), 17, 0.25);

  std::mt19937_64 rng(23);
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(2, 2);
  x(0, 1) = Complex(0.4, -0.2);
  x(1, 0) = std::conj(x(0, 1));
  x(0, 0) = 0.3;
  x(1, 1) = -0.5;
  Eigen::MatrixXcd u = (Complex(0, 1) * x).exp();
  Field uf = constant_field(g, u);
  MetricField h0g{h0.bundle, pw_product(pw_dagger(uf), pw_product(h0.h, uf))};

  auto a = hym_run(g, h0, 0.05, 25, 0.0);
  auto b = hym_run(g, h0g, 0.05, 25, 0.0);
  Field conj = pw_product(pw_dagger(uf), pw_product(a.final_state.h.h, uf));
  CHECK((conj - b.final_state.h.h).supNorm() < 1e-8);
  CHECK(a.final_state.m_value == Approx(b.final_state.m_value).margin(1e-8));
}

TEST_CASE("argument validation") {
  auto g = build_geometry(16, 24);
  auto fs = fs_metric(g, make_bundle({0}));
  CHECK_THROWS_AS(hym_run(g, fs, 0.0, 10, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(hym_run(g, fs, 0.7, 10, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(hym_run(g, fs, 0.05, -1, 1e-6), std::invalid_argument);
}
