#include "hym/donaldson.hpp"
#include "hym/random_fields.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>

using namespace hym;
using Catch::Approx;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("m_path: zero, pure rescaling, destabilizing ray oracle") {
  auto g = build_geometry(24, 32);
  auto b = make_bundle({1, -1});
  auto h0 = fs_metric(g, b);

  Field zero(2, g.n_radial, g.n_angular);
  CHECK(m_path(g, h0, zero) == Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(m_path(g, h0, zero, 2), std::invalid_argument);

  // Pure rescaling w = c Id: curvature term 2 pi r mu_E c cancels gamma term.
  Field cid = constant_field(g, 0.7 * Eigen::MatrixXcd::Identity(2, 2));
  CHECK(m_path(g, h0, cid) == Approx(0.0).margin(1e-8));
  auto b21 = make_bundle({2, 1});
  auto h21 = fs_metric(g, b21);
  CHECK(m_path(g, h21, cid) == Approx(0.0).margin(1e-8));

  // Ray endomorphism for E_2 = O(1) inside O(1)+O(-1) with weights (1,0):
  // w = diag(0,1) and M(tw) = -2 pi t exactly.
  Eigen::MatrixXcd wray(2, 2);
  wray << 0.0, 0.0, 0.0, 1.0;
  for (double t : {0.5, 1.0, 2.0}) {
    double m = m_path(g, h0, t * constant_field(g, wray));
    CHECK(m == Approx(-kTwoPi * t).epsilon(0.01));
  }
}

TEST_CASE("m_spectral equals m_path and ignores trace shifts") {
  auto g = build_geometry(24, 48);

  // Trivial rank-2 bundle, random smooth trace-free w.
  auto b0 = make_bundle({0, 0});
  auto h00 = fs_metric(g, b0);
  std::mt19937_64 rng(41);
  auto e = random_endo(g, h00, rng, 0.5, /*trace_free=*/true);
  CHECK(m_spectral(g, h00, Field(2, g.n_radial, g.n_angular)) ==
        Approx(0.0).margin(1e-12));
  auto rep = functional_report(g, h00, e.w);
  CHECK(rep.discrepancy <= std::max(1e-6, 1e-4 * std::abs(rep.value_path)));
  CHECK(rep.gamma == Approx(0.0));

  // Oracle equivalence on a twisted nonsplit metric over [1,-1].
  auto b = make_bundle({1, -1});
  auto h0 = random_metric(g, b, rng, 0.4);
  auto e2 = random_endo(g, h0, rng, 0.6);
  auto rep2 = functional_report(g, h0, e2.w);
  CHECK(rep2.discrepancy <= std::max(1e-5, 1e-3 * std::abs(rep2.value_path)));

  // Trace shift invariance: w -> w + c Id.
  double m0 = m_spectral(g, h0, e2.w);
  Field shifted = e2.w + constant_field(g, 0.9 * Eigen::MatrixXcd::Identity(2, 2));
  CHECK(m_spectral(g, h0, shifted) == Approx(m0).margin(1e-8));
}

TEST_CASE("convexity probe") {
  auto g = build_geometry(16, 24);
  auto b = make_bundle({1, -1});
  auto h0 = fs_metric(g, b);

  std::vector<double> ts;
  for (double t = 0.0; t <= 2.01; t += 0.25) ts.push_back(t);

  Field zero(2, g.n_radial, g.n_angular);
  CHECK(convexity_probe(g, h0, zero, ts) == Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(convexity_probe(g, h0, zero, {0.0, 1.0}), std::invalid_argument);

  // Destabilizing ray: M(tw) = -2 pi t is affine, second differences ~ 0.
  Eigen::MatrixXcd wray(2, 2);
  wray << 0.0, 0.0, 0.0, 1.0;
  CHECK(convexity_probe(g, h0, constant_field(g, wray), ts) >= -1e-6);

  // Random smooth fields.
  std::mt19937_64 rng(43);
  for (int k = 0; k < 5; ++k) {
    auto e = random_endo(g, h0, rng, 0.8);
    CHECK(convexity_probe(g, h0, e.w, ts) >= -1e-5);
  }
}

TEST_CASE("m_spectral matches a second-difference d2M/dt2 oracle") {
  // d^2/dt^2 M(tw) at t=0 equals 2 int f_w-type curvature of the kernel;
  // cross-check m_path second differences against the spectral form.
  auto g = build_geometry(16, 24);
  auto b = make_bundle({0, 0});
  auto h0 = fs_metric(g, b);
  std::mt19937_64 rng(47);
  auto e = random_endo(g, h0, rng, 0.4, /*trace_free=*/true);

  double dt = 0.1;
  double mm = m_path(g, h0, -dt * e.w, 32);
  double m0 = 0.0;
  double mp = m_path(g, h0, dt * e.w, 32);
  double second_path = (mm + mp - 2.0 * m0) / (dt * dt);

  // Spectral second derivative at t = 0: sum |eta_ab|^2 (phi-kernel -> 1).
  auto sd = eigen_cluster(g, h0, e.w);
  double fm = integrate_real(g, f_w_field(g, sd, dt));
  double fp = integrate_real(g, f_w_field(g, sd, -dt));
  double second_spec = (fm + fp) / (dt * dt);

  CHECK(second_path == Approx(second_spec).epsilon(1e-3).margin(1e-4));
}

TEST_CASE("reverse Sobolev inequality: fitted constant stays finite") {
  auto g = build_geometry(16, 24);
  auto b = make_bundle({1, -1});
  auto h0 = fs_metric(g, b);
  std::mt19937_64 rng(53);

  Field zero(2, g.n_radial, g.n_angular);
  CHECK(reverse_sobolev_check(g, h0, {zero}, 1.5) == Approx(0.0).margin(1e-14));
  CHECK_THROWS_AS(reverse_sobolev_check(g, h0, {}, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(reverse_sobolev_check(g, h0, {zero}, 2.5), std::invalid_argument);

  std::vector<Field> samples;
  for (int k = 0; k < 20; ++k) {
    double amp = 0.1 + 0.25 * k;
    samples.push_back(random_endo(g, h0, rng, amp).w);
  }
  double c = reverse_sobolev_check(g, h0, samples, 1.5);
  CHECK(std::isfinite(c));
  CHECK(c > 0.0);

  // Residuals are nonpositive with the fitted constant and the curvature
  // constant c0 = max(1, sup |LambdaTheta_0 - gamma|) used inside the check.
  Field lt = lambda_theta(g, curvature(g, h0));
  const double gamma = he_constant(b);
  double c0 = 1.0;
  lt.mapNodes([&](int, int, int, const Eigen::MatrixXcd& m) {
    c0 = std::max(
        c0, (m - gamma * Eigen::MatrixXcd::Identity(m.rows(), m.cols())).norm());
    return m;
  });
  for (const Field& w : samples) {
    double lhs = w1p_norm(g, h0, w, 1.5);
    double rhs = c * (m_spectral(g, h0, w) + c0 * (lp_norm(g, h0, w, 3.0) + 1.0));
    CHECK(lhs <= rhs + 1e-9);
  }

  // Scaled family t*w: the ratio stays bounded (M grows exponentially when
  // spectral gaps exist, so it eventually dominates the linear growth).
  auto e = random_endo(g, h0, rng, 0.5);
  double worst = 0.0;
  for (int t = 1; t <= 12; ++t) {
    double num = w1p_norm(g, h0, static_cast<double>(t) * e.w, 1.5);
    double den = m_spectral(g, h0, static_cast<double>(t) * e.w) +
                 lp_norm(g, h0, static_cast<double>(t) * e.w, 3.0) + 1.0;
    CHECK(den > 0.0);
    worst = std::max(worst, num / den);
  }
  CHECK(std::isfinite(worst));
}
