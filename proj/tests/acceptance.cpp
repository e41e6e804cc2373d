// Acceptance gate: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Runs at the reference grid 64x128.

#include "hym/flow.hpp"
#include "hym/lemmas.hpp"
#include "hym/random_fields.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace hym;

namespace {

int g_failures = 0;

void report(bool ok, const std::string& name) {
  std::printf("%s: %s\n", ok ? "PASS" : "FAIL", name.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

constexpr double kPi = 3.14159265358979323846;

// 1. Path and spectral forms of the functional agree on random deformations.
void criterion_functional_equivalence(const BaseGeometry& g) {
  bool ok = true;
  for (std::vector<int> split : {std::vector<int>{0, 0}, std::vector<int>{1, -1}}) {
    auto b = make_bundle(split);
    auto h0 = fs_metric(g, b);
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 10; ++k) {
      Field w = random_endo(g, h0, rng, 0.5, /*trace_free=*/true).w;
      auto fr = functional_report(g, h0, w, 64);
      ok = ok && fr.discrepancy <= std::max(1e-6, 1e-4 * std::abs(fr.value_path));
    }
  }
  report(ok, "functional equivalence |m_path - m_spectral| on [0,0] and [1,-1]");
}

// 2. Closed-form ray energy: -2*pi*t on the product metric, and the
// exponential correction on a twisted reference metric, both within 1%.
void criterion_closed_form(const BaseGeometry& g) {
  auto b = make_bundle({1, -1});
  auto filt = make_filtration(b, {{0, 1}, {0}}, {1.0, 0.0});
  std::vector<double> ts = {0.25, 0.5, 1.0, 2.0, 4.0};

  auto fs = fs_metric(g, b);
  auto rr = ray_report(g, filt, fs, ts, 128);
  bool ok = true;
  for (const auto& s : rr.m_samples) {
    double expected = -2.0 * kPi * s[0];
    ok = ok && std::abs(s[1] - expected) <= 0.01 * std::abs(expected);
  }

  std::mt19937_64 rng(5);
  auto twisted = random_metric(g, b, rng, 0.3);
  auto rt = ray_report(g, filt, twisted, ts, 128);
  for (const auto& s : rt.m_samples)
    ok = ok && std::abs(s[1] - s[2]) <= 0.01 * std::max(1.0, std::abs(s[2]));

  report(ok, "closed-form ray energy (product and twisted references) within 1%");
}

// 3. Convexity of M along rays and random directions.
void criterion_convexity(const BaseGeometry& g) {
  std::vector<double> ts;
  for (int k = 0; k <= 8; ++k) ts.push_back(0.25 * k);

  bool ok = true;
  auto b = make_bundle({1, -1});
  auto h0 = fs_metric(g, b);
  Field ray_w = ray_from_filtration(g, make_filtration(b, {{0, 1}, {0}}, {1.0, 0.0}), h0);
  ok = ok && convexity_probe(g, h0, ray_w, ts) >= -1e-5;

  std::mt19937_64 rng(77);
  for (int k = 0; k < 20; ++k) {
    Field w = random_endo(g, h0, rng, 0.5, /*trace_free=*/true).w;
    ok = ok && convexity_probe(g, h0, w, ts) >= -1e-5;
  }
  report(ok, "convexity: min second difference of M(tw) >= -1e-5");
}

// 4. Slope dichotomy: destabilizing subbundle gives negative asymptotic
// slope; equal-slope gives slope zero, with M identically zero in the
// holomorphically split case.
void criterion_dichotomy(const BaseGeometry& g) {
  std::vector<double> ts = {0.5, 1.0, 2.0, 4.0};

  auto b1 = make_bundle({1, -1});
  auto r1 = ray_report(g, make_filtration(b1, {{0, 1}, {0}}, {1.0, 0.0}),
                       fs_metric(g, b1), ts, 128);
  bool ok = r1.asymptotic_slope < -1.0;

  auto b2 = make_bundle({2, 2});
  auto filt2 = make_filtration(b2, {{0, 1}, {0}}, {1.0, 0.0});
  auto r2 = ray_report(g, filt2, fs_metric(g, b2), ts, 128);
  ok = ok && std::abs(r2.asymptotic_slope) <= 1e-3;
  double prev = 0.0;
  for (const auto& s : r2.m_samples) {
    ok = ok && s[1] <= prev + 1e-6 && std::abs(s[1]) <= 1e-6;
    prev = s[1];
  }
  report(ok, "slope dichotomy: negative slope iff destabilizing, M == 0 when split");
}

// 5. Suffix-sum witness against brute force on 1e5 random instances.
void criterion_witness() {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> mdist(2, 6);
  std::uniform_real_distribution<double> real(-5.0, 5.0);
  std::uniform_int_distribution<int> integer(-5, 5);
  bool ok = true;
  for (long trial = 0; trial < 100000 && ok; ++trial) {
    const int m = mdist(rng);
    const bool integral = trial % 2 == 0;
    std::vector<double> lambdas(m), as(m);
    lambdas[0] = integral ? integer(rng) : real(rng);
    for (int i = 1; i < m; ++i)
      lambdas[i] = lambdas[i - 1] -
                   (integral ? 1 + std::abs(integer(rng)) : 0.01 + std::abs(real(rng)));
    double total = 0.0;
    for (int i = 0; i + 1 < m; ++i) {
      as[i] = integral ? integer(rng) : real(rng);
      total += as[i];
    }
    as[m - 1] = -total;
    double weighted = 0.0;
    for (int i = 0; i < m; ++i) weighted += lambdas[i] * as[i];
    if (weighted > 0.0) {
      for (auto& a : as) a = -a;
      weighted = -weighted;
    }
    const bool strict = weighted < 0.0;
    WitnessResult got = alpha_sum_witness(lambdas, as, strict);
    WitnessResult want;
    for (int i = 1; i < m; ++i) {
      double suffix = 0.0;
      for (int k = i; k < m; ++k) suffix += as[k];
      if (strict ? suffix > 0.0 : suffix >= 0.0) {
        want = WitnessResult{true, i + 1, suffix};
        break;
      }
    }
    ok = got.found && want.found && got.index == want.index &&
         std::abs(got.suffix_value - want.suffix_value) <= 1e-12 &&
         (!strict || got.suffix_value > 0.0);
  }
  report(ok, "suffix-sum witness matches brute force on 1e5 instances");
}

// 6. Block-convergence conclusions with planted decay rates (1/k off the
// diagonal, 1/k^2 diagonal unitarity defect).
void criterion_block_convergence() {
  Eigen::VectorXd d(2);
  d << 2.0, 1.0;
  std::vector<Eigen::MatrixXcd> as;
  std::vector<Eigen::VectorXd> ds;
  for (int k = 1; k <= 200; ++k) {
    Eigen::MatrixXcd a(2, 2);
    double th = 1e-5 / k;
    a << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    as.push_back(a);
    ds.push_back(d);
  }
  auto bc = block_convergence_check(as, ds, d);
  bool ok = bc.hypothesis_ok && bc.dk_confirmed && bc.offdiag_confirmed &&
            bc.diag_confirmed;
  ok = ok && std::abs(bc.offdiag_rate - 1.0) <= 0.2;
  ok = ok && std::abs(bc.diag_rate - 2.0) <= 0.4;
  report(ok, "block-convergence conclusions with rates near planted values");
}

// 7. Filtration -> ray -> analysis round trip recovers the filtration and a
// destabilizing stage.
void criterion_extraction(const BaseGeometry& g) {
  auto b = make_bundle({1, -1});
  auto filt = make_filtration(b, {{0, 1}, {0}}, {1.0, 0.0});
  std::mt19937_64 rng(5);
  auto h0 = random_metric(g, b, rng, 0.3);
  Field w = ray_from_filtration(g, filt, h0);
  auto rep = ray_extraction_analysis(g, h0, w, {4.0, 8.0, 16.0});

  bool ok = rep.eigenvalues_constant && rep.projections_pass;
  ok = ok && rep.stage_sets.size() == filt.stages.size();
  for (size_t s = 0; ok && s < filt.stages.size(); ++s)
    ok = ok && rep.stage_sets[s] == filt.stages[s];
  for (const auto& pc : rep.projection_checks)
    ok = ok && pc.sa_defect <= 1e-6 && pc.idem_defect <= 1e-6 && pc.holo_defect <= 1e-6;
  // A reported stage whose slope is at least the bundle slope.
  double mu_e = bundle_slope(b);
  bool destab = false;
  for (size_t s = 1; s < rep.stage_slopes.size(); ++s)
    destab = destab || rep.stage_slopes[s] >= mu_e - 1e-6;
  ok = ok && destab && rep.witness_applicable && rep.witness.found;
  report(ok, "extraction round trip recovers stages, projections, destabilizer");
}

// 8. Reverse Sobolev inequality certified by a finite constant on 50 samples.
void criterion_reverse_sobolev(const BaseGeometry& g) {
  auto b = make_bundle({1, -1});
  auto h0 = fs_metric(g, b);
  std::mt19937_64 rng(31);
  std::vector<Field> samples;
  for (int k = 0; k < 50; ++k)
    samples.push_back(random_endo(g, h0, rng, 0.1 + 0.1 * k).w);
  double c = reverse_sobolev_check(g, h0, samples, 1.5);
  report(std::isfinite(c) && c > 0.0,
         "reverse Sobolev: finite constant certifies 50 samples at p = 1.5");
}

// 9. Flow dichotomy: convergence on the polystable bundle, divergence with
// unbounded energy decrease on the unstable one.
void criterion_flow(const BaseGeometry& g) {
  auto b1 = make_bundle({1, 1});
  std::mt19937_64 rng(3);
  auto h0 = fs_metric(g, b1);
  Field w = random_endo(g, h0, rng, 0.3, /*trace_free=*/true).w;
  auto fr = hym_run(g, metric_deform(h0, w, 1.0), 0.05, 10000, 1e-6);
  bool ok = fr.reached_target && fr.final_state.he_residual < 1e-6;
  for (size_t k = 1; k < fr.trajectory.size(); ++k)
    ok = ok && fr.trajectory[k].m_value <= fr.trajectory[k - 1].m_value + 1e-8;

  auto b2 = make_bundle({1, -1});
  auto fu = hym_run(g, fs_metric(g, b2), 0.05, 20, 1e-6);
  ok = ok && !fu.reached_target && fu.final_state.m_value < -50.0;
  for (const auto& s : fu.trajectory)
    ok = ok && s.he_residual > 0.1;
  report(ok, "flow: converges on [1,1], residual stays > 0.1 and M < -50 on [1,-1]");
}

// 10. Gauge invariance of the spectral density under constant unitaries.
void criterion_gauge(const BaseGeometry& g) {
  auto b = make_bundle({1, -1});
  auto h0 = fs_metric(g, b);
  std::mt19937_64 rng(9);
  Field w = random_endo(g, h0, rng, 0.5, /*trace_free=*/true).w;
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool ok = true;
  for (int k = 0; k < 100 && ok; ++k) {
    Eigen::MatrixXcd x(2, 2);
    x(0, 0) = gauss(rng);
    x(1, 1) = gauss(rng);
    x(0, 1) = Complex(gauss(rng), gauss(rng));
    x(1, 0) = std::conj(x(0, 1));
    Eigen::MatrixXcd u = (Complex(0, 1) * x).exp();
    ok = gauge_invariance_check(g, h0, w, constant_field(g, u)) <= 1e-9;
  }
  report(ok, "gauge invariance of f_w under 100 constant unitaries at 1e-9");
}

}  // namespace

int main() {
  auto wall0 = std::chrono::steady_clock::now();
  auto g = build_geometry(64, 128);

  criterion_functional_equivalence(g);
  criterion_closed_form(g);
  criterion_convexity(g);
  criterion_dichotomy(g);
  criterion_witness();
  criterion_block_convergence();
  criterion_extraction(g);
  criterion_reverse_sobolev(g);
  criterion_flow(g);
  criterion_gauge(g);

  auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0);
  std::printf("%d/10 criteria passed (%.1f s)\n", 10 - g_failures, secs.count());
  return g_failures == 0 ? 0 : 1;
}
