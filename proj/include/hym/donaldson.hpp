#pragma once

#include "hym/endo.hpp"

#include <limits>
#include <numbers>
#include <vector>

namespace hym {

/// Hermite-Einstein constant gamma = 2 pi mu_E (volume-1 normalization).
inline double he_constant(const BundleSpec& b) {
  return 2.0 * std::numbers::pi * bundle_slope(b);
}

/// Donaldson functional via the path integral:
/// M(w) = int_0^1 int_X tr(w Lambda Theta_s) omega ds - gamma int_X tr(w) omega
/// along the constant-velocity path h_s = h0 e^{s w}, by composite Simpson.
inline double m_path(const BaseGeometry& g, const MetricField& h0, const Field& w,
                     int n_steps = 64) {
  if (n_steps < 4) throw std::invalid_argument("m_path: n_steps must be >= 4");
  if (n_steps % 2 == 1) ++n_steps;

  std::vector<double> integrand(n_steps + 1);
  parallel_for(n_steps + 1, [&](int k) {
    double s = static_cast<double>(k) / n_steps;
    MetricField hs = metric_deform(h0, w, s);
    Field lt = lambda_theta(g, curvature(g, hs));
    integrand[k] = integrate(g, trace_field(pw_product(w, lt))).real();
  });

  double acc = integrand[0] + integrand[n_steps];
  for (int k = 1; k < n_steps; ++k) acc += (k % 2 == 1 ? 4.0 : 2.0) * integrand[k];
  double path_term = acc / (3.0 * n_steps);

  double tr_term = integrate(g, trace_field(w)).real();
  return path_term - he_constant(h0.bundle) * tr_term;
}

/// Donaldson functional via the spectral density:
/// M(w) = int_X f_w omega + int_X tr(Lambda Theta_0 w) omega
///        - gamma int_X tr(w) omega.
inline double m_spectral(const BaseGeometry& g, const MetricField& h0, const Field& w,
                         double cluster_tol = 1e-8) {
  double f_term = integrate_real(g, f_w(g, h0, w, cluster_tol));
  Field lt0 = lambda_theta(g, curvature(g, h0));
  double curv_term = integrate(g, trace_field(pw_product(lt0, w))).real();
  double tr_term = integrate(g, trace_field(w)).real();
  return f_term + curv_term - he_constant(h0.bundle) * tr_term;
}

struct FunctionalReport {
  double value_path = 0.0;
  double value_spectral = 0.0;
  double gamma = 0.0;
  double discrepancy = 0.0;
};

inline FunctionalReport functional_report(const BaseGeometry& g, const MetricField& h0,
                                          const Field& w, int n_steps = 64) {
  FunctionalReport r;
  r.value_path = m_path(g, h0, w, n_steps);
  r.value_spectral = m_spectral(g, h0, w);
  r.gamma = he_constant(h0.bundle);
  r.discrepancy = std::abs(r.value_path - r.value_spectral);
  return r;
}

/// Minimum centered second difference of t -> M(t w) over the sample points.
/// Nonnegative (up to quadrature error) by convexity of M along t w.
inline double convexity_probe(const BaseGeometry& g, const MetricField& h0,
                              const Field& w, const std::vector<double>& ts) {
  if (ts.size() < 3) throw std::invalid_argument("convexity_probe: need >= 3 points");
  std::vector<double> m(ts.size());
  // One spectral decomposition serves every t: f_{tw} only rescales the
  // kernel, and the curvature/trace terms are linear in t.
  auto sd = eigen_cluster(g, h0, w);
  Field lt0 = lambda_theta(g, curvature(g, h0));
  double lin = integrate(g, trace_field(pw_product(lt0, w))).real() -
               he_constant(h0.bundle) * integrate(g, trace_field(w)).real();
  parallel_for(static_cast<int>(ts.size()), [&](int k) {
    m[k] = integrate_real(g, f_w_field(g, sd, ts[k])) + ts[k] * lin;
  });
  double worst = std::numeric_limits<double>::infinity();
  for (size_t k = 1; k + 1 < ts.size(); ++k)
    worst = std::min(worst, m[k - 1] + m[k + 1] - 2.0 * m[k]);
  return worst;
}

/// Fits the smallest C with ||w||_{W^{1,p}} <= C (M(w) + c0 (||w||_{L^{p*}} + 1))
/// over the samples, p* = p/(2-p). The curvature constant
/// c0 = max(1, sup |LambdaTheta_0 - gamma|) depends only on the base geometry
/// and the reference metric; it makes the bracket nonnegative for every w
/// (the spectral density integral is nonnegative and the linear curvature
/// term is bounded by c0 ||w||_{L^1}), so the fit is always feasible.
/// Returns +infinity only if a sample still has a nonpositive bracket with a
/// positive left side (inequality violated for every C).
inline double reverse_sobolev_check(const BaseGeometry& g, const MetricField& h0,
                                    const std::vector<Field>& samples, double p) {
  if (samples.empty())
    throw std::invalid_argument("reverse_sobolev_check: empty sample list");
  if (!(p > 1.0 && p < 2.0))
    throw std::invalid_argument("reverse_sobolev_check: p must be in (1,2)");
  double pstar = p / (2.0 - p);
  Field lt = lambda_theta(g, curvature(g, h0));
  const double gamma = he_constant(h0.bundle);
  double c0 = 1.0;
  lt.mapNodes([&](int, int, int, const Eigen::MatrixXcd& m) {
    Eigen::MatrixXcd d = m - gamma * Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    c0 = std::max(c0, d.norm());
    return m;
  });
  double c = 0.0;
  for (const Field& w : samples) {
    double lhs = w1p_norm(g, h0, w, p);
    double bracket =
        m_spectral(g, h0, w) + c0 * (lp_norm(g, h0, w, pstar) + 1.0);
    if (bracket <= 0.0) {
      if (lhs > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    c = std::max(c, lhs / bracket);
  }
  return c;
}

}  // namespace hym
