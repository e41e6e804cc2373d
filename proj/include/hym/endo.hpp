#pragma once

#include "hym/calculus.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace hym {

/// h0-self-adjoint endomorphism field (an element of the tangent space H of
/// the metric space, or of its trace-free slice).
struct EndoField {
  Field w;
  bool trace_free = false;
};

/// h0-adjoint: w^{*h0} = h^{-1} w^dagger h.
inline Field star_h(const MetricField& h0, const Field& w) {
  return pw_product(pw_inverse(h0.h), pw_product(pw_dagger(w), h0.h));
}

/// h0-self-adjoint part (n + n^{*h0})/2.
inline Field sa_part(const MetricField& h0, const Field& n) {
  return 0.5 * (n + star_h(h0, n));
}

/// Max pointwise deviation from h0-self-adjointness, measured as
/// sup |h w - w^dagger h|.
inline double sa_defect(const MetricField& h0, const Field& w) {
  Field lhs = pw_product(h0.h, w);
  return (lhs - pw_dagger(lhs)).supNorm();
}

/// Removes the pointwise trace: w - (tr w / r) Id.
inline Field trace_free_projection(const Field& w) {
  Field out = w;
  Field tr = trace_field(w);
  for (int c = 0; c < kNumCharts; ++c)
    for (int i = 0; i < w.rank(); ++i)
      out.at(c, i, i) -= tr.scalar(c) / static_cast<double>(w.rank());
  return out;
}

/// Covariant (1,0)-derivative of an endomorphism w.r.t. the h0-Chern
/// connection: D'w = d_z w + [A0, w] (dz-coefficient, per chart frame).
inline Field d_prime(const BaseGeometry& g, const MetricField& h0, const Field& w) {
  Field a = chern_connection(g, h0);
  return del(g, w) + pw_product(a, w) - pw_product(w, a);
}

/// Pointwise eigen-structure of an h0-self-adjoint endomorphism field.
///
/// Per node: eigenvalues sorted descending; `basis` columns are the
/// eigenvectors in the chart frame (w = basis D basis^{-1}); `eta` is the
/// dbar-derivative of w conjugated into the unitary eigenframe of the
/// Hermitian representative S = h^{1/2} w h^{-1/2}; `block_sizes` groups
/// eigenvalues equal within the clustering tolerance. Nodes are indexed
/// ir * n_angular + ia.
struct SpectralData {
  int rank = 0;
  std::array<std::vector<Eigen::VectorXd>, kNumCharts> eigenvalues;
  std::array<std::vector<std::vector<int>>, kNumCharts> block_sizes;
  std::array<std::vector<Eigen::MatrixXcd>, kNumCharts> eta;
  std::array<std::vector<Eigen::MatrixXcd>, kNumCharts> basis;
};

inline SpectralData eigen_cluster(const BaseGeometry& g, const MetricField& h0,
                                  const Field& w, double tol = 1e-8) {
  if (!(tol > 0.0)) throw std::invalid_argument("eigen_cluster: tol must be > 0");
  const int r = w.rank();
  const int nodes = g.n_radial * g.n_angular;
  SpectralData sd;
  sd.rank = r;
  Field dw = dbar(g, w);
  for (int c = 0; c < kNumCharts; ++c) {
    sd.eigenvalues[c].resize(nodes);
    sd.block_sizes[c].resize(nodes);
    sd.eta[c].resize(nodes);
    sd.basis[c].resize(nodes);
    parallel_for(g.n_radial, [&](int ir) {
      for (int ia = 0; ia < g.n_angular; ++ia) {
        int idx = ir * g.n_angular + ia;
        Eigen::MatrixXcd h = h0.h.node(c, ir, ia);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hs(h);
        Eigen::MatrixXcd hhalf = hs.operatorSqrt();
        Eigen::MatrixXcd hihalf = hs.operatorInverseSqrt();
        Eigen::MatrixXcd S = hhalf * w.node(c, ir, ia) * hihalf;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (S + S.adjoint()));
        if (!es.eigenvalues().allFinite())
          throw std::runtime_error("eigen_cluster: eigensolver failure");
        // Descending order.
        Eigen::VectorXd lam = es.eigenvalues().reverse();
        Eigen::MatrixXcd U = es.eigenvectors().rowwise().reverse();
        sd.eigenvalues[c][idx] = lam;
        sd.basis[c][idx] = hihalf * U;
        sd.eta[c][idx] =
            U.adjoint() * (hhalf * dw.node(c, ir, ia) * hihalf) * U;
        std::vector<int> blocks;
        int run = 1;
        for (int k = 1; k < r; ++k) {
          if (lam[k - 1] - lam[k] <= tol) {
            ++run;
          } else {
            blocks.push_back(run);
            run = 1;
          }
        }
        blocks.push_back(run);
        sd.block_sizes[c][idx] = std::move(blocks);
      }
    });
  }
  return sd;
}

/// phi(x) = (e^x - x - 1)/x^2, continuously extended by phi(0) = 1/2.
inline double phi_kernel(double x) {
  if (std::abs(x) < 1e-5) return 0.5 + x / 6.0 + x * x / 24.0;
  return (std::exp(x) - x - 1.0) / (x * x);
}

/// Spectral density f_w as a nonnegative scalar field:
/// f_w(z) = sum_{a,b} |eta_ab|^2 phi(lambda_a - lambda_b), with the (0,1)-form
/// norm contracted against omega.
inline Field f_w_field(const BaseGeometry& g, const SpectralData& sd, double t = 1.0) {
  const int r = sd.rank;
  Field out(1, g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c)
    for (int ir = 0; ir < g.n_radial; ++ir)
      for (int ia = 0; ia < g.n_angular; ++ia) {
        int idx = ir * g.n_angular + ia;
        const Eigen::VectorXd& lam = sd.eigenvalues[c][idx];
        const Eigen::MatrixXcd& eta = sd.eta[c][idx];
        double acc = 0.0;
        for (int a = 0; a < r; ++a)
          for (int b = 0; b < r; ++b)
            acc += t * t * std::norm(eta(a, b)) * phi_kernel(t * (lam[a] - lam[b]));
        out.scalar(c)(ir, ia) = acc / g.omega_i_density[ir];
      }
  return out;
}

inline Field f_w(const BaseGeometry& g, const MetricField& h0, const Field& w,
                 double tol = 1e-8) {
  return f_w_field(g, eigen_cluster(g, h0, w, tol));
}

/// Recomputes f_w after the frame change e -> e u (u pointwise unitary) and
/// returns the max pointwise difference from the original. The conjugated
/// frame is generally non-holomorphic, so dbar picks up the connection
/// correction [w', u^{-1} dbar u].
inline double gauge_invariance_check(const BaseGeometry& g, const MetricField& h0,
                                     const Field& w, const Field& u) {
  // Unitarity guard.
  Field uu = pw_product(u, pw_dagger(u));
  Field id = uu;
  id.mapNodes([&](int, int, int, const Eigen::MatrixXcd& m) {
    return Eigen::MatrixXcd::Identity(m.rows(), m.cols()).eval();
  });
  if ((uu - id).supNorm() > 1e-10)
    throw std::invalid_argument("gauge_invariance_check: u is not unitary");

  Field f0 = f_w(g, h0, w);

  Field uinv = pw_dagger(u);
  MetricField h1{h0.bundle, pw_product(pw_dagger(u), pw_product(h0.h, u))};
  Field w1 = pw_product(uinv, pw_product(w, u));
  Field conn = pw_product(uinv, dbar(g, u));
  // Covariant dbar of w in the new frame: dbar(w1) - [w1, conn] ... built by
  // correcting the eta blocks directly.
  Field dw1 = dbar(g, w1) + pw_product(conn, w1) - pw_product(w1, conn);

  // Recompute the spectral density from (h1, w1, dw1).
  Field f1(1, g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c)
    for (int ir = 0; ir < g.n_radial; ++ir)
      for (int ia = 0; ia < g.n_angular; ++ia) {
        Eigen::MatrixXcd h = h1.h.node(c, ir, ia);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hs(h);
        Eigen::MatrixXcd hhalf = hs.operatorSqrt();
        Eigen::MatrixXcd hihalf = hs.operatorInverseSqrt();
        Eigen::MatrixXcd S = hhalf * w1.node(c, ir, ia) * hihalf;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (S + S.adjoint()));
        Eigen::VectorXd lam = es.eigenvalues().reverse();
        Eigen::MatrixXcd U = es.eigenvectors().rowwise().reverse();
        Eigen::MatrixXcd eta = U.adjoint() * (hhalf * dw1.node(c, ir, ia) * hihalf) * U;
        double acc = 0.0;
        for (int a = 0; a < w.rank(); ++a)
          for (int b = 0; b < w.rank(); ++b)
            acc += std::norm(eta(a, b)) * phi_kernel(lam[a] - lam[b]);
        f1.scalar(c)(ir, ia) = acc / g.omega_i_density[ir];
      }
  return (f1 - f0).supNorm();
}

/// L^p norm (int tr(w w^{*h0})^{p/2} omega)^{1/p}.
inline double lp_norm(const BaseGeometry& g, const MetricField& h0, const Field& w,
                      double p) {
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  Field sq = trace_field(pw_product(w, star_h(h0, w)));
  Field integrand(1, g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c)
    integrand.scalar(c) =
        sq.scalar(c).real().cwiseMax(0.0).array().pow(p / 2.0).cast<Complex>();
  return std::pow(integrate_real(g, integrand), 1.0 / p);
}

/// L^p norm of dbar w, with the pointwise (0,1)-form norm induced by h0 and
/// omega: |dbar w|^2 = tr((dbar w)(dbar w)^{*h0}) / rho.
inline double dbar_lp_norm(const BaseGeometry& g, const MetricField& h0,
                           const Field& w, double p) {
  if (p < 1.0) throw std::invalid_argument("dbar_lp_norm: p must be >= 1");
  Field dw = dbar(g, w);
  Field sq = trace_field(pw_product(dw, star_h(h0, dw)));
  Field integrand(1, g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c) {
    Eigen::ArrayXXd v = sq.scalar(c).real().cwiseMax(0.0).array();
    for (int ir = 0; ir < g.n_radial; ++ir) v.row(ir) /= g.omega_i_density[ir];
    integrand.scalar(c) = v.pow(p / 2.0).cast<Complex>();
  }
  return std::pow(integrate_real(g, integrand), 1.0 / p);
}

/// W^{1,p} grid proxy: ||w||_{L^p} + ||dbar w||_{L^p}.
inline double w1p_norm(const BaseGeometry& g, const MetricField& h0, const Field& w,
                       double p) {
  return lp_norm(g, h0, w, p) + dbar_lp_norm(g, h0, w, p);
}

/// Duality pairing <w, u> = int tr(w u^{*h0}) omega + int tr(D'w . dbar u),
/// the second term contracted against omega.
inline Complex duality_pairing(const BaseGeometry& g, const MetricField& h0,
                               const Field& w, const Field& u) {
  if (!w.sameShape(u)) throw std::invalid_argument("duality_pairing: shape mismatch");
  Field zero_order = trace_field(pw_product(w, star_h(h0, u)));
  Field first = trace_field(pw_product(d_prime(g, h0, w), dbar(g, u)));
  for (int c = 0; c < kNumCharts; ++c)
    for (int ir = 0; ir < g.n_radial; ++ir)
      first.scalar(c).row(ir) /= g.omega_i_density[ir];
  return integrate(g, zero_order) + integrate(g, first);
}

}  // namespace hym
