#pragma once

#include "hym/donaldson.hpp"
#include "hym/witness.hpp"

#include <array>
#include <numbers>
#include <optional>
#include <vector>

namespace hym {

/// Ray endomorphism of a filtration: w acts as lambda_i on the h0-orthogonal
/// complement G_i of E_{i+1} in E_i, i.e. w = sum_i lambda_i (P_i - P_{i+1})
/// with P_i the h0-orthogonal projection onto stage E_i. The geodesic ray is
/// h_t = h0 e^{t w}.
inline Field ray_from_filtration(const BaseGeometry& g, const Filtration& filt,
                                 const MetricField& h0) {
  const int r = h0.bundle.rank();
  const int m = filt.numStages();
  Field w(r, g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c)
    parallel_for(g.n_radial, [&](int ir) {
      for (int ia = 0; ia < g.n_angular; ++ia) {
        Eigen::MatrixXcd h = h0.h.node(c, ir, ia);
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(r, r);
        Eigen::MatrixXcd prev = Eigen::MatrixXcd::Identity(r, r);  // P_1
        for (int i = 0; i < m; ++i) {
          Eigen::MatrixXcd next = Eigen::MatrixXcd::Zero(r, r);  // P_{i+1}
          if (i + 1 < m) {
            const auto& idx = filt.stages[i + 1];
            Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(r, static_cast<int>(idx.size()));
            for (size_t k = 0; k < idx.size(); ++k) V(idx[k], static_cast<int>(k)) = 1.0;
            next = V * (V.adjoint() * h * V).inverse() * V.adjoint() * h;
          }
          acc += filt.weights[i] * (prev - next);
          prev = next;
        }
        w.setNode(c, ir, ia, acc);
      }
    });
  return w;
}

/// Second-fundamental-form energies B(i, j) = int_X |beta_{ij}|^2_{h0} omega
/// for quotient pairs i < j (0-based; strictly upper triangular, other
/// entries zero).
inline Eigen::MatrixXd b_coefficients(const BaseGeometry& g, const Filtration& filt,
                                      const MetricField& h0) {
  const int m = filt.numStages();
  FrameData fd = second_fundamental_form(g, h0, filt);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
  for (int c = 0; c < kNumCharts; ++c)
    for (int ir = 0; ir < g.n_radial; ++ir)
      for (int ia = 0; ia < g.n_angular; ++ia) {
        Eigen::MatrixXcd af = fd.a_frame.node(c, ir, ia);
        Eigen::MatrixXcd gram = fd.gram.node(c, ir, ia);
        for (int i = 0; i < m; ++i)
          for (int j = i + 1; j < m; ++j) {
            auto blk = [&](const Eigen::MatrixXcd& mat, int p, int q) {
              return mat.block(fd.offsets[p], fd.offsets[q], fd.sizes[p], fd.sizes[q]);
            };
            Eigen::MatrixXcd beta = blk(af, i, j);
            Eigen::MatrixXcd hi = blk(gram, i, i);
            Eigen::MatrixXcd hj = blk(gram, j, j);
            double dens =
                (hj.inverse() * beta.adjoint() * hi * beta).trace().real() /
                g.omega_i_density[ir];
            b(i, j) += dens * g.node_weight(ir, ia);
          }
      }
  return b;
}

/// Linear coefficient of Theorem 3.5: 2 pi sum_i lambda_i rk(F_i)(mu_{F_i} - mu_E).
inline double slope_coefficient(const Filtration& filt) {
  double mu_e = bundle_slope(filt.bundle);
  double acc = 0.0;
  for (int i = 0; i < filt.numStages(); ++i) {
    double mu_f = static_cast<double>(filt.quotientDegree(i)) / filt.quotientRank(i);
    acc += filt.weights[i] * filt.quotientRank(i) * (mu_f - mu_e);
  }
  return 2.0 * std::numbers::pi * acc;
}

/// Closed-form Donaldson energy along the ray:
/// M(t w) = slope_coefficient * t - sum_{i<j} B(i,j) (1 - e^{-t(l_i - l_j)}).
inline double closed_form_m(const Filtration& filt, const Eigen::MatrixXd& b, double t,
                            double mu_e) {
  double acc = 0.0;
  for (int i = 0; i < filt.numStages(); ++i) {
    double mu_f = static_cast<double>(filt.quotientDegree(i)) / filt.quotientRank(i);
    acc += filt.weights[i] * filt.quotientRank(i) * (mu_f - mu_e);
  }
  double value = 2.0 * std::numbers::pi * acc * t;
  for (int i = 0; i < filt.numStages(); ++i)
    for (int j = i + 1; j < filt.numStages(); ++j)
      value -= b(i, j) *
               (1.0 - std::exp(-t * (filt.weights[i] - filt.weights[j])));
  return value;
}

/// Max block deviation between the Chern connection of h_t expressed in the
/// t = 0 adapted frame and its predicted block rescaling: the upper block
/// (i, j) of A scales by e^{-t(lambda_i - lambda_j)}, diagonal blocks and the
/// (0,1) part are t-independent.
inline double ray_connection_check(const BaseGeometry& g, const Filtration& filt,
                                   const MetricField& h0, double t) {
  FrameData fd = second_fundamental_form(g, h0, filt);
  Field w = ray_from_filtration(g, filt, h0);
  MetricField ht = metric_deform(h0, w, t);
  Field at = chern_connection(g, ht);
  Field finv = pw_inverse(fd.frame);
  Field atf = pw_product(finv, pw_product(at, fd.frame) + del(g, fd.frame));

  const int m = filt.numStages();
  double worst = 0.0;
  for (int c = 0; c < kNumCharts; ++c)
    for (int ir = 0; ir < g.n_radial; ++ir)
      for (int ia = 0; ia < g.n_angular; ++ia) {
        Eigen::MatrixXcd direct = atf.node(c, ir, ia);
        Eigen::MatrixXcd predicted = fd.a_frame.node(c, ir, ia);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            double scale =
                (i < j) ? std::exp(-t * (filt.weights[i] - filt.weights[j])) : 0.0;
            predicted.block(fd.offsets[i], fd.offsets[j], fd.sizes[i], fd.sizes[j]) *=
                scale;
          }
        worst = std::max(worst, (direct - predicted).cwiseAbs().maxCoeff());
      }
  return worst;
}

/// Corollary 3.7 witness: when the slope coefficient is nonpositive, some
/// stage index i >= 2 (1-based) has mu_{E_i} >= mu_E (strict when the
/// coefficient is strictly negative). Returns std::nullopt when the
/// coefficient is positive.
inline std::optional<int> destabilizer_report(const Filtration& filt,
                                              double slope_coeff) {
  if (slope_coeff > 0.0) return std::nullopt;
  double mu_e = bundle_slope(filt.bundle);
  std::vector<double> as(filt.numStages());
  for (int i = 0; i < filt.numStages(); ++i) {
    double mu_f = static_cast<double>(filt.quotientDegree(i)) / filt.quotientRank(i);
    as[i] = filt.quotientRank(i) * (mu_f - mu_e);
  }
  WitnessResult w = alpha_sum_witness(filt.weights, as, slope_coeff < 0.0);
  if (!w.found) return std::nullopt;
  return w.index;
}

struct RayReport {
  double slope_coefficient = 0.0;
  Eigen::MatrixXd b_matrix;
  std::vector<std::array<double, 3>> m_samples;  // (t, M_direct, M_closed)
  double asymptotic_slope = 0.0;
  double max_residual = 0.0;
};

inline RayReport ray_report(const BaseGeometry& g, const Filtration& filt,
                            const MetricField& h0, const std::vector<double>& ts,
                            int n_steps = 64) {
  RayReport rep;
  rep.slope_coefficient = slope_coefficient(filt);
  rep.b_matrix = b_coefficients(g, filt, h0);
  Field w = ray_from_filtration(g, filt, h0);
  double mu_e = bundle_slope(filt.bundle);
  for (double t : ts) {
    double direct = m_path(g, h0, t * w, n_steps);
    double closed = closed_form_m(filt, rep.b_matrix, t, mu_e);
    rep.m_samples.push_back({t, direct, closed});
    rep.max_residual = std::max(rep.max_residual, std::abs(direct - closed));
  }
  // dM/dt of the closed form at the largest probed t; the exponential terms
  // have died off there, so this approximates the t -> infinity slope.
  if (!ts.empty()) {
    double tmax = *std::max_element(ts.begin(), ts.end());
    double dt = 1e-3;
    rep.asymptotic_slope = (closed_form_m(filt, rep.b_matrix, tmax + dt, mu_e) -
                            closed_form_m(filt, rep.b_matrix, tmax, mu_e)) /
                           dt;
  }
  return rep;
}

}  // namespace hym
