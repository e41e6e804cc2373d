#pragma once

#include "hym/bundle.hpp"
#include "hym/geometry.hpp"
#include "hym/parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <vector>

namespace hym {

/// Hermitian metric on a split bundle, sampled per chart in the holomorphic
/// coordinate frame. Pairing convention: h(u, v) = v^dagger H u, so the Chern
/// connection is A = H^{-1} d_z H and H Theta is pointwise Hermitian.
struct MetricField {
  BundleSpec bundle;
  Field h;
};

/// Reference Fubini-Study metric: diag((1+|zeta|^2)^{-k_i}) in each chart.
inline MetricField fs_metric(const BaseGeometry& g, const BundleSpec& b) {
  MetricField m{b, Field(b.rank(), g.n_radial, g.n_angular)};
  for (int c = 0; c < kNumCharts; ++c)
    for (int jr = 0; jr < g.n_radial; ++jr) {
      double s = 1.0 + g.grid_radial[jr] * g.grid_radial[jr];
      for (int i = 0; i < b.rank(); ++i)
        m.h.at(c, i, i).row(jr).setConstant(std::pow(s, -b.splitting[i]));
    }
  return m;
}

/// Pointwise matrix exponential.
inline Field pw_exp(const Field& a) {
  Field out(a.rank(), a.nRadial(), a.nAngular());
  for (int c = 0; c < kNumCharts; ++c)
    parallel_for(a.nRadial(), [&](int ir) {
      for (int ia = 0; ia < a.nAngular(); ++ia)
        out.setNode(c, ir, ia, a.node(c, ir, ia).exp().eval());
    });
  return out;
}

/// Metric along the deformation h_s = h0 e^{s w} (w must be h0-self-adjoint,
/// i.e. h0 w = w^dagger h0, which keeps h_s Hermitian).
inline MetricField metric_deform(const MetricField& h0, const Field& w, double s) {
  return MetricField{h0.bundle, pw_product(h0.h, pw_exp(s * w))};
}

/// Max pointwise deviation of h from Hermitian symmetry.
inline double hermiticity_defect(const MetricField& m) {
  return 0.5 * (m.h - pw_dagger(m.h)).supNorm();
}

/// Min eigenvalue of h over all nodes (positive-definiteness witness).
inline double metric_min_eigenvalue(const MetricField& m) {
  double lo = std::numeric_limits<double>::infinity();
  for (int c = 0; c < kNumCharts; ++c)
    for (int ir = 0; ir < m.h.nRadial(); ++ir)
      for (int ia = 0; ia < m.h.nAngular(); ++ia) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.h.node(c, ir, ia));
        lo = std::min(lo, es.eigenvalues().minCoeff());
      }
  return lo;
}

/// Transition compatibility diagnostic: near the gluing circle, compares the
/// chart-1 values against G^{-dagger} h0 G^{-1} with G = diag(z^{-k}),
/// evaluating chart 0 by radial interpolation. Returns the max deviation.
inline double metric_transition_mismatch(const BaseGeometry& g, const MetricField& m,
                                         double r_min = 0.94) {
  const int r = m.bundle.rank();
  double worst = 0.0;
  for (int jr = 0; jr < g.n_radial; ++jr) {
    double rw = g.grid_radial[jr];
    if (rw < r_min) continue;
    for (int ia = 0; ia < g.n_angular; ++ia) {
      Complex w = g.coordinate(jr, ia);
      Complex z = 1.0 / w;
      int ia0 = g.mirrorAngular(ia);
      Eigen::MatrixXcd h0(r, r);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
          h0(i, j) = interp_radial(g, m.h.at(0, i, j), std::abs(z), ia0);
      Eigen::MatrixXcd gi = m.bundle.transition(z).inverse();
      Eigen::MatrixXcd predicted = gi.adjoint() * h0 * gi;
      worst = std::max(worst, (m.h.node(1, jr, ia) - predicted).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

/// Chern connection coefficient A with D^{1,0} = d_z + A in each chart frame:
/// A = h^{-1} d_z h.
inline Field chern_connection(const BaseGeometry& g, const MetricField& m) {
  return pw_product(pw_inverse(m.h), del(g, m.h));
}

/// Curvature coefficient of i dz^dzbar in each chart frame:
/// Theta = i dbar(A) as a form, i.e. theta = -d_zbar A.
inline Field curvature(const BaseGeometry& g, const MetricField& m) {
  return Complex(-1.0) * dbar(g, chern_connection(g, m));
}

/// Contraction Lambda Theta: divides the i dz^dzbar coefficient by the
/// corresponding density of omega. A global endomorphism field.
inline Field lambda_theta(const BaseGeometry& g, const Field& theta) {
  Field out = theta;
  for (int c = 0; c < kNumCharts; ++c)
    for (int i = 0; i < out.rank(); ++i)
      for (int j = 0; j < out.rank(); ++j)
        for (int jr = 0; jr < g.n_radial; ++jr)
          out.at(c, i, j).row(jr) /= g.omega_i_density[jr];
  return out;
}

/// Chern-Weil slope mu = deg / rank = (1/(2 pi rk)) int tr(Lambda Theta) omega.
inline double slope(const BaseGeometry& g, const MetricField& m) {
  Field lt = lambda_theta(g, curvature(g, m));
  return integrate(g, trace_field(lt)).real() /
         (2.0 * std::numbers::pi * m.bundle.rank());
}

/// Overlap mismatch of a global endomorphism field (should satisfy
/// M_1 = G M_0 G^{-1} across the gluing). Runtime accuracy diagnostic.
inline double endo_overlap_mismatch(const BaseGeometry& g, const BundleSpec& b,
                                    const Field& f, double r_min = 0.94) {
  const int r = f.rank();
  double worst = 0.0;
  for (int jr = 0; jr < g.n_radial; ++jr) {
    double rw = g.grid_radial[jr];
    if (rw < r_min) continue;
    for (int ia = 0; ia < g.n_angular; ++ia) {
      Complex z = 1.0 / g.coordinate(jr, ia);
      int ia0 = g.mirrorAngular(ia);
      Eigen::MatrixXcd m0(r, r);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
          m0(i, j) = interp_radial(g, f.at(0, i, j), std::abs(z), ia0);
      Eigen::MatrixXcd gz = b.transition(z);
      Eigen::MatrixXcd predicted = gz * m0 * gz.inverse();
      worst = std::max(worst, (f.node(1, jr, ia) - predicted).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

/// Smooth orthogonal frame adapted to a filtration, with the h0-Chern
/// connection expressed in that frame.
///
/// Columns of `frame` are grouped by quotient in filtration order: the block
/// for F_q holds f_i = (I - P_{q+1}) e_i over the coordinate indices of F_q,
/// where P_k is the h0-orthogonal projection onto stage E_k. `a_frame` is the
/// dz-coefficient F^{-1}(A F + d_z F); its strictly upper block (i, j), i < j,
/// is the (1,0) second fundamental form beta coupling G_i and G_j. `b_frame`
/// is F^{-1} d_zbar F (strictly lower by holomorphy of the stages, up to
/// discretization error). `gram` = F^dagger h0 F is block diagonal.
struct FrameData {
  Field frame;
  Field a_frame;
  Field b_frame;
  Field gram;
  std::vector<int> offsets;  // start column of each quotient block
  std::vector<int> sizes;    // quotient ranks
};

inline FrameData second_fundamental_form(const BaseGeometry& g, const MetricField& h0,
                                         const Filtration& filt) {
  const int r = h0.bundle.rank();
  const int m = filt.numStages();
  FrameData fd;
  fd.offsets.resize(m);
  fd.sizes.resize(m);
  {
    int off = 0;
    for (int q = 0; q < m; ++q) {
      fd.offsets[q] = off;
      fd.sizes[q] = filt.quotientRank(q);
      off += fd.sizes[q];
    }
  }

  fd.frame = Field(r, g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c)
    parallel_for(g.n_radial, [&](int ir) {
      for (int ia = 0; ia < g.n_angular; ++ia) {
        Eigen::MatrixXcd h = h0.h.node(c, ir, ia);
        Eigen::MatrixXcd F(r, r);
        int col = 0;
        for (int q = 0; q < m; ++q) {
          Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(r, r);
          if (q + 1 < m) {
            const auto& idx = filt.stages[q + 1];
            Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(r, static_cast<int>(idx.size()));
            for (size_t k = 0; k < idx.size(); ++k) V(idx[k], static_cast<int>(k)) = 1.0;
            P = V * (V.adjoint() * h * V).inverse() * V.adjoint() * h;
          }
          for (int i : filt.quotientIndices(q)) {
            F.col(col) = Eigen::VectorXcd::Unit(r, i) - P.col(i);
            ++col;
          }
        }
        fd.frame.setNode(c, ir, ia, F);
      }
    });

  Field a0 = chern_connection(g, h0);
  Field finv = pw_inverse(fd.frame);
  fd.a_frame = pw_product(finv, pw_product(a0, fd.frame) + del(g, fd.frame));
  fd.b_frame = pw_product(finv, dbar(g, fd.frame));
  fd.gram = pw_product(pw_dagger(fd.frame), pw_product(h0.h, fd.frame));
  return fd;
}

}  // namespace hym
