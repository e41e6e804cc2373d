#pragma once

#include "hym/field.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace hym {

/// Discretization of CP^1 with two polar chart grids glued by w = 1/z.
///
/// Each chart samples its closed unit disk; the sphere integral is the sum of
/// the two disk integrals. Radial nodes are Gauss-Legendre points on (0,1)
/// (so quadrature weights are strictly positive and the rule is spectrally
/// accurate), angular nodes are equispaced. The Fubini-Study form is
/// normalized so the total volume is 1. Cross-chart comparisons on the
/// overlap annulus use barycentric evaluation of the radial interpolant.
struct BaseGeometry {
  int n_radial = 0;
  int n_angular = 0;

  Eigen::VectorXd grid_radial;     // ascending Gauss-Legendre nodes in (0,1)
  Eigen::VectorXd grid_angular;    // equispaced in [0, 2pi)
  Eigen::VectorXd radial_weights;  // Gauss-Legendre weights on [0,1]
  Eigen::VectorXd bary_weights;    // barycentric weights of the radial nodes

  Eigen::MatrixXd radial_deriv;   // d/dr on the radial nodes
  Eigen::MatrixXd angular_deriv;  // d/dtheta on the angular nodes

  // Densities of omega at radius r_j: against dx dy and against i dz^dzbar.
  Eigen::VectorXd kahler_form_density;
  Eigen::VectorXd omega_i_density;

  // Full quadrature weight per node (one chart; charts are symmetric).
  // Strictly positive everywhere.
  Eigen::MatrixXd node_weight;

  double volume = 0.0;

  Complex coordinate(int ir, int ia) const {
    return std::polar(grid_radial[ir], grid_angular[ia]);
  }

  /// Angular index of -theta_a on the grid (used by the w = 1/z gluing).
  int mirrorAngular(int ia) const { return ia == 0 ? 0 : n_angular - ia; }
};

namespace detail {

/// Nodes and weights of the n-point Gauss-Legendre rule on [0, 1],
/// plus the barycentric weights of the nodes.
inline void gaussLegendre01(int n, Eigen::VectorXd& x, Eigen::VectorXd& w,
                            Eigen::VectorXd* bary = nullptr) {
  x.resize(n);
  w.resize(n);
  if (bary) bary->resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration from the Chebyshev-based initial guess.
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p1 = t, dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    int j = n - 1 - i;  // ascending order
    x[j] = 0.5 * (t + 1.0);
    w[j] = 1.0 / ((1.0 - t * t) * dp * dp);
    // Barycentric weights for Legendre-Gauss nodes (up to a common factor).
    if (bary) (*bary)[j] = (j % 2 == 0 ? 1.0 : -1.0) * std::sqrt((1.0 - t * t) * w[j]);
  }
}

}  // namespace detail

inline BaseGeometry build_geometry(int n_radial, int n_angular) {
  if (n_radial < 8 || n_angular < 8)
    throw std::invalid_argument(
        "build_geometry: need n_radial >= 8 and n_angular >= 8");

  BaseGeometry g;
  g.n_radial = n_radial;
  g.n_angular = n_angular;
  const double pi = std::numbers::pi;

  detail::gaussLegendre01(n_radial, g.grid_radial, g.radial_weights, &g.bary_weights);

  g.grid_angular.resize(n_angular);
  for (int a = 0; a < n_angular; ++a) g.grid_angular[a] = 2.0 * pi * a / n_angular;

  // Barycentric differentiation matrix on the radial nodes.
  g.radial_deriv.setZero(n_radial, n_radial);
  for (int i = 0; i < n_radial; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n_radial; ++j) {
      if (i == j) continue;
      double d = (g.bary_weights[j] / g.bary_weights[i]) /
                 (g.grid_radial[i] - g.grid_radial[j]);
      g.radial_deriv(i, j) = d;
      diag -= d;
    }
    g.radial_deriv(i, i) = diag;
  }

  // Spectral differentiation on the periodic angular grid.
  g.angular_deriv.setZero(n_angular, n_angular);
  const double h = 2.0 * pi / n_angular;
  for (int i = 0; i < n_angular; ++i)
    for (int j = 0; j < n_angular; ++j) {
      if (i == j) continue;
      double sgn = ((i - j) % 2 == 0) ? 1.0 : -1.0;
      if (n_angular % 2 == 0)
        g.angular_deriv(i, j) = 0.5 * sgn / std::tan(0.5 * (i - j) * h);
      else
        g.angular_deriv(i, j) = 0.5 * sgn / std::sin(0.5 * (i - j) * h);
    }
  // Pin the diagonal so constants are annihilated exactly (the row sums
  // vanish analytically; this removes their rounding residue).
  for (int i = 0; i < n_angular; ++i)
    g.angular_deriv(i, i) = -g.angular_deriv.row(i).sum();

  g.kahler_form_density.resize(n_radial);
  g.omega_i_density.resize(n_radial);
  for (int j = 0; j < n_radial; ++j) {
    double r2 = g.grid_radial[j] * g.grid_radial[j];
    g.kahler_form_density[j] = 1.0 / (pi * (1.0 + r2) * (1.0 + r2));
    g.omega_i_density[j] = 0.5 * g.kahler_form_density[j];
  }

  // Node weight: Gauss-Legendre radial weight, polar factor r, angular
  // trapezoid weight, FS density.
  g.node_weight.resize(n_radial, n_angular);
  for (int j = 0; j < n_radial; ++j)
    for (int a = 0; a < n_angular; ++a)
      g.node_weight(j, a) = g.radial_weights[j] * g.grid_radial[j] *
                            (2.0 * pi / n_angular) * g.kahler_form_density[j];

  // Volume diagnostic: both charts contribute their unit disk.
  g.volume = 2.0 * g.node_weight.sum();
  return g;
}

/// \int_X f omega for a scalar field (sum of unit-disk contributions per chart).
inline Complex integrate(const BaseGeometry& g, const Field& f) {
  if (f.rank() != 1) throw std::invalid_argument("integrate: scalar field expected");
  if (f.nRadial() != g.n_radial || f.nAngular() != g.n_angular)
    throw std::invalid_argument("integrate: node-count mismatch");
  Complex total = 0.0;
  for (int c = 0; c < kNumCharts; ++c)
    total += (g.node_weight.cast<Complex>().array() * f.scalar(c).array()).sum();
  return total;
}

inline double integrate_real(const BaseGeometry& g, const Field& f) {
  return integrate(g, f).real();
}

namespace detail {

enum class Wirtinger { Dz, Dzbar };

inline Field wirtingerDerivative(const BaseGeometry& g, const Field& f, Wirtinger which) {
  if (f.nRadial() != g.n_radial || f.nAngular() != g.n_angular)
    throw std::invalid_argument("derivative: node-count mismatch");
  Field out(f.rank(), g.n_radial, g.n_angular);
  const Complex I(0.0, 1.0);
  const double sign = (which == Wirtinger::Dzbar) ? 1.0 : -1.0;
  Eigen::VectorXcd phase(g.n_angular);
  for (int a = 0; a < g.n_angular; ++a)
    phase[a] = 0.5 * std::polar(1.0, sign * g.grid_angular[a]);
  for (int c = 0; c < kNumCharts; ++c)
    for (int i = 0; i < f.rank(); ++i)
      for (int j = 0; j < f.rank(); ++j) {
        const GridValues& v = f.at(c, i, j);
        GridValues dr = g.radial_deriv.cast<Complex>() * v;
        GridValues dth = v * g.angular_deriv.transpose().cast<Complex>();
        GridValues& o = out.at(c, i, j);
        for (int jr = 0; jr < g.n_radial; ++jr) {
          double invr = 1.0 / g.grid_radial[jr];
          for (int a = 0; a < g.n_angular; ++a)
            o(jr, a) = phase[a] * (dr(jr, a) + sign * I * invr * dth(jr, a));
        }
      }
  return out;
}

}  // namespace detail

/// Componentwise d/dzbar in the chart coordinate (chart 1 differentiates in wbar).
inline Field dbar(const BaseGeometry& g, const Field& f) {
  return detail::wirtingerDerivative(g, f, detail::Wirtinger::Dzbar);
}

/// Componentwise d/dz in the chart coordinate.
inline Field del(const BaseGeometry& g, const Field& f) {
  return detail::wirtingerDerivative(g, f, detail::Wirtinger::Dz);
}

/// Barycentric evaluation of one component's radial interpolant at a fixed
/// angular index. Values slightly beyond r = 1 (the overlap annulus seen from
/// the other chart) are mild extrapolations of the interpolant.
inline Complex interp_radial(const BaseGeometry& g, const GridValues& v, double r,
                             int ia) {
  Complex num = 0.0;
  Complex den = 0.0;
  for (int j = 0; j < g.n_radial; ++j) {
    double diff = r - g.grid_radial[j];
    if (std::abs(diff) < 1e-14) return v(j, ia);
    Complex t = g.bary_weights[j] / diff;
    num += t * v(j, ia);
    den += t;
  }
  return num / den;
}

/// Samples an analytic function onto both charts. fn(chart, zeta) receives the
/// chart index and the chart coordinate.
inline Field sample_scalar(const BaseGeometry& g,
                           const std::function<Complex(int, Complex)>& fn) {
  Field f(1, g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c)
    for (int jr = 0; jr < g.n_radial; ++jr)
      for (int a = 0; a < g.n_angular; ++a)
        f.scalar(c)(jr, a) = fn(c, g.coordinate(jr, a));
  return f;
}

inline Field sample_matrix(const BaseGeometry& g, int rank,
                           const std::function<Eigen::MatrixXcd(int, Complex)>& fn) {
  Field f(rank, g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c)
    for (int jr = 0; jr < g.n_radial; ++jr)
      for (int a = 0; a < g.n_angular; ++a)
        f.setNode(c, jr, a, fn(c, g.coordinate(jr, a)));
  return f;
}

inline Field constant_field(const BaseGeometry& g, const Eigen::MatrixXcd& m) {
  Field f(static_cast<int>(m.rows()), g.n_radial, g.n_angular);
  for (int c = 0; c < kNumCharts; ++c)
    for (int jr = 0; jr < g.n_radial; ++jr)
      for (int a = 0; a < g.n_angular; ++a) f.setNode(c, jr, a, m);
  return f;
}

}  // namespace hym
