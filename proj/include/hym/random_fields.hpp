#pragma once

#include "hym/endo.hpp"

#include <random>

namespace hym {

namespace detail {

/// Embedding coordinates of the sphere; chart 1 sees the antipodal map
/// (x, y, zeta) -> (x, -y, -zeta), which is exactly the w = 1/z gluing.
inline void sphere_coords(int chart, Complex z, double& x, double& y, double& zt) {
  double a2 = std::norm(z);
  x = 2.0 * z.real() / (1.0 + a2);
  y = 2.0 * z.imag() / (1.0 + a2);
  zt = (1.0 - a2) / (1.0 + a2);
  if (chart == 1) {
    y = -y;
    zt = -zt;
  }
}

/// Twist factor making the (i, j) entry of an endomorphism global on a split
/// bundle for m = k_i - k_j >= 0: chart 0 value (zbar/(1+|z|^2))^m, which the
/// transition carries to (w^2/(1+|w|^2))^m on chart 1, smooth at w = 0.
/// Entries with m < 0 have no such multiplicative factor (entrywise
/// conjugation does not commute with the transition); they are produced by
/// taking h0-adjoints of m > 0 entries instead.
inline Complex twist_factor(int chart, Complex zeta, int m) {
  if (m < 0) throw std::invalid_argument("twist_factor: m must be >= 0");
  double a2 = std::norm(zeta);
  Complex base =
      (chart == 0) ? std::conj(zeta) / (1.0 + a2) : zeta * zeta / (1.0 + a2);
  Complex p = 1.0;
  for (int k = 0; k < m; ++k) p *= base;
  return p;
}

}  // namespace detail

/// Random real polynomial in the sphere embedding coordinates, total degree
/// <= deg: a globally smooth function on CP^1.
inline Field random_scalar(const BaseGeometry& g, std::mt19937_64& rng,
                           double amplitude = 1.0, int deg = 3) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::array<int, 3>> monos;
  for (int a = 0; a <= deg; ++a)
    for (int b = 0; a + b <= deg; ++b)
      for (int c = 0; a + b + c <= deg; ++c) monos.push_back({a, b, c});
  std::vector<double> coef(monos.size());
  for (auto& v : coef) v = gauss(rng);
  double norm = 0.0;
  for (double v : coef) norm += v * v;
  double scale = amplitude / std::sqrt(std::max(norm, 1e-30));

  return sample_scalar(g, [&, scale](int chart, Complex zeta) {
    double x, y, zt;
    detail::sphere_coords(chart, zeta, x, y, zt);
    double acc = 0.0;
    for (size_t k = 0; k < monos.size(); ++k)
      acc += coef[k] * std::pow(x, monos[k][0]) * std::pow(y, monos[k][1]) *
             std::pow(zt, monos[k][2]);
    return Complex(scale * acc);
  });
}

/// Random smooth global h0-self-adjoint endomorphism of the split bundle:
/// every entry is a random sphere polynomial times the twist factor required
/// for global smoothness, then projected to the h0-self-adjoint part (and
/// optionally made trace-free).
inline EndoField random_endo(const BaseGeometry& g, const MetricField& h0,
                             std::mt19937_64& rng, double amplitude = 1.0,
                             bool trace_free = false, int deg = 3) {
  const int r = h0.bundle.rank();
  Field n(r, g.n_radial, g.n_angular);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      int m = h0.bundle.splitting[i] - h0.bundle.splitting[j];
      if (m < 0) continue;  // filled globally by the self-adjoint projection
      Field s = random_scalar(g, rng, amplitude, deg);
      Complex ph = std::polar(1.0, gauss(rng));
      for (int c = 0; c < kNumCharts; ++c)
        for (int ir = 0; ir < g.n_radial; ++ir)
          for (int ia = 0; ia < g.n_angular; ++ia)
            n.at(c, i, j)(ir, ia) = ph * s.scalar(c)(ir, ia) *
                                    detail::twist_factor(c, g.coordinate(ir, ia), m);
    }
  EndoField e;
  e.w = sa_part(h0, n);
  if (trace_free) {
    e.w = trace_free_projection(e.w);
    e.trace_free = true;
  }
  return e;
}

/// Random smooth metric: FS reference twisted by e^{s} with s a random
/// h0-self-adjoint endomorphism of the given amplitude.
inline MetricField random_metric(const BaseGeometry& g, const BundleSpec& b,
                                 std::mt19937_64& rng, double amplitude = 0.5) {
  MetricField fs = fs_metric(g, b);
  EndoField s = random_endo(g, fs, rng, amplitude);
  return metric_deform(fs, s.w, 1.0);
}

/// Random pointwise-unitary field u = exp(i X) with X a Hermitian matrix of
/// random smooth scalars (per chart; not required to glue globally).
inline Field random_unitary(const BaseGeometry& g, int rank, std::mt19937_64& rng,
                            double amplitude = 1.0) {
  Field x(rank, g.n_radial, g.n_angular);
  for (int i = 0; i < rank; ++i)
    for (int j = i; j < rank; ++j) {
      Field re = random_scalar(g, rng, amplitude);
      Field im = random_scalar(g, rng, amplitude);
      for (int c = 0; c < kNumCharts; ++c) {
        if (i == j) {
          x.at(c, i, i) = re.scalar(c);
        } else {
          x.at(c, i, j) = re.scalar(c) + Complex(0, 1) * im.scalar(c);
          x.at(c, j, i) = x.at(c, i, j).conjugate();
        }
      }
    }
  return pw_exp(Complex(0, 1) * x);
}

}  // namespace hym
