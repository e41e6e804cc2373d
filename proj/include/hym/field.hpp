#pragma once

#include <Eigen/Dense>

#include <array>
#include <cassert>
#include <complex>
#include <stdexcept>
#include <vector>

namespace hym {

using Complex = std::complex<double>;

/// Values of one matrix component over a chart grid, indexed (radial, angular).
using GridValues = Eigen::MatrixXcd;

constexpr int kNumCharts = 2;

/// A matrix-valued field sampled on both chart grids of the base geometry.
///
/// Storage is structure-of-arrays: component (i,j) of the matrix is a full
/// (n_radial x n_angular) grid, so differentiation and filtering reduce to
/// dense matrix products per component. rank == 1 is a scalar field.
class Field {
 public:
  Field() = default;

  Field(int rank, int n_radial, int n_angular) : rank_(rank) {
    if (rank < 1) throw std::invalid_argument("Field rank must be >= 1");
    for (auto& chart : comp_)
      chart.assign(static_cast<size_t>(rank) * rank,
                   GridValues::Zero(n_radial, n_angular));
  }

  int rank() const { return rank_; }
  int nRadial() const { return comp_[0].empty() ? 0 : static_cast<int>(comp_[0][0].rows()); }
  int nAngular() const { return comp_[0].empty() ? 0 : static_cast<int>(comp_[0][0].cols()); }

  GridValues& at(int chart, int i, int j) {
    return comp_[chart][static_cast<size_t>(i) * rank_ + j];
  }
  const GridValues& at(int chart, int i, int j) const {
    return comp_[chart][static_cast<size_t>(i) * rank_ + j];
  }

  GridValues& scalar(int chart) {
    assert(rank_ == 1);
    return comp_[chart][0];
  }
  const GridValues& scalar(int chart) const {
    assert(rank_ == 1);
    return comp_[chart][0];
  }

  /// The r x r matrix at one grid node.
  Eigen::MatrixXcd node(int chart, int ir, int ia) const {
    Eigen::MatrixXcd m(rank_, rank_);
    for (int i = 0; i < rank_; ++i)
      for (int j = 0; j < rank_; ++j) m(i, j) = at(chart, i, j)(ir, ia);
    return m;
  }

  void setNode(int chart, int ir, int ia, const Eigen::MatrixXcd& m) {
    for (int i = 0; i < rank_; ++i)
      for (int j = 0; j < rank_; ++j) at(chart, i, j)(ir, ia) = m(i, j);
  }

  bool sameShape(const Field& other) const {
    return rank_ == other.rank_ && nRadial() == other.nRadial() &&
           nAngular() == other.nAngular();
  }

  Field& operator+=(const Field& other) {
    checkShape(other);
    for (int c = 0; c < kNumCharts; ++c)
      for (size_t k = 0; k < comp_[c].size(); ++k) comp_[c][k] += other.comp_[c][k];
    return *this;
  }

  Field& operator-=(const Field& other) {
    checkShape(other);
    for (int c = 0; c < kNumCharts; ++c)
      for (size_t k = 0; k < comp_[c].size(); ++k) comp_[c][k] -= other.comp_[c][k];
    return *this;
  }

  Field& operator*=(Complex a) {
    for (auto& chart : comp_)
      for (auto& g : chart) g *= a;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Complex a, Field f) { return f *= a; }
  friend Field operator*(double a, Field f) { return f *= Complex(a); }

  /// Max absolute value over all nodes and components.
  double supNorm() const {
    double m = 0.0;
    for (const auto& chart : comp_)
      for (const auto& g : chart) m = std::max(m, g.cwiseAbs().maxCoeff());
    return m;
  }

  /// Applies fn to every node matrix in place.
  template <typename Fn>
  void mapNodes(Fn&& fn) {
    for (int c = 0; c < kNumCharts; ++c)
      for (int ir = 0; ir < nRadial(); ++ir)
        for (int ia = 0; ia < nAngular(); ++ia)
          setNode(c, ir, ia, fn(c, ir, ia, node(c, ir, ia)));
  }

 private:
  void checkShape(const Field& other) const {
    if (!sameShape(other)) throw std::invalid_argument("Field shape mismatch");
  }

  int rank_ = 1;
  std::array<std::vector<GridValues>, kNumCharts> comp_;
};

/// Pointwise matrix product (a b)(z).
inline Field pw_product(const Field& a, const Field& b) {
  if (!a.sameShape(b)) throw std::invalid_argument("pw_product: shape mismatch");
  Field out(a.rank(), a.nRadial(), a.nAngular());
  for (int c = 0; c < kNumCharts; ++c)
    for (int ir = 0; ir < a.nRadial(); ++ir)
      for (int ia = 0; ia < a.nAngular(); ++ia)
        out.setNode(c, ir, ia, a.node(c, ir, ia) * b.node(c, ir, ia));
  return out;
}

/// Pointwise matrix inverse.
inline Field pw_inverse(const Field& a) {
  Field out(a.rank(), a.nRadial(), a.nAngular());
  for (int c = 0; c < kNumCharts; ++c)
    for (int ir = 0; ir < a.nRadial(); ++ir)
      for (int ia = 0; ia < a.nAngular(); ++ia)
        out.setNode(c, ir, ia, a.node(c, ir, ia).inverse().eval());
  return out;
}

/// Pointwise conjugate transpose.
inline Field pw_dagger(const Field& a) {
  Field out(a.rank(), a.nRadial(), a.nAngular());
  for (int c = 0; c < kNumCharts; ++c)
    for (int i = 0; i < a.rank(); ++i)
      for (int j = 0; j < a.rank(); ++j)
        out.at(c, i, j) = a.at(c, j, i).conjugate();
  return out;
}

/// Pointwise matrix trace as a scalar field.
inline Field trace_field(const Field& a) {
  Field out(1, a.nRadial(), a.nAngular());
  for (int c = 0; c < kNumCharts; ++c)
    for (int i = 0; i < a.rank(); ++i) out.scalar(c) += a.at(c, i, i);
  return out;
}

}  // namespace hym
