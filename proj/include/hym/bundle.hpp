#pragma once

#include "hym/field.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

namespace hym {

/// A holomorphic bundle over CP^1 presented as O(k1) + ... + O(kr).
/// The transition matrix on the chart overlap is diag(z^{-k_i}) acting on
/// chart-0 section coordinates (s^1 = G s^0).
struct BundleSpec {
  std::vector<int> splitting;

  int rank() const { return static_cast<int>(splitting.size()); }

  Eigen::MatrixXcd transition(Complex z) const {
    if (z == Complex(0.0)) throw std::invalid_argument("transition: z = 0");
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(rank(), rank());
    for (int i = 0; i < rank(); ++i) g(i, i) = std::pow(z, Complex(-splitting[i]));
    return g;
  }
};

inline BundleSpec make_bundle(const std::vector<int>& splitting) {
  if (splitting.empty()) throw std::invalid_argument("make_bundle: empty splitting");
  return BundleSpec{splitting};
}

inline int degree(const BundleSpec& b) {
  int d = 0;
  for (int k : b.splitting) d += k;
  return d;
}

inline double bundle_slope(const BundleSpec& b) {
  return static_cast<double>(degree(b)) / b.rank();
}

/// Filtration E = E_1 > E_2 > ... > E_m > 0 by coordinate subbundles.
/// Stage j is the span of the coordinate lines listed in stages[j]; weight
/// lambda_j is attached to the quotient F_j = E_j / E_{j+1}.
struct Filtration {
  BundleSpec bundle;
  std::vector<std::vector<int>> stages;  // 0-based indices, each sorted
  std::vector<double> weights;

  int numStages() const { return static_cast<int>(stages.size()); }

  int stageRank(int i) const { return static_cast<int>(stages[i].size()); }

  /// Rank of the quotient F_i = E_i / E_{i+1}.
  int quotientRank(int i) const {
    int next = (i + 1 < numStages()) ? stageRank(i + 1) : 0;
    return stageRank(i) - next;
  }

  /// Indices belonging to F_i (stage i minus stage i+1).
  std::vector<int> quotientIndices(int i) const {
    std::set<int> next;
    if (i + 1 < numStages())
      next.insert(stages[i + 1].begin(), stages[i + 1].end());
    std::vector<int> out;
    for (int idx : stages[i])
      if (!next.count(idx)) out.push_back(idx);
    return out;
  }

  int stageDegree(int i) const {
    int d = 0;
    for (int idx : stages[i]) d += bundle.splitting[idx];
    return d;
  }

  int quotientDegree(int i) const {
    int d = 0;
    for (int idx : quotientIndices(i)) d += bundle.splitting[idx];
    return d;
  }

  /// delta = min over i < j of (lambda_i - lambda_j) = smallest adjacent gap.
  double weightGap() const {
    double gap = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < weights.size(); ++i)
      gap = std::min(gap, weights[i] - weights[i + 1]);
    return gap;
  }
};

inline Filtration make_filtration(const BundleSpec& b,
                                  const std::vector<std::vector<int>>& stages,
                                  const std::vector<double>& weights) {
  if (stages.empty()) throw std::invalid_argument("make_filtration: no stages");
  if (stages.size() != weights.size())
    throw std::invalid_argument("make_filtration: one weight per stage required");

  Filtration f;
  f.bundle = b;
  f.weights = weights;
  f.stages.reserve(stages.size());
  for (const auto& s : stages) {
    std::vector<int> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty() || sorted.front() < 0 || sorted.back() >= b.rank())
      throw std::invalid_argument("make_filtration: stage indices out of range");
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("make_filtration: duplicate stage index");
    f.stages.push_back(std::move(sorted));
  }

  if (f.stageRank(0) != b.rank())
    throw std::invalid_argument("make_filtration: first stage must be all of E");
  for (int i = 0; i + 1 < f.numStages(); ++i) {
    if (!std::includes(f.stages[i].begin(), f.stages[i].end(),
                       f.stages[i + 1].begin(), f.stages[i + 1].end()) ||
        f.stageRank(i + 1) >= f.stageRank(i))
      throw std::invalid_argument("make_filtration: stages must be strictly nested");
  }
  for (size_t i = 0; i + 1 < weights.size(); ++i)
    if (!(weights[i] > weights[i + 1]))
      throw std::invalid_argument("make_filtration: weights must strictly decrease");
  return f;
}

/// Slopes mu_{E_i} of the stages followed by mu_{F_i} of the quotients.
inline std::vector<double> subbundle_slopes(const Filtration& f) {
  std::vector<double> out;
  out.reserve(2 * f.numStages());
  for (int i = 0; i < f.numStages(); ++i)
    out.push_back(static_cast<double>(f.stageDegree(i)) / f.stageRank(i));
  for (int i = 0; i < f.numStages(); ++i)
    out.push_back(static_cast<double>(f.quotientDegree(i)) / f.quotientRank(i));
  return out;
}

}  // namespace hym
