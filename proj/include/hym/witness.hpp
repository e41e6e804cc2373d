#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hym {

/// Result of the suffix-sum witness search: a_i + ... + a_m >= 0 for some
/// 2 <= i <= m whenever sum a_i = 0 and sum lambda_i a_i <= 0.
struct WitnessResult {
  bool found = false;
  int index = -1;        // 1-based stage index in [2, m]
  double suffix_value = 0.0;
};

inline WitnessResult alpha_sum_witness(const std::vector<double>& lambdas,
                                       const std::vector<double>& as, bool strict) {
  const size_t m = lambdas.size();
  if (m < 2 || as.size() != m)
    throw std::invalid_argument("alpha_sum_witness: need m >= 2 matching lists");
  for (size_t i = 0; i + 1 < m; ++i)
    if (!(lambdas[i] > lambdas[i + 1]))
      throw std::invalid_argument("alpha_sum_witness: lambdas must strictly decrease");
  double total = 0.0, weighted = 0.0;
  for (size_t i = 0; i < m; ++i) {
    total += as[i];
    weighted += lambdas[i] * as[i];
  }
  if (std::abs(total) > 1e-12)
    throw std::invalid_argument("alpha_sum_witness: sum a_i must vanish");
  if (strict ? !(weighted < 0.0) : !(weighted <= 0.0))
    throw std::invalid_argument("alpha_sum_witness: sum lambda_i a_i has wrong sign");

  for (size_t i = 1; i < m; ++i) {
    double suffix = 0.0;
    for (size_t k = i; k < m; ++k) suffix += as[k];
    if (strict ? suffix > 0.0 : suffix >= 0.0)
      return WitnessResult{true, static_cast<int>(i + 1), suffix};
  }
  return WitnessResult{};
}

}  // namespace hym
