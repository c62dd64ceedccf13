#pragma once

#include <span>
#include <vector>

namespace fairmdp {

/// Non-increasing, nonnegative weights summing to one.
class GgfWeights {
 public:
  /// Validates and stores; rejects (never re-sorts) non-monotone input.
  explicit GgfWeights(std::vector<double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const noexcept { return weights_; }

 private:
  std::vector<double> weights_;
};

/// Generalized Gini welfare: weights applied to the values sorted ascending, so the
/// largest weight lands on the worst-off component. Ties do not affect the result.
double ggf(std::span<const double> values, const GgfWeights& weights);

/// w_n proportional to factor^-n, n = 1..count.
GgfWeights make_exponential_weights(int count, double factor);

GgfWeights utilitarian_weights(int count);

}  // namespace fairmdp
