#include "fairmdp/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairmdp/error.hpp"

namespace fairmdp {

GgfWeights::GgfWeights(std::vector<double> weights) : weights_(std::move(weights)) {
  require(!weights_.empty(), ErrorCode::kInvalidWeights, "weights must be non-empty");
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    require(std::isfinite(weights_[i]) && weights_[i] >= 0.0, ErrorCode::kInvalidWeights,
            "weights must be finite and nonnegative");
    require(i == 0 || weights_[i] <= weights_[i - 1], ErrorCode::kInvalidWeights,
            "weights must be non-increasing (entry " + std::to_string(i) + ")");
    total += weights_[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorCode::kInvalidWeights, "weights must sum to 1");
}

double ggf(std::span<const double> values, const GgfWeights& weights) {
  require(values.size() == weights.size(), ErrorCode::kLengthMismatch,
          "ggf: " + std::to_string(values.size()) + " values vs " + std::to_string(weights.size()) +
              " weights");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) total += weights[i] * sorted[i];
  return total;
}

GgfWeights make_exponential_weights(int count, double factor) {
  require(count >= 1, ErrorCode::kInvalidWeights, "need at least one weight");
  require(factor > 1.0, ErrorCode::kInvalidWeights, "decay factor must exceed 1");
  std::vector<double> w(count);
  double raw = 1.0;
  double total = 0.0;
  for (int n = 0; n < count; ++n) {
    raw /= factor;
    w[n] = raw;
    total += raw;
  }
  for (double& v : w) v /= total;
  return GgfWeights(std::move(w));
}

GgfWeights utilitarian_weights(int count) {
  require(count >= 1, ErrorCode::kInvalidWeights, "need at least one weight");
  return GgfWeights(std::vector<double>(count, 1.0 / count));
}

}  // namespace fairmdp
