#include <cmath>

#include "fairmdp/baselines.hpp"
#include "fairmdp/error.hpp"

namespace fairmdp {

RandomActionSampler::RandomActionSampler(const WcmdpSpec& spec) : spec_(&spec) {}

double RandomActionSampler::completions(int n, const std::vector<double>& remaining) {
  if (n == spec_->num_submdps()) return 1.0;
  auto key = std::make_pair(n, remaining);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  double total = 0.0;
  std::vector<double> next(remaining.size());
  for (int a = 0; a < spec_->num_actions(); ++a) {
    bool ok = true;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      next[k] = remaining[k] - spec_->consumption(static_cast<int>(k), n, a);
      if (next[k] < -kBudgetEps) ok = false;
    }
    if (ok) total += completions(n + 1, next);
  }
  memo_.emplace(std::move(key), total);
  return total;
}

double RandomActionSampler::count_feasible() {
  return completions(0, {spec_->budgets().begin(), spec_->budgets().end()});
}

std::vector<int> RandomActionSampler::sample(Rng& rng) {
  const int N = spec_->num_submdps();
  const int A = spec_->num_actions();
  std::vector<double> remaining(spec_->budgets().begin(), spec_->budgets().end());
  std::vector<int> action(N, 0);
  std::vector<double> weights(A);
  std::vector<std::vector<double>> after(A, std::vector<double>(remaining.size()));
  for (int n = 0; n < N; ++n) {
    for (int a = 0; a < A; ++a) {
      bool ok = true;
      for (std::size_t k = 0; k < remaining.size(); ++k) {
        after[a][k] = remaining[k] - spec_->consumption(static_cast<int>(k), n, a);
        if (after[a][k] < -kBudgetEps) ok = false;
      }
      weights[a] = ok ? completions(n + 1, after[a]) : 0.0;
    }
    const int a = static_cast<int>(sample_categorical(rng, weights));
    action[n] = a;
    remaining = after[a];
  }
  return action;
}

std::vector<int> random_act(std::span<const int> joint_state, const WcmdpSpec& spec, Rng& rng) {
  require(static_cast<int>(joint_state.size()) == spec.num_submdps(), ErrorCode::kLengthMismatch,
          "joint state length must equal N");
  RandomActionSampler sampler(spec);
  return sampler.sample(rng);
}

}  // namespace fairmdp
