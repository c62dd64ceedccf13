#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fairmdp/error.hpp"

namespace fairmdp {

/// Slack allowed when comparing resource use against a budget.
inline constexpr double kBudgetEps = 1e-9;

/// One component MDP (S states, A actions). Tables are row-major:
/// transition[(s*A + a)*S + s'], reward[s*A + a].
class SubMdp {
 public:
  SubMdp(int num_states, int num_actions, std::vector<double> transition,
         std::vector<double> reward, std::vector<double> initial);

  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }

  double transition(int s, int a, int next) const {
    return transition_[(static_cast<std::size_t>(s) * num_actions_ + a) * num_states_ + next];
  }
  std::span<const double> transition_row(int s, int a) const {
    return {transition_.data() + (static_cast<std::size_t>(s) * num_actions_ + a) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  double reward(int s, int a) const { return reward_[static_cast<std::size_t>(s) * num_actions_ + a]; }
  double initial(int s) const { return initial_[s]; }

  std::span<const double> transition_table() const noexcept { return transition_; }
  std::span<const double> reward_table() const noexcept { return reward_; }
  std::span<const double> initial_dist() const noexcept { return initial_; }

  double max_abs_reward() const noexcept;

  /// Entrywise comparison of all tables.
  bool approx_equal(const SubMdp& other, double tol) const;

 private:
  int num_states_;
  int num_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  std::vector<double> initial_;
};

/// N sub-MDPs coupled by K per-step resource budgets.
/// consumption is laid out as d[(k*N + n)*A + a].
class WcmdpSpec {
 public:
  WcmdpSpec(std::vector<SubMdp> sub_mdps, std::vector<double> consumption,
            std::vector<double> budgets, double discount);

  /// N copies of one sub-MDP sharing a per-action consumption table d[k*A + a].
  static WcmdpSpec replicated(const SubMdp& sub, int num_submdps,
                              std::span<const double> consumption_per_action,
                              std::vector<double> budgets, double discount);

  int num_submdps() const noexcept { return static_cast<int>(sub_mdps_.size()); }
  int num_states() const noexcept { return sub_mdps_.front().num_states(); }
  int num_actions() const noexcept { return sub_mdps_.front().num_actions(); }
  int num_resources() const noexcept { return static_cast<int>(budgets_.size()); }
  double discount() const noexcept { return discount_; }

  const SubMdp& sub_mdp(int n) const { return sub_mdps_[n]; }
  std::span<const SubMdp> sub_mdps() const noexcept { return sub_mdps_; }

  double consumption(int k, int n, int a) const {
    return consumption_[(static_cast<std::size_t>(k) * num_submdps() + n) * num_actions() + a];
  }
  /// d[k*A + a] for sub-MDP 0; meaningful as "the" consumption on symmetric specs.
  std::vector<double> shared_consumption() const;
  std::span<const double> consumption_table() const noexcept { return consumption_; }

  double budget(int k) const { return budgets_[k]; }
  std::span<const double> budgets() const noexcept { return budgets_; }

  /// First action of sub-MDP n that consumes nothing.
  int idle_action(int n) const { return idle_actions_[n]; }

  /// Budget check for a full joint action tuple.
  bool is_feasible(std::span<const int> joint_action) const;

  /// Same sub-MDP and consumption pattern with a different N and budgets. Requires a
  /// replicated (symmetric) spec.
  WcmdpSpec resized(int num_submdps, std::vector<double> budgets) const;

 private:
  std::vector<SubMdp> sub_mdps_;
  std::vector<double> consumption_;
  std::vector<double> budgets_;
  double discount_;
  std::vector<int> idle_actions_;
};

/// True iff sub-MDPs coincide, consumption does not depend on n, and the (product)
/// initial distribution is permutation invariant (i.e. all mu_n coincide).
bool is_symmetric(const WcmdpSpec& spec, double tol = 1e-9);

/// Bijection on {0..N-1}; apply() produces out[n] = in[sigma[n]].
class Permutation {
 public:
  explicit Permutation(std::vector<int> sigma);
  static Permutation identity(int n);
  static Permutation from_one_based(std::span<const int> sigma);
  /// All N! permutations in lexicographic order.
  static std::vector<Permutation> all(int n);

  int size() const noexcept { return static_cast<int>(sigma_.size()); }
  int operator[](int n) const { return sigma_[n]; }
  std::span<const int> map() const noexcept { return sigma_; }

  Permutation inverse() const;
  /// (this * other).apply(v) == this->apply(other.apply(v))
  Permutation compose(const Permutation& other) const;

  template <class T>
  std::vector<T> apply(std::span<const T> values) const {
    require(values.size() == sigma_.size(), ErrorCode::kLengthMismatch,
            "permutation size does not match input length");
    std::vector<T> out(values.size());
    for (std::size_t n = 0; n < sigma_.size(); ++n) out[n] = values[sigma_[n]];
    return out;
  }
  template <class T>
  std::vector<T> apply(const std::vector<T>& values) const {
    return apply(std::span<const T>(values));
  }

 private:
  std::vector<int> sigma_;
};

template <class T>
std::vector<T> apply_permutation(std::span<const T> values, const Permutation& sigma) {
  return sigma.apply(values);
}

struct JointOptions {
  /// Refuse expansion when S^N * |feasible joint actions| exceeds this.
  std::size_t max_table_entries = 10'000'000;
};

struct JointTransition {
  std::int64_t next_state;
  double prob;
};

/// Product-space model of a WCMDP. Joint states are ordered lexicographically in
/// (s_1, ..., s_N) with s_1 most significant; feasible joint actions likewise. The
/// feasible action set does not depend on the state, so it is stored once.
class JointModel {
 public:
  int num_submdps() const noexcept { return num_submdps_; }
  int sub_states() const noexcept { return sub_states_; }
  int sub_actions() const noexcept { return sub_actions_; }
  std::int64_t num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return static_cast<int>(action_tuples_.size() / num_submdps_); }
  double discount() const noexcept { return discount_; }

  std::span<const int> action(int index) const {
    return {action_tuples_.data() + static_cast<std::size_t>(index) * num_submdps_,
            static_cast<std::size_t>(num_submdps_)};
  }
  /// Index of a feasible action tuple, or -1.
  int action_index(std::span<const int> tuple) const;
  int idle_action_index() const noexcept { return idle_action_index_; }

  std::vector<int> decode_state(std::int64_t index) const;
  std::int64_t encode_state(std::span<const int> tuple) const;

  std::span<const JointTransition> transitions(std::int64_t s, int a) const {
    const std::size_t row = static_cast<std::size_t>(s) * num_actions() + a;
    return {transitions_.data() + row_offsets_[row], row_offsets_[row + 1] - row_offsets_[row]};
  }
  double transition(std::int64_t s, int a, std::int64_t next) const;

  /// N-vector of per-sub-MDP rewards.
  std::span<const double> reward(std::int64_t s, int a) const {
    const std::size_t row = static_cast<std::size_t>(s) * num_actions() + a;
    return {rewards_.data() + row * num_submdps_, static_cast<std::size_t>(num_submdps_)};
  }
  double initial(std::int64_t s) const { return initial_[s]; }
  std::span<const double> initial_dist() const noexcept { return initial_; }

 private:
  friend JointModel expand_joint(const WcmdpSpec& spec, const JointOptions& options);

  int num_submdps_ = 0;
  int sub_states_ = 0;
  int sub_actions_ = 0;
  std::int64_t num_states_ = 0;
  double discount_ = 0.0;
  std::vector<int> action_tuples_;
  std::vector<int> action_lookup_;  // base-A code -> index or -1
  int idle_action_index_ = -1;
  std::vector<std::size_t> row_offsets_;
  std::vector<JointTransition> transitions_;
  std::vector<double> rewards_;
  std::vector<double> initial_;
};

JointModel expand_joint(const WcmdpSpec& spec, const JointOptions& options = {});

}  // namespace fairmdp
