#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "fairmdp/model.hpp"

namespace fairmdp {

/// Number of sub-MDPs in each state; sums to N.
struct CountState {
  std::vector<int> counts;

  int total() const noexcept;
  int size() const noexcept { return static_cast<int>(counts.size()); }
  int operator[](int s) const { return counts[s]; }
  bool operator==(const CountState&) const = default;
};

/// u(s,a): how many sub-MDPs in state s take action a (row-major S x A).
struct CountAction {
  int num_states = 0;
  int num_actions = 0;
  std::vector<int> counts;

  CountAction() = default;
  CountAction(int s, int a) : num_states(s), num_actions(a), counts(static_cast<std::size_t>(s) * a, 0) {}

  int& at(int s, int a) { return counts[static_cast<std::size_t>(s) * num_actions + a]; }
  int at(int s, int a) const { return counts[static_cast<std::size_t>(s) * num_actions + a]; }
  int row_sum(int s) const;
  int total() const;
  bool operator==(const CountAction&) const = default;
};

struct CountOutcome {
  CountState next;
  double prob;
};

/// x_s = |{n : s_n = s}|.
CountState count_of(std::span<const int> joint_state, int num_states);

/// All x with sum N, colexicographic in (x_1, ..., x_S): x_S is the most significant key.
std::vector<CountState> enumerate_count_states(int num_submdps, int num_states);

/// |{x : sum x = N}| = C(N+S-1, S-1).
std::uint64_t count_state_cardinality(int num_submdps, int num_states);

/// Throws InfeasibleAction unless row sums match x and every budget holds.
void check_count_action(const CountState& x, const CountAction& u, const WcmdpSpec& spec);

/// Every feasible u for x. Ordered lexicographically on the counts of actions 1..A-1
/// (action 0 takes the remainder of each row), so the all-action-0 matrix comes first.
std::vector<CountAction> enumerate_feasible_actions(const CountState& x, const WcmdpSpec& spec);

/// Distribution of the next count state, by convolving per-(s,a) multinomials.
/// Outcomes are sorted in count-state enumeration order; zero-probability outcomes are
/// omitted, nothing else is pruned.
std::vector<CountOutcome> aggregate_transition(const CountState& x, const CountAction& u,
                                               const WcmdpSpec& spec);

/// (1/N) sum_{s,a} u(s,a) r(s,a).
double mean_reward(const CountState& x, const CountAction& u, const WcmdpSpec& spec);

/// Multinomial initial distribution over count states, in enumeration order.
std::vector<CountOutcome> initial_count_dist(const WcmdpSpec& spec);

struct CountTransition {
  int next;
  double prob;
};

/// Count-aggregation MDP of a symmetric WCMDP. Immutable once built.
class CountModel {
 public:
  int num_submdps() const noexcept { return num_submdps_; }
  int sub_states() const noexcept { return sub_states_; }
  int sub_actions() const noexcept { return sub_actions_; }
  double discount() const noexcept { return discount_; }

  int num_states() const noexcept { return static_cast<int>(states_.size()); }
  const CountState& state(int i) const { return states_[i]; }
  /// Index of x, or -1.
  int index_of(const CountState& x) const;

  int num_actions(int x) const { return static_cast<int>(actions_[x].size()); }
  const CountAction& action(int x, int u) const { return actions_[x][u]; }
  /// Total number of feasible (x, u) pairs.
  std::size_t num_pairs() const noexcept { return pair_offsets_.back(); }
  /// Flat index of (x, u) across all states.
  std::size_t pair_index(int x, int u) const { return pair_offsets_[x] + u; }

  std::span<const CountTransition> transitions(int x, int u) const { return transitions_[pair_index(x, u)]; }
  double mean_reward(int x, int u) const { return mean_rewards_[pair_index(x, u)]; }
  double initial(int x) const { return initial_[x]; }
  /// Index of the action putting every sub-MDP on the idle action.
  int idle_action(int x) const { return idle_actions_[x]; }

 private:
  friend CountModel build_count_model(const WcmdpSpec& spec);

  int num_submdps_ = 0;
  int sub_states_ = 0;
  int sub_actions_ = 0;
  double discount_ = 0.0;
  std::vector<CountState> states_;
  std::unordered_map<std::uint64_t, int> index_;
  std::vector<std::vector<CountAction>> actions_;
  std::vector<std::size_t> pair_offsets_;
  std::vector<std::vector<CountTransition>> transitions_;
  std::vector<double> mean_rewards_;
  std::vector<double> initial_;
  std::vector<int> idle_actions_;
};

/// Throws NotSymmetric for asymmetric specs.
CountModel build_count_model(const WcmdpSpec& spec);

}  // namespace fairmdp
