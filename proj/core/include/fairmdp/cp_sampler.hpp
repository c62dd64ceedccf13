#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fairmdp/count_mdp.hpp"
#include "fairmdp/rng.hpp"

namespace fairmdp {

/// Priority matrix U (S x A, row-major, entries in (0,1]) and per-resource usage
/// proportions p in [0,1].
struct PolicyOutput {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> priorities;
  std::vector<double> resource_use;

  double priority(int s, int a) const { return priorities[static_cast<std::size_t>(s) * num_actions + a]; }
};

struct SamplePair {
  int state;
  int action;
  bool operator==(const SamplePair&) const = default;
};

struct SampleTrace {
  CountAction action;
  /// Every draw in order, affordable or not.
  std::vector<SamplePair> chosen_pairs;
  double logprob = 0.0;
  /// |F| after each draw (the entry size before the first draw is forbidden_initial).
  std::vector<int> forbidden_history;
  int forbidden_initial = 0;
  int iterations = 0;
};

/// Sequential priority sampling of a count action. The effective budget is b * p;
/// pairs are drawn proportionally to U over the non-forbidden set; an affordable draw
/// assigns one machine, an unaffordable one forbids the pair, and a state whose
/// machines are all assigned forbids its row. consumption is d[k*A + a].
SampleTrace sample_count_action(const CountState& x, const PolicyOutput& out, std::span<const double> budgets,
                                std::span<const double> consumption, Rng& rng);

/// Log-probability of a recorded trace under (possibly different) priorities. Replays
/// the forbidden-set evolution exactly; throws TraceMismatch on inconsistency. When
/// grad is non-null it receives d logprob / d U (S x A).
double logprob_of(const CountState& x, const PolicyOutput& out, std::span<const double> budgets,
                  std::span<const double> consumption, const SampleTrace& trace,
                  std::vector<double>* grad = nullptr);

}  // namespace fairmdp
