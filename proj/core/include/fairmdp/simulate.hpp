#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairmdp/baselines.hpp"
#include "fairmdp/count_mdp.hpp"
#include "fairmdp/fairness.hpp"
#include "fairmdp/model.hpp"
#include "fairmdp/occupancy.hpp"
#include "fairmdp/rng.hpp"

namespace fairmdp {

struct EvalConfig {
  int num_trajectories = 1000;
  int horizon = 300;
  double discount = 0.95;
  std::uint64_t seed = 0;
  /// Defaults to exponential weights with this factor when weights is empty.
  double weights_factor = 2.0;
  std::optional<GgfWeights> weights;

  void validate() const;
  GgfWeights weights_for(int num_submdps) const;
};

struct EvalReport {
  /// Per-sub-MDP discounted returns (the uniform vector in count mode).
  std::vector<double> mean_value;
  double ggf_score = 0.0;
  /// Standard error of the per-trajectory weighted score.
  double std_error = 0.0;
  int trajectories_used = 0;
  double wall_seconds = 0.0;
};

using JointPolicyFn = std::function<std::vector<int>(std::span<const int> state, Rng& rng)>;
using CountPolicyFn = std::function<CountAction(const CountState& x, Rng& rng)>;

/// One step of the count-space simulator: every machine in u(s,a) draws its next state
/// from p(.|s,a); the returned reward is (1/N) sum u(s,a) r(s,a).
std::pair<CountState, double> step_count(const CountState& x, const CountAction& u, const SubMdp& sub, Rng& rng);

/// Monte Carlo per-machine returns over M trajectories of length T from mu. Throws
/// PolicyInfeasibleAction when the policy breaks a budget.
EvalReport evaluate_joint_policy(const JointPolicyFn& policy, const WcmdpSpec& spec, const EvalConfig& cfg);

/// Monte Carlo mean return of a count policy from the multinomial initial law. The GGF
/// score equals the mean value for any weights.
EvalReport evaluate_count_policy(const CountPolicyFn& policy, const WcmdpSpec& spec, const EvalConfig& cfg);

JointPolicyFn tabular_joint_policy(const TabularPolicy& policy, const JointModel& joint);
JointPolicyFn wip_joint_policy(const WhittleTable& table, double budget);
JointPolicyFn random_joint_policy(const WcmdpSpec& spec);
CountPolicyFn tabular_count_policy(const TabularPolicy& policy, const CountModel& count);
CountPolicyFn wip_count_policy(const WhittleTable& table, double budget, int num_actions = 2);

/// CSV columns: policy,N,S,budget,ggf_score,mean_value,stderr,seconds.
void write_eval_csv_header(std::ostream& out);
void write_eval_csv_row(std::ostream& out, const std::string& policy, const WcmdpSpec& spec, const EvalReport& report);

}  // namespace fairmdp
