#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fairmdp/count_mdp.hpp"
#include "fairmdp/fairness.hpp"
#include "fairmdp/linear_program.hpp"
#include "fairmdp/model.hpp"
#include "fairmdp/rng.hpp"

namespace fairmdp {

/// Stationary stochastic policy over indexed states whose action lists may differ in
/// length (row s covers probs[offsets[s] .. offsets[s+1])).
class TabularPolicy {
 public:
  TabularPolicy() = default;
  TabularPolicy(std::vector<std::size_t> offsets, std::vector<double> probs);

  std::int64_t num_states() const noexcept { return static_cast<std::int64_t>(offsets_.size()) - 1; }
  int num_actions(std::int64_t s) const { return static_cast<int>(offsets_[s + 1] - offsets_[s]); }
  std::span<const double> row(std::int64_t s) const {
    return {probs_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
  }
  double prob(std::int64_t s, int a) const { return probs_[offsets_[s] + a]; }
  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  int sample(std::int64_t s, Rng& rng) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<double> probs_;
};

/// Column layout of the GGF-LP: lambda_1..N, nu_1..N, then q(s,a) with joint states
/// in lexicographic order and actions in feasible-action order.
struct GgfLpLayout {
  int num_submdps;
  int num_actions;
  int lambda(int i) const { return i; }
  int nu(int j) const { return num_submdps + j; }
  int q(std::int64_t s, int a) const { return static_cast<int>(2 * num_submdps + s * num_actions + a); }
};

/// max sum_i lambda_i + sum_j nu_j
///   s.t. lambda_i + nu_j - w_i sum_{s,a} r_j(s,a) q(s,a) <= 0    (N^2 rows, i-major)
///        sum_a q(s,a) - gamma sum_{s',a'} P(s|s',a') q(s',a') = mu(s)   (S^N rows)
///        q >= 0, lambda and nu free.
LinearProgram build_ggf_lp(const JointModel& joint, const GgfWeights& weights);

/// max sum r(x,u) q(x,u)  s.t. one flow row per count state, q >= 0.
LinearProgram build_count_dual_lp(const CountModel& count, double gamma);

struct OccupancySolution {
  std::vector<double> q;
  std::vector<double> lambda;
  std::vector<double> nu;
  double objective_value = 0.0;
  std::vector<double> value_vector;
  TabularPolicy policy;
  LpSolution lp;
};

struct CountOccupancySolution {
  std::vector<double> q;
  double objective_value = 0.0;
  TabularPolicy policy;
  LpSolution lp;
};

OccupancySolution solve_ggf_lp(const JointModel& joint, const GgfWeights& weights,
                               const SimplexOptions& options = {});
CountOccupancySolution solve_count_dual_lp(const CountModel& count, const SimplexOptions& options = {});

/// pi(s,a) = q(s,a) / sum_a q(s,a); rows with no mass put probability one on idle[s].
/// Entries below zero (solver noise) are treated as zero.
TabularPolicy extract_policy(std::span<const double> q, std::span<const std::size_t> offsets,
                             std::span<const int> idle_actions);
TabularPolicy extract_joint_policy(std::span<const double> q, const JointModel& joint);
TabularPolicy extract_count_policy(std::span<const double> q, const CountModel& count);

/// V_n = sum_{s,a} r_n(s,a) q(s,a).
std::vector<double> value_vector_of(std::span<const double> q, const JointModel& joint);

/// Discounted occupancy of a joint policy from the joint initial distribution, by a
/// dense linear solve of (I - gamma P_pi') d = mu.
std::vector<double> occupancy_of(const TabularPolicy& policy, const JointModel& joint);

/// Same for a policy on the count MDP.
std::vector<double> count_occupancy_of(const TabularPolicy& policy, const CountModel& count);

/// (1/N!) sum_Q q(Qs, Qa). Requires a symmetric model.
std::vector<double> permutation_average(std::span<const double> q, const JointModel& joint);

/// sum_a q(s,a) - gamma sum P q - mu(s), per joint state.
std::vector<double> flow_residuals(std::span<const double> q, const JointModel& joint);

/// One row of the size/timing tables.
struct LpStatsRow {
  std::string model;
  int num_submdps = 0;
  int num_states = 0;
  int constraints = 0;
  int variables = 0;
  double build_seconds = 0.0;
  double solve_seconds = 0.0;
  double extract_seconds = 0.0;
  double objective = 0.0;
  bool solved = false;
};

void write_lp_stats_csv(std::ostream& out, std::span<const LpStatsRow> rows);

}  // namespace fairmdp
