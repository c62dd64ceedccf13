#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "fairmdp/count_mdp.hpp"
#include "fairmdp/model.hpp"
#include "fairmdp/rng.hpp"

namespace fairmdp {

struct WhittleTable {
  std::vector<double> index;
  bool indexable = true;
  double subsidy_tolerance = 0.0;
};

struct WhittleOptions {
  /// Points in the passive-set monotonicity sweep.
  int validation_points = 201;
};

/// Index of each state of a binary-action arm (0 passive, 1 active): the subsidy added
/// to the passive reward at which both actions are optimal, by bisection with
/// warm-started value iteration. Throws NotBinaryAction unless A == 2.
WhittleTable whittle_indices(const SubMdp& sub, double gamma, double tol,
                             const WhittleOptions& options = {});

/// Q(s,1) - Q(s,0) for the subsidy-lambda arm, value iteration run to tol.
std::vector<double> subsidized_advantage(const SubMdp& sub, double gamma, double lambda, double tol,
                                         std::vector<double>* warm_start = nullptr);

/// Activates the floor(budget) machines with the largest positive index, ties by
/// ascending machine number.
std::vector<int> wip_act(std::span<const int> joint_state, const WhittleTable& table, double budget);

/// Count-space form of wip_act: fills the budget from the highest-index states.
CountAction wip_count_act(const CountState& x, const WhittleTable& table, double budget, int num_actions = 2);

/// Uniform draws from the feasible joint action set (which does not depend on the
/// state). Actions are chosen machine by machine with probability proportional to the
/// number of feasible completions, so no draw is ever rejected.
class RandomActionSampler {
 public:
  explicit RandomActionSampler(const WcmdpSpec& spec);

  std::vector<int> sample(Rng& rng);
  /// Number of feasible joint actions.
  double count_feasible();

 private:
  double completions(int n, const std::vector<double>& remaining);

  const WcmdpSpec* spec_;
  std::map<std::pair<int, std::vector<double>>, double> memo_;
};

std::vector<int> random_act(std::span<const int> joint_state, const WcmdpSpec& spec, Rng& rng);

}  // namespace fairmdp
