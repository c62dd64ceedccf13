#include "fairmdp/count_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace fairmdp {

namespace {

// Mixed-radix key with base N+1; x_{S-1} is the most significant digit, so ascending
// keys give colexicographic order.
std::uint64_t encode(std::span<const int> counts, int n) {
  std::uint64_t key = 0;
  for (int s = static_cast<int>(counts.size()) - 1; s >= 0; --s) key = key * (n + 1) + counts[s];
  return key;
}

CountState decode(std::uint64_t key, int n, int num_states) {
  CountState x{std::vector<int>(num_states)};
  for (int s = 0; s < num_states; ++s) {
    x.counts[s] = static_cast<int>(key % (n + 1));
    key /= (n + 1);
  }
  return x;
}

void check_key_range(int n, int num_states) {
  const double digits = num_states * std::log2(n + 1.0);
  require(digits < 63.0, ErrorCode::kCapExceeded, "count-state keys would overflow 64 bits");
}

void require_symmetric(const WcmdpSpec& spec) {
  require(is_symmetric(spec), ErrorCode::kNotSymmetric, "count aggregation needs a symmetric WCMDP");
}

double log_factorial(int k) { return std::lgamma(k + 1.0); }

// Calls visit(parts) for every composition of `total` into parts.size() nonnegative parts.
template <class Visit>
void for_each_composition(int total, std::vector<int>& parts, std::size_t pos, Visit&& visit) {
  if (pos + 1 == parts.size()) {
    parts[pos] = total;
    visit(parts);
    return;
  }
  for (int k = 0; k <= total; ++k) {
    parts[pos] = k;
    for_each_composition(total - k, parts, pos + 1, visit);
  }
}

bool row_sums_match(const CountState& x, const CountAction& u) {
  if (u.num_states != x.size()) return false;
  for (int s = 0; s < x.size(); ++s) {
    if (u.row_sum(s) != x[s]) return false;
    for (int a = 0; a < u.num_actions; ++a)
      if (u.at(s, a) < 0) return false;
  }
  return true;
}

bool within_budget(const CountAction& u, const WcmdpSpec& spec) {
  for (int k = 0; k < spec.num_resources(); ++k) {
    double used = 0.0;
    for (int s = 0; s < u.num_states; ++s)
      for (int a = 0; a < u.num_actions; ++a) used += spec.consumption(k, 0, a) * u.at(s, a);
    if (used > spec.budget(k) + kBudgetEps) return false;
  }
  return true;
}

std::vector<CountOutcome> convolve(const CountState& x, const CountAction& u, const SubMdp& sub) {
  const int n = x.total();
  const int num_states = sub.num_states();
  std::map<std::uint64_t, double> dist{{0, 1.0}};
  std::vector<std::uint64_t> place(num_states);
  for (int s = 0; s < num_states; ++s) place[s] = s == 0 ? 1 : place[s - 1] * (n + 1);

  std::vector<int> support;
  std::vector<int> parts;
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < sub.num_actions(); ++a) {
      const int c = u.at(s, a);
      if (c == 0) continue;
      support.clear();
      for (int next = 0; next < num_states; ++next)
        if (sub.transition(s, a, next) > 0.0) support.push_back(next);

      // Multinomial(c, p(.|s,a)) over the support of the row.
      std::vector<std::pair<std::uint64_t, double>> group;
      parts.assign(support.size(), 0);
      for_each_composition(c, parts, 0, [&](const std::vector<int>& k) {
        double logp = log_factorial(c);
        std::uint64_t delta = 0;
        for (std::size_t i = 0; i < k.size(); ++i) {
          if (k[i] == 0) continue;
          logp += k[i] * std::log(sub.transition(s, a, support[i])) - log_factorial(k[i]);
          delta += place[support[i]] * static_cast<std::uint64_t>(k[i]);
        }
        group.emplace_back(delta, std::exp(logp));
      });

      std::map<std::uint64_t, double> next_dist;
      for (const auto& [key, p] : dist)
        for (const auto& [delta, q] : group) next_dist[key + delta] += p * q;
      dist.swap(next_dist);
    }
  }

  std::vector<CountOutcome> out;
  out.reserve(dist.size());
  for (const auto& [key, p] : dist)
    if (p > 0.0) out.push_back({decode(key, n, num_states), p});
  return out;
}

double mean_reward_unchecked(const CountState& x, const CountAction& u, const SubMdp& sub) {
  double total = 0.0;
  for (int s = 0; s < u.num_states; ++s)
    for (int a = 0; a < u.num_actions; ++a) total += u.at(s, a) * sub.reward(s, a);
  return total / x.total();
}

std::vector<CountAction> feasible_actions_unchecked(const CountState& x, const WcmdpSpec& spec) {
  const int num_states = spec.num_states();
  const int num_actions = spec.num_actions();
  const int num_resources = spec.num_resources();
  const auto d = spec.shared_consumption();

  std::vector<CountAction> out;
  CountAction u(num_states, num_actions);
  std::vector<double> used(num_resources, 0.0);

  auto fits = [&](const std::vector<double>& use) {
    for (int k = 0; k < num_resources; ++k)
      if (use[k] > spec.budget(k) + kBudgetEps) return false;
    return true;
  };

  // Recurse over (s, a) for a >= 1; action 0 absorbs the remainder of each row.
  auto recurse = [&](auto&& self, int s, int a, int remaining) -> void {
    if (s == num_states) {
      out.push_back(u);
      return;
    }
    if (a == num_actions) {
      u.at(s, 0) = remaining;
      for (int k = 0; k < num_resources; ++k) used[k] += d[k * num_actions] * remaining;
      if (fits(used)) self(self, s + 1, 1, s + 1 < num_states ? x[s + 1] : 0);
      for (int k = 0; k < num_resources; ++k) used[k] -= d[k * num_actions] * remaining;
      u.at(s, 0) = 0;
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      u.at(s, a) = c;
      for (int k = 0; k < num_resources; ++k) used[k] += d[k * num_actions + a] * c;
      const bool ok = fits(used);
      if (ok) self(self, s, a + 1, remaining - c);
      for (int k = 0; k < num_resources; ++k) used[k] -= d[k * num_actions + a] * c;
      if (!ok) break;  // consumption is nonnegative, so larger c cannot fit either
    }
    u.at(s, a) = 0;
  };
  if (num_actions == 1) {
    for (int s = 0; s < num_states; ++s) u.at(s, 0) = x[s];
    if (within_budget(u, spec)) out.push_back(u);
    return out;
  }
  recurse(recurse, 0, 1, x[0]);
  return out;
}

}  // namespace

int CountState::total() const noexcept { return std::accumulate(counts.begin(), counts.end(), 0); }

int CountAction::row_sum(int s) const {
  int total = 0;
  for (int a = 0; a < num_actions; ++a) total += at(s, a);
  return total;
}

int CountAction::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

CountState count_of(std::span<const int> joint_state, int num_states) {
  CountState x{std::vector<int>(num_states, 0)};
  for (int s : joint_state) {
    require(s >= 0 && s < num_states, ErrorCode::kInvalidModel, "state index out of range");
    ++x.counts[s];
  }
  return x;
}

std::vector<CountState> enumerate_count_states(int num_submdps, int num_states) {
  require(num_submdps >= 0 && num_states >= 1, ErrorCode::kInvalidModel, "bad count-state dimensions");
  check_key_range(num_submdps, num_states);
  std::vector<CountState> out;
  std::vector<int> parts(num_states);
  for_each_composition(num_submdps, parts, 0, [&](const std::vector<int>& k) { out.push_back({k}); });
  std::sort(out.begin(), out.end(), [&](const CountState& a, const CountState& b) {
    return encode(a.counts, num_submdps) < encode(b.counts, num_submdps);
  });
  return out;
}

std::uint64_t count_state_cardinality(int num_submdps, int num_states) {
  // C(N+S-1, S-1) by the multiplicative formula; exact while intermediate values fit.
  std::uint64_t result = 1;
  for (int i = 1; i < num_states; ++i) result = result * (num_submdps + i) / i;
  return result;
}

void check_count_action(const CountState& x, const CountAction& u, const WcmdpSpec& spec) {
  require(u.num_actions == spec.num_actions() && x.size() == spec.num_states(), ErrorCode::kInfeasibleAction,
          "count action has wrong shape");
  require(row_sums_match(x, u), ErrorCode::kInfeasibleAction, "count action rows do not sum to x");
  require(within_budget(u, spec), ErrorCode::kInfeasibleAction, "count action exceeds a budget");
}

std::vector<CountAction> enumerate_feasible_actions(const CountState& x, const WcmdpSpec& spec) {
  require_symmetric(spec);
  require(x.size() == spec.num_states(), ErrorCode::kLengthMismatch, "count state has wrong length");
  return feasible_actions_unchecked(x, spec);
}

std::vector<CountOutcome> aggregate_transition(const CountState& x, const CountAction& u,
                                               const WcmdpSpec& spec) {
  require_symmetric(spec);
  check_count_action(x, u, spec);
  check_key_range(x.total(), x.size());
  return convolve(x, u, spec.sub_mdp(0));
}

double mean_reward(const CountState& x, const CountAction& u, const WcmdpSpec& spec) {
  require_symmetric(spec);
  check_count_action(x, u, spec);
  return mean_reward_unchecked(x, u, spec.sub_mdp(0));
}

std::vector<CountOutcome> initial_count_dist(const WcmdpSpec& spec) {
  require_symmetric(spec);
  const int n = spec.num_submdps();
  const SubMdp& sub = spec.sub_mdp(0);
  std::vector<CountOutcome> out;
  for (auto& x : enumerate_count_states(n, spec.num_states())) {
    double logp = log_factorial(n);
    bool zero = false;
    for (int s = 0; s < x.size(); ++s) {
      if (x[s] == 0) continue;
      if (sub.initial(s) == 0.0) {
        zero = true;
        break;
      }
      logp += x[s] * std::log(sub.initial(s)) - log_factorial(x[s]);
    }
    out.push_back({std::move(x), zero ? 0.0 : std::exp(logp)});
  }
  return out;
}

int CountModel::index_of(const CountState& x) const {
  if (x.size() != sub_states_ || x.total() != num_submdps_) return -1;
  const auto it = index_.find(encode(x.counts, num_submdps_));
  return it == index_.end() ? -1 : it->second;
}

CountModel build_count_model(const WcmdpSpec& spec) {
  require_symmetric(spec);
  const int n = spec.num_submdps();
  const SubMdp& sub = spec.sub_mdp(0);

  CountModel model;
  model.num_submdps_ = n;
  model.sub_states_ = spec.num_states();
  model.sub_actions_ = spec.num_actions();
  model.discount_ = spec.discount();
  model.states_ = enumerate_count_states(n, spec.num_states());
  for (int i = 0; i < model.num_states(); ++i) model.index_[encode(model.states_[i].counts, n)] = i;

  const int idle = spec.idle_action(0);
  model.pair_offsets_.push_back(0);
  for (const auto& x : model.states_) {
    auto actions = feasible_actions_unchecked(x, spec);
    int idle_index = -1;
    for (std::size_t i = 0; i < actions.size() && idle_index < 0; ++i) {
      bool all_idle = true;
      for (int s = 0; s < x.size(); ++s) all_idle = all_idle && actions[i].at(s, idle) == x[s];
      if (all_idle) idle_index = static_cast<int>(i);
    }
    require(idle_index >= 0, ErrorCode::kInfeasibleModel, "all-idle count action missing");
    model.idle_actions_.push_back(idle_index);

    for (const auto& u : actions) {
      std::vector<CountTransition> row;
      for (auto& outcome : convolve(x, u, sub)) row.push_back({model.index_of(outcome.next), outcome.prob});
      model.transitions_.push_back(std::move(row));
      model.mean_rewards_.push_back(mean_reward_unchecked(x, u, sub));
    }
    model.pair_offsets_.push_back(model.pair_offsets_.back() + actions.size());
    model.actions_.push_back(std::move(actions));
  }

  for (const auto& outcome : initial_count_dist(spec)) model.initial_.push_back(outcome.prob);
  return model;
}

}  // namespace fairmdp
