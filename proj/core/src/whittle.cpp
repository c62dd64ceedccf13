#include <algorithm>
#include <cmath>
#include <limits>

#include "fairmdp/baselines.hpp"
#include "fairmdp/error.hpp"

namespace fairmdp {
namespace {

void value_iteration(const SubMdp& sub, double gamma, double lambda, double tol, std::vector<double>& v) {
  const int S = sub.num_states();
  const double stop = gamma > 0.0 ? tol * (1.0 - gamma) / (2.0 * gamma) : 0.0;
  std::vector<double> next(S);
  for (int iter = 0; iter < 100000; ++iter) {
    double residual = 0.0;
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < 2; ++a) {
        double q = sub.reward(s, a) + (a == 0 ? lambda : 0.0);
        const auto row = sub.transition_row(s, a);
        for (int t = 0; t < S; ++t) q += gamma * row[t] * v[t];
        best = std::max(best, q);
      }
      next[s] = best;
      residual = std::max(residual, std::abs(best - v[s]));
    }
    v.swap(next);
    if (residual <= stop) return;
  }
  fail(ErrorCode::kNumericFailure, "value iteration did not converge");
}

}  // namespace

std::vector<double> subsidized_advantage(const SubMdp& sub, double gamma, double lambda, double tol,
                                         std::vector<double>* warm_start) {
  require(sub.num_actions() == 2, ErrorCode::kNotBinaryAction, "Whittle indices need exactly two actions");
  const int S = sub.num_states();
  std::vector<double> local(S, 0.0);
  std::vector<double>& v = warm_start && static_cast<int>(warm_start->size()) == S ? *warm_start : local;
  value_iteration(sub, gamma, lambda, tol, v);
  std::vector<double> adv(S);
  for (int s = 0; s < S; ++s) {
    double q[2];
    for (int a = 0; a < 2; ++a) {
      q[a] = sub.reward(s, a) + (a == 0 ? lambda : 0.0);
      const auto row = sub.transition_row(s, a);
      for (int t = 0; t < S; ++t) q[a] += gamma * row[t] * v[t];
    }
    adv[s] = q[1] - q[0];
  }
  return adv;
}

WhittleTable whittle_indices(const SubMdp& sub, double gamma, double tol, const WhittleOptions& options) {
  require(sub.num_actions() == 2, ErrorCode::kNotBinaryAction, "Whittle indices need exactly two actions");
  require(tol > 0.0, ErrorCode::kConfigInvalid, "tolerance must be positive");
  const int S = sub.num_states();
  const double bound = (1.0 + sub.max_abs_reward()) / (1.0 - gamma);

  WhittleTable table;
  table.subsidy_tolerance = tol;
  table.index.resize(S);
  // Value-iteration accuracy is kept well below the bisection width.
  const double vi_tol = tol * 1e-3;
  std::vector<double> warm(S, 0.0);
  for (int s = 0; s < S; ++s) {
    double lo = -bound, hi = bound;
    while (subsidized_advantage(sub, gamma, lo, vi_tol, &warm)[s] <= 0.0 && lo > -1e6 * bound) lo *= 2.0;
    while (subsidized_advantage(sub, gamma, hi, vi_tol, &warm)[s] > 0.0 && hi < 1e6 * bound) hi *= 2.0;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (subsidized_advantage(sub, gamma, mid, vi_tol, &warm)[s] > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    table.index[s] = 0.5 * (lo + hi);
  }

  const int points = std::max(options.validation_points, 2);
  std::vector<char> passive_prev(S, 0);
  for (int k = 0; k < points; ++k) {
    const double lambda = -bound + 2.0 * bound * k / (points - 1);
    const auto adv = subsidized_advantage(sub, gamma, lambda, vi_tol, &warm);
    for (int s = 0; s < S; ++s) {
      const char passive = adv[s] <= 1e-9 ? 1 : 0;
      if (passive_prev[s] && !passive) table.indexable = false;
      passive_prev[s] = passive;
    }
  }
  for (double v : table.index)
    if (!std::isfinite(v)) table.indexable = false;
  return table;
}

std::vector<int> wip_act(std::span<const int> joint_state, const WhittleTable& table, double budget) {
  const int n = static_cast<int>(joint_state.size());
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (table.index[joint_state[i]] > 0.0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return table.index[joint_state[a]] > table.index[joint_state[b]];
  });
  const auto slots = static_cast<std::size_t>(std::floor(budget + kBudgetEps));
  std::vector<int> action(n, 0);
  for (std::size_t k = 0; k < std::min(slots, order.size()); ++k) action[order[k]] = 1;
  return action;
}

CountAction wip_count_act(const CountState& x, const WhittleTable& table, double budget, int num_actions) {
  const int S = x.size();
  CountAction u(S, num_actions);
  std::vector<int> states;
  for (int s = 0; s < S; ++s) {
    u.at(s, 0) = x[s];
    if (x[s] > 0 && table.index[s] > 0.0) states.push_back(s);
  }
  std::stable_sort(states.begin(), states.end(), [&](int a, int b) { return table.index[a] > table.index[b]; });
  int slots = static_cast<int>(std::floor(budget + kBudgetEps));
  for (int s : states) {
    const int take = std::min(slots, x[s]);
    u.at(s, 1) += take;
    u.at(s, 0) -= take;
    slots -= take;
  }
  return u;
}

}  // namespace fairmdp
