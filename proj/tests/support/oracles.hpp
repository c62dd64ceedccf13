#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "fairmdp/baselines.hpp"
#include "fairmdp/count_mdp.hpp"
#include "fairmdp/cp_sampler.hpp"
#include "fairmdp/fairness.hpp"
#include "fairmdp/model.hpp"
#include "fairmdp/rng.hpp"

namespace fairmdp::oracle {

inline std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

inline std::vector<int> decode(std::uint64_t code, int n, int base) {
  std::vector<int> t(n);
  for (int i = n - 1; i >= 0; --i) {
    t[i] = static_cast<int>(code % base);
    code /= base;
  }
  return t;
}

/// min over all permutations of sum_i w_i v_{sigma(i)}.
inline double ggf_bruteforce(std::vector<double> v, std::span<const double> w) {
  std::sort(v.begin(), v.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) total += w[i] * v[i];
    best = std::min(best, total);
  } while (std::next_permutation(v.begin(), v.end()));
  return best;
}

/// Pre-image summation: pick a representative (s, a) with count_of(s)=x and
/// action counts u, then sum the product transition over every next joint state.
inline std::map<std::vector<int>, double> aggregate_bruteforce(const WcmdpSpec& spec, const CountState& x,
                                                               const CountAction& u) {
  const int N = spec.num_submdps();
  const int S = spec.num_states();
  std::vector<int> s, a;
  for (int st = 0; st < S; ++st)
    for (int ac = 0; ac < spec.num_actions(); ++ac)
      for (int k = 0; k < u.at(st, ac); ++k) {
        s.push_back(st);
        a.push_back(ac);
      }
  std::map<std::vector<int>, double> out;
  const auto total = ipow(S, N);
  for (std::uint64_t code = 0; code < total; ++code) {
    const auto next = decode(code, N, S);
    double p = 1.0;
    for (int n = 0; n < N && p > 0.0; ++n) p *= spec.sub_mdp(n).transition(s[n], a[n], next[n]);
    if (p > 0.0) out[count_of(next, S).counts] += p;
  }
  (void)x;
  return out;
}

/// sum of mu(s) over the pre-image of each count state.
inline std::map<std::vector<int>, double> initial_bruteforce(const WcmdpSpec& spec) {
  const int N = spec.num_submdps();
  const int S = spec.num_states();
  std::map<std::vector<int>, double> out;
  for (std::uint64_t code = 0; code < ipow(S, N); ++code) {
    const auto s = decode(code, N, S);
    double p = 1.0;
    for (int n = 0; n < N; ++n) p *= spec.sub_mdp(n).initial(s[n]);
    out[count_of(s, S).counts] += p;
  }
  return out;
}

/// Q(s,1) - Q(s,0) of the lambda-subsidized arm by plain value iteration, warm-started
/// from v.
inline std::vector<double> subsidy_advantage(const SubMdp& sub, double gamma, double lambda, std::vector<double>& v,
                                             double tol = 1e-11) {
  const int S = sub.num_states();
  std::vector<double> q0(S), q1(S);
  auto backup = [&] {
    for (int s = 0; s < S; ++s) {
      q0[s] = sub.reward(s, 0) + lambda;
      q1[s] = sub.reward(s, 1);
      for (int t = 0; t < S; ++t) {
        q0[s] += gamma * sub.transition(s, 0, t) * v[t];
        q1[s] += gamma * sub.transition(s, 1, t) * v[t];
      }
    }
  };
  for (int it = 0; it < 1000000; ++it) {
    backup();
    double res = 0.0;
    for (int s = 0; s < S; ++s) {
      const double nv = std::max(q0[s], q1[s]);
      res = std::max(res, std::abs(nv - v[s]));
      v[s] = nv;
    }
    if (res < tol) break;
  }
  backup();
  std::vector<double> adv(S);
  for (int s = 0; s < S; ++s) adv[s] = q1[s] - q0[s];
  return adv;
}

/// Whittle index by scanning lambda upward over a grid: the first grid point at which the
/// passive action is optimal in s. The default range [-R, R], R = 1 + span(r)/(1-gamma),
/// contains every index of the arm.
inline std::vector<double> whittle_grid(const SubMdp& sub, double gamma, double step = 1e-4) {
  const int S = sub.num_states();
  double lo_r = std::numeric_limits<double>::infinity(), hi_r = -lo_r;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < 2; ++a) {
      lo_r = std::min(lo_r, sub.reward(s, a));
      hi_r = std::max(hi_r, sub.reward(s, a));
    }
  const double R = 1.0 + (hi_r - lo_r) / (1.0 - gamma);
  std::vector<double> index(S, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> v(S, 0.0);
  const long points = std::lround(2 * R / step);
  int found = 0;
  for (long k = 0; k <= points && found < S; ++k) {
    const double lambda = -R + step * static_cast<double>(k);
    const auto adv = subsidy_advantage(sub, gamma, lambda, v);
    for (int s = 0; s < S; ++s)
      if (std::isnan(index[s]) && adv[s] <= 0.0) {
        index[s] = lambda;
        ++found;
      }
  }
  return index;
}

/// Exact distribution of the sampler's output action, by exhaustive enumeration of the
/// draw tree.
inline std::map<std::vector<int>, double> sampler_distribution(const CountState& x, const PolicyOutput& out,
                                                               std::span<const double> budgets,
                                                               std::span<const double> d) {
  const int S = out.num_states, A = out.num_actions, K = static_cast<int>(budgets.size());
  std::map<std::vector<int>, double> dist;
  std::vector<double> b(K);
  for (int k = 0; k < K; ++k) b[k] = budgets[k] * out.resource_use[k];
  std::vector<char> forbidden(S * A, 0);
  for (int s = 0; s < S; ++s)
    if (x[s] == 0)
      for (int a = 0; a < A; ++a) forbidden[s * A + a] = 1;
  std::vector<int> u(S * A, 0);
  std::vector<int> rem = x.counts;
  auto recurse = [&](auto& self, double prob) -> void {
    double total = 0.0;
    for (int i = 0; i < S * A; ++i)
      if (!forbidden[i]) total += out.priorities[i];
    if (total == 0.0) {
      dist[u] += prob;
      return;
    }
    for (int i = 0; i < S * A; ++i) {
      if (forbidden[i]) continue;
      const double p = prob * out.priorities[i] / total;
      const int s = i / A, a = i % A;
      bool ok = true;
      for (int k = 0; k < K; ++k)
        if (d[k * A + a] > b[k] + kBudgetEps) ok = false;
      if (ok) {
        auto saved_f = forbidden;
        u[i] += 1;
        rem[s] -= 1;
        for (int k = 0; k < K; ++k) b[k] -= d[k * A + a];
        if (rem[s] == 0)
          for (int aa = 0; aa < A; ++aa) forbidden[s * A + aa] = 1;
        self(self, p);
        forbidden = saved_f;
        u[i] -= 1;
        rem[s] += 1;
        for (int k = 0; k < K; ++k) b[k] += d[k * A + a];
      } else {
        forbidden[i] = 1;
        self(self, p);
        forbidden[i] = 0;
      }
    }
  };
  recurse(recurse, 1.0);
  return dist;
}

/// Random S-state, 2-action sub-MDP with Dirichlet(1) rows and U[0,1) rewards.
inline SubMdp random_sub_mdp(int S, Rng& rng, bool uniform_initial = true) {
  const int A = 2;
  std::vector<double> p(static_cast<std::size_t>(S) * A * S), r(static_cast<std::size_t>(S) * A), mu(S);
  auto dirichlet = [&](double* out) {
    double total = 0.0;
    for (int t = 0; t < S; ++t) {
      out[t] = -std::log(1.0 - uniform01(rng));
      total += out[t];
    }
    double acc = 0.0;
    for (int t = 0; t + 1 < S; ++t) {
      out[t] /= total;
      acc += out[t];
    }
    out[S - 1] = 1.0 - acc;
    if (out[S - 1] < 0.0) out[S - 1] = 0.0;
  };
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) dirichlet(&p[(s * A + a) * S]);
  for (double& v : r) v = uniform01(rng);
  if (uniform_initial)
    std::fill(mu.begin(), mu.end(), 1.0 / S);
  else
    dirichlet(mu.data());
  return SubMdp(S, A, std::move(p), std::move(r), std::move(mu));
}

inline WcmdpSpec random_symmetric_spec(int N, int S, double budget, double gamma, Rng& rng,
                                       bool uniform_initial = true) {
  const std::vector<double> d{0.0, 1.0};
  return WcmdpSpec::replicated(random_sub_mdp(S, rng, uniform_initial), N, d, {budget}, gamma);
}

/// Random non-increasing weights summing to one.
inline GgfWeights random_weights(int n, Rng& rng) {
  std::vector<double> w(n);
  for (double& v : w) v = uniform01(rng) + 1e-3;
  std::sort(w.begin(), w.end(), std::greater<>());
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  double acc = 0.0;
  for (int i = 1; i < n; ++i) acc += w[i];
  w[0] = 1.0 - acc;
  return GgfWeights(std::move(w));
}

/// Discounted value of every state of the passive chain by value iteration.
inline std::vector<double> passive_chain_values(const SubMdp& sub, double gamma, double tol = 1e-13) {
  const int S = sub.num_states();
  std::vector<double> v(S, 0.0), next(S);
  for (int it = 0; it < 100000; ++it) {
    double res = 0.0;
    for (int s = 0; s < S; ++s) {
      next[s] = sub.reward(s, 0);
      for (int t = 0; t < S; ++t) next[s] += gamma * sub.transition(s, 0, t) * v[t];
      res = std::max(res, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (res < tol) break;
  }
  return v;
}

}  // namespace fairmdp::oracle
