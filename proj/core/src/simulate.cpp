#include "fairmdp/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>

#include "fairmdp/error.hpp"

namespace fairmdp {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double sample_std(std::span<const double> y) {
  if (y.size() < 2) return 0.0;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(y.size() - 1));
}

}  // namespace

void EvalConfig::validate() const {
  require(num_trajectories >= 1, ErrorCode::kConfigInvalid, "need at least one trajectory");
  require(horizon >= 1, ErrorCode::kConfigInvalid, "horizon must be positive");
  require(discount >= 0.0 && discount < 1.0, ErrorCode::kConfigInvalid, "discount must lie in [0,1)");
}

GgfWeights EvalConfig::weights_for(int num_submdps) const {
  if (weights) {
    require(static_cast<int>(weights->size()) == num_submdps, ErrorCode::kLengthMismatch,
            "evaluation weights do not match N");
    return *weights;
  }
  return make_exponential_weights(num_submdps, weights_factor);
}

std::pair<CountState, double> step_count(const CountState& x, const CountAction& u, const SubMdp& sub, Rng& rng) {
  const int S = sub.num_states();
  const int A = sub.num_actions();
  require(u.num_states == S && u.num_actions == A && x.size() == S, ErrorCode::kLengthMismatch,
          "count action shape does not match the sub-MDP");
  const int n = x.total();
  for (int s = 0; s < S; ++s)
    require(u.row_sum(s) == x[s], ErrorCode::kInfeasibleAction, "count action row sums must equal x");
  CountState next{std::vector<int>(S, 0)};
  double reward = 0.0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const int machines = u.at(s, a);
      if (machines == 0) continue;
      const auto row = sub.transition_row(s, a);
      for (int m = 0; m < machines; ++m) next.counts[sample_categorical(rng, row)] += 1;
      reward += machines * sub.reward(s, a);
    }
  return {std::move(next), n > 0 ? reward / n : 0.0};
}

EvalReport evaluate_joint_policy(const JointPolicyFn& policy, const WcmdpSpec& spec, const EvalConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const int N = spec.num_submdps();
  const int M = cfg.num_trajectories;
  const auto weights = cfg.weights_for(N);
  std::vector<double> returns(static_cast<std::size_t>(M) * N, 0.0);
  std::vector<int> state(N);
  for (int m = 0; m < M; ++m) {
    Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(m));
    for (int n = 0; n < N; ++n) state[n] = static_cast<int>(sample_categorical(rng, spec.sub_mdp(n).initial_dist()));
    double discount = 1.0;
    double* ret = &returns[static_cast<std::size_t>(m) * N];
    for (int t = 0; t < cfg.horizon; ++t) {
      const auto action = policy(state, rng);
      require(static_cast<int>(action.size()) == N, ErrorCode::kPolicyInfeasibleAction,
              "policy returned a tuple of the wrong length");
      for (int n = 0; n < N; ++n)
        require(action[n] >= 0 && action[n] < spec.num_actions(), ErrorCode::kPolicyInfeasibleAction,
                "policy returned an unknown action");
      require(spec.is_feasible(action), ErrorCode::kPolicyInfeasibleAction, "policy action violates a budget");
      for (int n = 0; n < N; ++n) {
        const auto& sub = spec.sub_mdp(n);
        ret[n] += discount * sub.reward(state[n], action[n]);
        state[n] = static_cast<int>(sample_categorical(rng, sub.transition_row(state[n], action[n])));
      }
      discount *= cfg.discount;
    }
  }

  EvalReport report;
  report.trajectories_used = M;
  report.mean_value.assign(N, 0.0);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) report.mean_value[n] += returns[static_cast<std::size_t>(m) * N + n];
  for (double& v : report.mean_value) v /= M;
  report.ggf_score = ggf(report.mean_value, weights);

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return report.mean_value[a] < report.mean_value[b]; });
  std::vector<double> scores(M, 0.0);
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < N; ++i) scores[m] += weights[i] * returns[static_cast<std::size_t>(m) * N + order[i]];
  report.std_error = sample_std(scores) / std::sqrt(static_cast<double>(M));
  report.wall_seconds = seconds_since(start);
  return report;
}

EvalReport evaluate_count_policy(const CountPolicyFn& policy, const WcmdpSpec& spec, const EvalConfig& cfg) {
  cfg.validate();
  require(is_symmetric(spec), ErrorCode::kNotSymmetric, "count evaluation needs a symmetric instance");
  const auto start = std::chrono::steady_clock::now();
  const int N = spec.num_submdps();
  const int S = spec.num_states();
  const int M = cfg.num_trajectories;
  const auto& sub = spec.sub_mdp(0);
  std::vector<double> values(M, 0.0);
  for (int m = 0; m < M; ++m) {
    Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(m));
    CountState x{std::vector<int>(S, 0)};
    for (int n = 0; n < N; ++n) x.counts[sample_categorical(rng, sub.initial_dist())] += 1;
    double discount = 1.0;
    for (int t = 0; t < cfg.horizon; ++t) {
      const CountAction u = policy(x, rng);
      try {
        check_count_action(x, u, spec);
      } catch (const Error& e) {
        fail(ErrorCode::kPolicyInfeasibleAction, e.what());
      }
      auto [next, reward] = step_count(x, u, sub, rng);
      values[m] += discount * reward;
      x = std::move(next);
      discount *= cfg.discount;
    }
  }
  EvalReport report;
  report.trajectories_used = M;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / M;
  report.mean_value.assign(N, mean);
  report.ggf_score = mean;
  report.std_error = sample_std(values) / std::sqrt(static_cast<double>(M));
  report.wall_seconds = seconds_since(start);
  return report;
}

JointPolicyFn tabular_joint_policy(const TabularPolicy& policy, const JointModel& joint) {
  auto pol = std::make_shared<TabularPolicy>(policy);
  auto model = std::make_shared<JointModel>(joint);
  return [pol, model](std::span<const int> state, Rng& rng) {
    const auto s = model->encode_state(state);
    const auto a = model->action(pol->sample(s, rng));
    return std::vector<int>(a.begin(), a.end());
  };
}

JointPolicyFn wip_joint_policy(const WhittleTable& table, double budget) {
  return [table, budget](std::span<const int> state, Rng&) { return wip_act(state, table, budget); };
}

JointPolicyFn random_joint_policy(const WcmdpSpec& spec) {
  auto owned = std::make_shared<WcmdpSpec>(spec);
  auto sampler = std::make_shared<RandomActionSampler>(*owned);
  return [owned, sampler](std::span<const int>, Rng& rng) { return sampler->sample(rng); };
}

CountPolicyFn tabular_count_policy(const TabularPolicy& policy, const CountModel& count) {
  auto pol = std::make_shared<TabularPolicy>(policy);
  auto model = std::make_shared<CountModel>(count);
  return [pol, model](const CountState& x, Rng& rng) {
    const int xi = model->index_of(x);
    require(xi >= 0, ErrorCode::kInvalidModel, "count state not in the model");
    return model->action(xi, pol->sample(xi, rng));
  };
}

CountPolicyFn wip_count_policy(const WhittleTable& table, double budget, int num_actions) {
  return [table, budget, num_actions](const CountState& x, Rng&) {
    return wip_count_act(x, table, budget, num_actions);
  };
}

void write_eval_csv_header(std::ostream& out) {
  out << "policy,N,S,budget,ggf_score,mean_value,stderr,seconds\n";
}

void write_eval_csv_row(std::ostream& out, const std::string& policy, const WcmdpSpec& spec, const EvalReport& r) {
  const double mean = std::accumulate(r.mean_value.begin(), r.mean_value.end(), 0.0) /
                      static_cast<double>(std::max<std::size_t>(r.mean_value.size(), 1));
  out << policy << ',' << spec.num_submdps() << ',' << spec.num_states() << ',' << spec.budget(0) << ','
      << r.ggf_score << ',' << mean << ',' << r.std_error << ',' << r.wall_seconds << '\n';
}

}  // namespace fairmdp
