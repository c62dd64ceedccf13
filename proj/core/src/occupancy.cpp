#include "fairmdp/occupancy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <ostream>
#include <string>

#include "fairmdp/error.hpp"

namespace fairmdp {

TabularPolicy::TabularPolicy(std::vector<std::size_t> offsets, std::vector<double> probs)
    : offsets_(std::move(offsets)), probs_(std::move(probs)) {
  require(!offsets_.empty() && offsets_.back() == probs_.size(), ErrorCode::kLengthMismatch,
          "policy offsets do not cover the probability table");
}

int TabularPolicy::sample(std::int64_t s, Rng& rng) const {
  return static_cast<int>(sample_categorical(rng, row(s)));
}

namespace {

void merge_terms(std::vector<LpTerm>& terms) {
  std::sort(terms.begin(), terms.end(), [](const LpTerm& a, const LpTerm& b) { return a.column < b.column; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (out > 0 && terms[out - 1].column == terms[i].column)
      terms[out - 1].value += terms[i].value;
    else
      terms[out++] = terms[i];
  }
  terms.resize(out);
}

std::vector<std::size_t> uniform_offsets(std::int64_t states, int actions) {
  std::vector<std::size_t> offsets(states + 1);
  for (std::int64_t s = 0; s <= states; ++s) offsets[s] = static_cast<std::size_t>(s) * actions;
  return offsets;
}

}  // namespace

LinearProgram build_ggf_lp(const JointModel& joint, const GgfWeights& weights) {
  const int n = joint.num_submdps();
  require(static_cast<int>(weights.size()) == n, ErrorCode::kLengthMismatch, "weights length must equal N");
  const std::int64_t num_states = joint.num_states();
  const int num_actions = joint.num_actions();
  const GgfLpLayout layout{n, num_actions};
  const double gamma = joint.discount();

  LinearProgram lp;
  for (int i = 0; i < n; ++i) lp.add_variable("lambda_" + std::to_string(i + 1), 1.0, kFree);
  for (int j = 0; j < n; ++j) lp.add_variable("nu_" + std::to_string(j + 1), 1.0, kFree);
  for (std::int64_t s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a)
      lp.add_variable("q_" + std::to_string(s) + "_" + std::to_string(a), 0.0);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::vector<LpTerm> terms{{layout.lambda(i), 1.0}, {layout.nu(j), 1.0}};
      for (std::int64_t s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) {
          const double r = joint.reward(s, a)[j];
          if (r != 0.0 && weights[i] != 0.0) terms.push_back({layout.q(s, a), -weights[i] * r});
        }
      lp.add_row("ggf_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), RowSense::kLessEqual, 0.0,
                 std::move(terms));
    }
  }

  std::vector<std::vector<LpTerm>> flow(num_states);
  for (std::int64_t s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) {
      flow[s].push_back({layout.q(s, a), 1.0});
      for (const auto& t : joint.transitions(s, a)) flow[t.next_state].push_back({layout.q(s, a), -gamma * t.prob});
    }
  for (std::int64_t s = 0; s < num_states; ++s) {
    merge_terms(flow[s]);
    lp.add_row("flow_" + std::to_string(s), RowSense::kEqual, joint.initial(s), std::move(flow[s]));
  }
  return lp;
}

LinearProgram build_count_dual_lp(const CountModel& count, double gamma) {
  LinearProgram lp;
  const int num_states = count.num_states();
  for (int x = 0; x < num_states; ++x)
    for (int u = 0; u < count.num_actions(x); ++u)
      lp.add_variable("q_" + std::to_string(x) + "_" + std::to_string(u), count.mean_reward(x, u));

  std::vector<std::vector<LpTerm>> flow(num_states);
  for (int x = 0; x < num_states; ++x)
    for (int u = 0; u < count.num_actions(x); ++u) {
      const int col = static_cast<int>(count.pair_index(x, u));
      flow[x].push_back({col, 1.0});
      for (const auto& t : count.transitions(x, u)) flow[t.next].push_back({col, -gamma * t.prob});
    }
  for (int x = 0; x < num_states; ++x) {
    merge_terms(flow[x]);
    lp.add_row("flow_" + std::to_string(x), RowSense::kEqual, count.initial(x), std::move(flow[x]));
  }
  return lp;
}

TabularPolicy extract_policy(std::span<const double> q, std::span<const std::size_t> offsets,
                             std::span<const int> idle_actions) {
  require(!offsets.empty() && offsets.back() == q.size(), ErrorCode::kLengthMismatch,
          "occupancy length does not match the action layout");
  std::vector<double> probs(q.size(), 0.0);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    double mass = 0.0;
    for (std::size_t k = offsets[s]; k < offsets[s + 1]; ++k) mass += std::max(q[k], 0.0);
    if (mass > 0.0) {
      for (std::size_t k = offsets[s]; k < offsets[s + 1]; ++k) probs[k] = std::max(q[k], 0.0) / mass;
    } else {
      probs[offsets[s] + idle_actions[s]] = 1.0;
    }
  }
  return TabularPolicy({offsets.begin(), offsets.end()}, std::move(probs));
}

TabularPolicy extract_joint_policy(std::span<const double> q, const JointModel& joint) {
  const auto offsets = uniform_offsets(joint.num_states(), joint.num_actions());
  const std::vector<int> idle(joint.num_states(), joint.idle_action_index());
  return extract_policy(q, offsets, idle);
}

TabularPolicy extract_count_policy(std::span<const double> q, const CountModel& count) {
  std::vector<std::size_t> offsets(count.num_states() + 1);
  std::vector<int> idle(count.num_states());
  for (int x = 0; x < count.num_states(); ++x) {
    offsets[x] = count.pair_index(x, 0);
    idle[x] = count.idle_action(x);
  }
  offsets.back() = count.num_pairs();
  return extract_policy(q, offsets, idle);
}

std::vector<double> value_vector_of(std::span<const double> q, const JointModel& joint) {
  const int num_actions = joint.num_actions();
  require(q.size() == static_cast<std::size_t>(joint.num_states()) * num_actions, ErrorCode::kLengthMismatch,
          "occupancy length does not match the joint model");
  std::vector<double> v(joint.num_submdps(), 0.0);
  for (std::int64_t s = 0; s < joint.num_states(); ++s)
    for (int a = 0; a < num_actions; ++a) {
      const double mass = q[static_cast<std::size_t>(s) * num_actions + a];
      if (mass == 0.0) continue;
      const auto r = joint.reward(s, a);
      for (int n = 0; n < joint.num_submdps(); ++n) v[n] += r[n] * mass;
    }
  return v;
}

std::vector<double> occupancy_of(const TabularPolicy& policy, const JointModel& joint) {
  const auto num_states = joint.num_states();
  const int num_actions = joint.num_actions();
  require(policy.num_states() == num_states, ErrorCode::kLengthMismatch, "policy does not match the joint model");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(num_states, num_states);
  for (std::int64_t s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) {
      const double p = policy.prob(s, a);
      if (p == 0.0) continue;
      for (const auto& t : joint.transitions(s, a)) m(t.next_state, s) -= joint.discount() * p * t.prob;
    }
  Eigen::VectorXd mu(num_states);
  for (std::int64_t s = 0; s < num_states; ++s) mu(s) = joint.initial(s);
  const Eigen::VectorXd d = m.partialPivLu().solve(mu);
  std::vector<double> q(static_cast<std::size_t>(num_states) * num_actions);
  for (std::int64_t s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) q[static_cast<std::size_t>(s) * num_actions + a] = d(s) * policy.prob(s, a);
  return q;
}

std::vector<double> count_occupancy_of(const TabularPolicy& policy, const CountModel& count) {
  const int num_states = count.num_states();
  require(policy.num_states() == num_states, ErrorCode::kLengthMismatch, "policy does not match the count model");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(num_states, num_states);
  for (int x = 0; x < num_states; ++x)
    for (int u = 0; u < count.num_actions(x); ++u) {
      const double p = policy.prob(x, u);
      if (p == 0.0) continue;
      for (const auto& t : count.transitions(x, u)) m(t.next, x) -= count.discount() * p * t.prob;
    }
  Eigen::VectorXd mu(num_states);
  for (int x = 0; x < num_states; ++x) mu(x) = count.initial(x);
  const Eigen::VectorXd d = m.partialPivLu().solve(mu);
  std::vector<double> q(count.num_pairs());
  for (int x = 0; x < num_states; ++x)
    for (int u = 0; u < count.num_actions(x); ++u) q[count.pair_index(x, u)] = d(x) * policy.prob(x, u);
  return q;
}

std::vector<double> permutation_average(std::span<const double> q, const JointModel& joint) {
  const int n = joint.num_submdps();
  const int num_actions = joint.num_actions();
  const auto perms = Permutation::all(n);
  std::vector<double> avg(q.size(), 0.0);
  for (std::int64_t s = 0; s < joint.num_states(); ++s) {
    const auto state = joint.decode_state(s);
    for (int a = 0; a < num_actions; ++a) {
      const auto action = joint.action(a);
      double total = 0.0;
      for (const auto& perm : perms) {
        const auto ps = perm.apply(std::span<const int>(state));
        const auto pa = perm.apply(action);
        const int ai = joint.action_index(pa);
        require(ai >= 0, ErrorCode::kNotSymmetric, "permuted action is infeasible; model is not symmetric");
        total += q[static_cast<std::size_t>(joint.encode_state(ps)) * num_actions + ai];
      }
      avg[static_cast<std::size_t>(s) * num_actions + a] = total / static_cast<double>(perms.size());
    }
  }
  return avg;
}

std::vector<double> flow_residuals(std::span<const double> q, const JointModel& joint) {
  const int num_actions = joint.num_actions();
  std::vector<double> res(joint.num_states());
  for (std::int64_t s = 0; s < joint.num_states(); ++s) res[s] = -joint.initial(s);
  for (std::int64_t s = 0; s < joint.num_states(); ++s)
    for (int a = 0; a < num_actions; ++a) {
      const double mass = q[static_cast<std::size_t>(s) * num_actions + a];
      res[s] += mass;
      for (const auto& t : joint.transitions(s, a)) res[t.next_state] -= joint.discount() * t.prob * mass;
    }
  return res;
}

OccupancySolution solve_ggf_lp(const JointModel& joint, const GgfWeights& weights, const SimplexOptions& options) {
  const auto lp = build_ggf_lp(joint, weights);
  OccupancySolution out;
  out.lp = solve_lp(lp, options);
  const int n = joint.num_submdps();
  out.lambda.assign(out.lp.x.begin(), out.lp.x.begin() + n);
  out.nu.assign(out.lp.x.begin() + n, out.lp.x.begin() + 2 * n);
  out.q.assign(out.lp.x.begin() + 2 * n, out.lp.x.end());
  out.objective_value = out.lp.objective;
  out.value_vector = value_vector_of(out.q, joint);
  out.policy = extract_joint_policy(out.q, joint);
  return out;
}

CountOccupancySolution solve_count_dual_lp(const CountModel& count, const SimplexOptions& options) {
  const auto lp = build_count_dual_lp(count, count.discount());
  CountOccupancySolution out;
  out.lp = solve_lp(lp, options);
  out.q = out.lp.x;
  out.objective_value = out.lp.objective;
  out.policy = extract_count_policy(out.q, count);
  return out;
}

void write_lp_stats_csv(std::ostream& out, std::span<const LpStatsRow> rows) {
  out << "model,N,S,constraints,variables,build_seconds,solve_seconds,extract_seconds,objective,solved\n";
  for (const auto& r : rows) {
    out << r.model << ',' << r.num_submdps << ',' << r.num_states << ',' << r.constraints << ',' << r.variables
        << ',' << r.build_seconds << ',' << r.solve_seconds << ',' << r.extract_seconds << ',' << r.objective << ','
        << (r.solved ? 1 : 0) << '\n';
  }
}

}  // namespace fairmdp
