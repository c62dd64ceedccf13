#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "fairmdp/baselines.hpp"
#include "fairmdp/count_mdp.hpp"
#include "fairmdp/cp_sampler.hpp"
#include "fairmdp/cpdrl.hpp"
#include "fairmdp/experiments.hpp"
#include "fairmdp/machine_replacement.hpp"
#include "fairmdp/occupancy.hpp"
#include "fairmdp/simulate.hpp"
#include "frozen_values.hpp"
#include "oracles.hpp"

using namespace fairmdp;

namespace {

// Tolerances and sizes, pinned.
constexpr double kWeightInvarianceTol = 1e-6;
constexpr double kReductionTol = 1e-6;
constexpr double kAggregateTol = 1e-10;
constexpr double kInitialTol = 1e-12;
constexpr double kMcRelTol = 0.02;
constexpr double kTruncationBound = 1e-5;
constexpr long kSamplerCalls = 1'000'000;
constexpr double kWhittleGridStep = 1e-4;
constexpr double kWhittleTol = 2e-4;
constexpr long kWipSteps = 100'000;
constexpr int kLearnEpisodes = 800;
constexpr double kLearnSigmas = 5.0;
constexpr double kLearnGapFraction = 0.9;
constexpr int kLearnSeedsRequired = 3;
constexpr double kGradientTol = 1e-4;
constexpr int kGradientProbeSize = 10;
constexpr double kScalingR2 = 0.95;
constexpr int kScalingRounds = 40;
constexpr int kScalingEpisodesPerRound = 5;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

WcmdpSpec machines(int n, double budget = 1.0) {
  MachineReplacementConfig cfg;
  cfg.num_machines = n;
  cfg.budget = budget;
  return build_instance(cfg);
}

EvalConfig eval_config(std::uint64_t seed) {
  EvalConfig cfg;
  cfg.num_trajectories = 1000;
  cfg.horizon = 300;
  cfg.discount = 0.95;
  cfg.seed = seed;
  return cfg;
}

Outcome weight_invariance() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = make_stream(1000 + seed, 0);
    const auto spec = oracle::random_symmetric_spec(3, 3, 1.0, 0.95, rng, seed % 2 == 1);
    const auto joint = expand_joint(spec);
    const double util = solve_ggf_lp(joint, utilitarian_weights(3)).objective_value;
    const double expo = solve_ggf_lp(joint, make_exponential_weights(3, 2.0)).objective_value;
    const double rand = solve_ggf_lp(joint, oracle::random_weights(3, rng)).objective_value;
    worst = std::max({worst, std::abs(util - expo), std::abs(util - rand), std::abs(expo - rand)});
  }
  o.pass = worst <= kWeightInvarianceTol;
  o.detail = fmt("max spread across weights %.3e", worst);
  return o;
}

Outcome reduction_consistency() {
  Outcome o;
  double worst = 0.0;
  for (int n = 2; n <= 4; ++n) {
    Rng rng = make_stream(2000 + n, 0);
    for (const auto& spec : {machines(n), oracle::random_symmetric_spec(n, 3, 1.0, 0.95, rng, false)}) {
      const double count = solve_count_dual_lp(build_count_model(spec)).objective_value;
      const auto joint = solve_ggf_lp(expand_joint(spec), utilitarian_weights(n));
      const double mean =
          std::accumulate(joint.value_vector.begin(), joint.value_vector.end(), 0.0) / static_cast<double>(n);
      worst = std::max({worst, std::abs(count - mean), std::abs(count - joint.objective_value)});
    }
  }
  o.pass = worst <= kReductionTol;
  o.detail = fmt("max |count - mean value| %.3e", worst);
  return o;
}

Outcome model_sizes() {
  Outcome o;
  std::string detail;
  for (const auto& row : frozen::kGgfLpSizes) {
    if (row.n > 4) continue;
    const auto lp = build_ggf_lp(expand_joint(machines(row.n)), make_exponential_weights(row.n, 2.0));
    const bool ok = lp.num_constraints() == row.constraints && lp.num_variables() == row.variables;
    o.pass = o.pass && ok;
    detail += "N=" + std::to_string(row.n) + ":" + std::to_string(lp.num_constraints()) + "/" +
              std::to_string(lp.num_variables()) + " ";
  }
  for (const auto& [n, rows] : frozen::kCountDualRows) {
    const int got = build_count_dual_lp(build_count_model(machines(n)), 0.95).num_constraints();
    o.pass = o.pass && got == rows;
    detail += "count N=" + std::to_string(n) + ":" + std::to_string(got) + " ";
  }
  o.detail = detail;
  return o;
}

Outcome aggregation_oracle() {
  Outcome o;
  double worst_p = 0.0, worst_mu = 0.0;
  long pairs = 0;
  Rng rng = make_stream(4000, 0);
  for (const auto& spec : {machines(3), oracle::random_symmetric_spec(3, 3, 1.0, 0.95, rng, false),
                           oracle::random_symmetric_spec(3, 3, 3.0, 0.95, rng, false)}) {
    for (const auto& x : enumerate_count_states(3, 3))
      for (const auto& u : enumerate_feasible_actions(x, spec)) {
        ++pairs;
        auto brute = oracle::aggregate_bruteforce(spec, x, u);
        for (const auto& out : aggregate_transition(x, u, spec)) {
          auto it = brute.find(out.next.counts);
          const double ref = it == brute.end() ? 0.0 : it->second;
          worst_p = std::max(worst_p, std::abs(out.prob - ref));
          if (it != brute.end()) brute.erase(it);
        }
        for (const auto& [next, p] : brute) worst_p = std::max(worst_p, p);
      }
    auto brute_mu = oracle::initial_bruteforce(spec);
    for (const auto& out : initial_count_dist(spec)) {
      worst_mu = std::max(worst_mu, std::abs(out.prob - brute_mu[out.next.counts]));
      brute_mu.erase(out.next.counts);
    }
    for (const auto& [next, p] : brute_mu) worst_mu = std::max(worst_mu, p);
  }
  o.pass = worst_p <= kAggregateTol && worst_mu <= kInitialTol;
  o.detail = std::to_string(pairs) + " (x,u) pairs; " + fmt("max transition error %.3e", worst_p) +
             fmt(", max mu_f error %.3e", worst_mu);
  return o;
}

Outcome mc_consistency() {
  Outcome o;
  const auto spec = machines(2);
  const auto joint = expand_joint(spec);
  const auto w = make_exponential_weights(2, 2.0);
  const auto sol = solve_ggf_lp(joint, w);
  auto cfg = eval_config(5000);
  cfg.weights = w;
  const auto report = evaluate_joint_policy(tabular_joint_policy(sol.policy, joint), spec, cfg);
  const double rel = std::abs(report.ggf_score - sol.objective_value) / std::abs(sol.objective_value);
  double r_max = 0.0;
  for (int s = 0; s < spec.num_states(); ++s)
    for (int a = 0; a < spec.num_actions(); ++a) r_max = std::max(r_max, std::abs(spec.sub_mdp(0).reward(s, a)));
  const double truncation = r_max * std::pow(0.95, 300) / (1 - 0.95);
  o.pass = rel <= kMcRelTol && truncation < kTruncationBound;
  o.detail = fmt("LP %.5f", sol.objective_value) + fmt(" MC %.5f", report.ggf_score) + fmt(" rel %.4f", rel) +
             fmt(" truncation %.2e", truncation);
  return o;
}

Outcome sampler_feasibility() {
  Outcome o;
  Rng rng = make_stream(6000, 0);
  long violations = 0, replay_mismatch = 0, over_iterations = 0;
  for (long call = 0; call < kSamplerCalls; ++call) {
    const int S = 2 + static_cast<int>(rng() % 4), A = 2 + static_cast<int>(rng() % 2);
    const int K = 1 + static_cast<int>(rng() % 2), N = static_cast<int>(rng() % 16);
    CountState x{std::vector<int>(S, 0)};
    for (int n = 0; n < N; ++n) x.counts[rng() % S] += 1;
    PolicyOutput out{S, A, std::vector<double>(S * A), std::vector<double>(K)};
    for (double& u : out.priorities) u = kPriorityFloor + (1 - kPriorityFloor) * uniform01(rng);
    for (double& p : out.resource_use) p = uniform01(rng);
    std::vector<double> b(K), d(K * A, 0.0);
    for (int k = 0; k < K; ++k) {
      b[k] = uniform01(rng) * N;
      for (int a = 1; a < A; ++a) d[k * A + a] = 0.5 * static_cast<double>(rng() % 5);
    }
    const auto trace = sample_count_action(x, out, b, d, rng);
    for (int s = 0; s < S; ++s) violations += trace.action.row_sum(s) != x[s];
    for (int k = 0; k < K; ++k) {
      double used = 0.0;
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) used += d[k * A + a] * trace.action.at(s, a);
      violations += used > b[k] + kBudgetEps;
    }
    over_iterations += trace.iterations > N + S * A;
    replay_mismatch += logprob_of(x, out, b, d, trace) != trace.logprob;
  }
  o.pass = violations == 0 && replay_mismatch == 0 && over_iterations == 0;
  o.detail = std::to_string(kSamplerCalls) + " calls; violations " + std::to_string(violations) +
             ", iteration overruns " + std::to_string(over_iterations) + ", replay mismatches " +
             std::to_string(replay_mismatch);
  return o;
}

Outcome whittle_oracle() {
  Outcome o;
  double worst = 0.0;
  int nonindexable = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MachineReplacementConfig cfg;
    cfg.operate_cost = seed % 2 == 0 ? OperateCostKind::kRandom : OperateCostKind::kExponential;
    cfg.stay_prob = 0.5 + 0.045 * static_cast<double>(seed);
    cfg.reset_success = seed < 5 ? 1.0 : 0.85;
    cfg.seed = seed;
    const auto sub = build_machine(cfg);
    const auto table = whittle_indices(sub, 0.95, 1e-6);
    nonindexable += !table.indexable;
    const auto grid = oracle::whittle_grid(sub, 0.95, kWhittleGridStep);
    for (int s = 0; s < sub.num_states(); ++s)
      worst = std::max(worst, std::isnan(grid[s]) ? INFINITY : std::abs(table.index[s] - grid[s]));
  }
  const auto spec = machines(10, 3.0);
  const auto table = whittle_indices(spec.sub_mdp(0), 0.95, 1e-6);
  const auto policy = wip_joint_policy(table, 3.0);
  Rng rng = make_stream(7000, 0);
  std::vector<int> state(10, 0);
  long budget_violations = 0;
  for (long t = 0; t < kWipSteps; ++t) {
    const auto action = policy(state, rng);
    budget_violations += !spec.is_feasible(action);
    for (int n = 0; n < 10; ++n)
      state[n] = static_cast<int>(sample_categorical(rng, spec.sub_mdp(n).transition_row(state[n], action[n])));
  }
  o.pass = worst <= kWhittleTol && budget_violations == 0;
  o.detail = fmt("max |bisection - grid| %.3e", worst) + "; non-indexable arms " + std::to_string(nonindexable) +
             "; WIP budget violations " + std::to_string(budget_violations) + " in " + std::to_string(kWipSteps) +
             " steps";
  return o;
}

Outcome learning() {
  Outcome o;
  const auto spec = machines(3);
  const auto w = make_exponential_weights(3, 2.0);
  const double opt = solve_ggf_lp(expand_joint(spec), w).objective_value;
  double rdm = 0.0, rdm_var = 0.0;
  for (int run = 0; run < 10; ++run) {
    const auto rep = evaluate_joint_policy(random_joint_policy(spec), spec, eval_config(8100 + run));
    rdm += rep.ggf_score / 10;
    rdm_var += rep.std_error * rep.std_error / 100;
  }
  int beat_all = 0, near_opt = 0;
  std::string detail = fmt("OPT %.4f", opt) + fmt(" RDM %.4f;", rdm);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig cfg;
    cfg.episodes = kLearnEpisodes;
    cfg.seed = seed;
    const auto start = Clock::now();
    const auto trained = train(spec, cfg);
    const double secs = seconds_since(start);
    const auto rep =
        evaluate_count_policy(cpdrl_count_policy(trained.checkpoint.actor, spec), spec, eval_config(8200 + seed));
    const double pooled = std::sqrt(rep.std_error * rep.std_error + rdm_var);
    const double sigmas = (rep.ggf_score - rdm) / pooled;
    const double gap = (rep.ggf_score - rdm) / (opt - rdm);
    beat_all += sigmas >= kLearnSigmas;
    near_opt += gap >= kLearnGapFraction;
    detail += fmt(" seed%.0f:", static_cast<double>(seed)) + fmt("%.4f", rep.ggf_score) + fmt("(gap %.3f,", gap) +
              fmt(" %.1f sigma,", sigmas) + fmt(" %.0fs)", secs);
  }
  o.pass = beat_all == 5 && near_opt >= kLearnSeedsRequired;
  o.detail = detail;
  return o;
}

double probe_error(std::span<double> theta, const std::vector<double>& grad, const std::function<double()>& loss,
                   Rng& rng) {
  std::vector<double> analytic, numeric;
  for (int i = 0; i < kGradientProbeSize; ++i) {
    const std::size_t j = rng() % theta.size();
    const double saved = theta[j], h = 1e-6 * std::max(1.0, std::abs(saved));
    theta[j] = saved + h;
    const double up = loss();
    theta[j] = saved - h;
    const double down = loss();
    theta[j] = saved;
    analytic.push_back(grad[j]);
    numeric.push_back((up - down) / (2 * h));
  }
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (int i = 0; i < kGradientProbeSize; ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nn));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

Outcome gradient_integrity() {
  Outcome o;
  double worst = 0.0;
  int probes = 0;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const int N = 3 + static_cast<int>(trial);
    const auto spec = machines(N, 1.0 + static_cast<double>(trial % 2));
    Rng rng = make_stream(9000 + trial, 0);
    PolicyNet actor(3, 2, 1, 64);
    CriticNet critic(4, 64);
    actor.initialize(rng, 0.1);
    critic.initialize(rng);
    for (double& t : actor.mlp().parameters()) t += 0.2 * standard_normal(rng);
    std::vector<PolicySample> batch;
    for (int i = 0; i < 32; ++i) {
      CountState x{std::vector<int>(3, 0)};
      for (int n = 0; n < N; ++n) x.counts[rng() % 3] += 1;
      const auto r = act(actor, x, spec, 0.1, rng);
      PolicySample s{policy_input(x, spec), x, r.trace, r.resource, {spec.budget(0)}, spec.shared_consumption()};
      s.old_logprob = r.logprob + 0.05 * standard_normal(rng);
      s.advantage = standard_normal(rng);
      s.target = 20 * uniform01(rng);
      batch.push_back(std::move(s));
    }
    std::vector<double> grad;
    actor_loss(actor, batch, 0.2, 0.1, &grad);
    for (int p = 0; p < 4; ++p, ++probes)
      worst = std::max(worst, probe_error(actor.mlp().parameters(), grad,
                                          [&] { return actor_loss(actor, batch, 0.2, 0.1); }, rng));
    critic_loss(critic, batch, &grad);
    for (int p = 0; p < 4; ++p, ++probes)
      worst = std::max(worst, probe_error(critic.mlp().parameters(), grad,
                                          [&] { return critic_loss(critic, batch); }, rng));
  }
  o.pass = worst < kGradientTol;
  o.detail = std::to_string(probes) + " probes of " + std::to_string(kGradientProbeSize) +
             " parameters; max relative error " + fmt("%.3e", worst);
  return o;
}

Outcome scalability() {
  Outcome o;
  const std::vector<int> sizes{10, 20, 40, 80};
  std::vector<std::vector<double>> times(sizes.size());
  for (int round = 0; round < kScalingRounds; ++round)
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      TrainConfig cfg;
      cfg.episodes = kScalingEpisodesPerRound;
      cfg.seed = static_cast<std::uint64_t>(round);
      cfg.eval_every = 1000;
      cfg.eval_trajectories = 1;
      cfg.eval_horizon = 1;
      const auto t = train(machines(sizes[i], 0.1 * sizes[i]), cfg).episode_seconds;
      times[i].insert(times[i].end(), t.begin(), t.end());
    }
  std::vector<double> ns, per_episode;
  std::string detail;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    auto& t = times[i];
    std::sort(t.begin(), t.end());
    ns.push_back(sizes[i]);
    per_episode.push_back(t[t.size() / 10]);
    detail += "N=" + std::to_string(sizes[i]) + fmt(":%.5fs ", per_episode.back());
  }
  const auto fit = fit_line(ns, per_episode);
  o.pass = fit.r_squared >= kScalingR2 && fit.slope > 0.0;
  o.detail = detail + fmt("slope %.3e s/machine", fit.slope) + fmt(" R^2 %.4f", fit.r_squared);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 weight-invariance", weight_invariance},   {"2 reduction-consistency", reduction_consistency},
      {"3 model-sizes", model_sizes},             {"4 aggregation-oracle", aggregation_oracle},
      {"5 mc-consistency", mc_consistency},       {"6 sampler-feasibility", sampler_feasibility},
      {"7 whittle-oracle", whittle_oracle},       {"8 learning", learning},
      {"9 gradient-integrity", gradient_integrity}, {"10 scalability-shape", scalability},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %s [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(start),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
