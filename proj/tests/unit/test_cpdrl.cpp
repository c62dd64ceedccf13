#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "fairmdp/cpdrl.hpp"
#include "fairmdp/machine_replacement.hpp"
#include "oracles.hpp"

using namespace fairmdp;

namespace {

WcmdpSpec machines(int n, double budget = 1.0) {
  MachineReplacementConfig cfg;
  cfg.num_machines = n;
  cfg.budget = budget;
  return build_instance(cfg);
}

PolicyNet make_net(std::uint64_t seed, int hidden = 16) {
  PolicyNet net(3, 2, 1, hidden);
  Rng rng = make_stream(seed, 0);
  net.initialize(rng, 0.1);
  // move away from the near-uniform start so gradients are informative
  for (double& t : net.mlp().parameters()) t += 0.3 * standard_normal(rng);
  return net;
}

std::vector<PolicySample> rollout_samples(const PolicyNet& net, const WcmdpSpec& spec, int count, Rng& rng) {
  std::vector<PolicySample> batch;
  for (int i = 0; i < count; ++i) {
    CountState x{std::vector<int>(3, 0)};
    for (int n = 0; n < spec.num_submdps(); ++n) x.counts[rng() % 3] += 1;
    const auto r = act(net, x, spec, 0.1, rng);
    PolicySample s;
    s.input = policy_input(x, spec);
    s.state = x;
    s.trace = r.trace;
    s.resource = r.resource;
    s.budgets = {spec.budgets().begin(), spec.budgets().end()};
    s.consumption = spec.shared_consumption();
    s.old_logprob = r.logprob + 0.05 * standard_normal(rng);
    s.advantage = standard_normal(rng);
    s.target = uniform01(rng) * 10;
    batch.push_back(std::move(s));
  }
  return batch;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST(PolicyNet, Shapes) {
  const PolicyNet net(3, 2, 1);
  EXPECT_EQ(net.input_width(), 4);
  EXPECT_EQ(net.output_width(), 7);
  EXPECT_EQ(net.mlp().hidden(), 64);
}

TEST(PolicyNet, ZeroWeightsGiveEqualPriorities) {
  PolicyNet net(3, 2, 1, 8);
  for (double& t : net.mlp().parameters()) t = 0.0;
  const auto f = net.forward(Eigen::VectorXd::Constant(4, 0.25));
  for (double u : f.output.priorities) EXPECT_EQ(u, f.output.priorities[0]);
  EXPECT_GT(f.output.priorities[0], 0.0);
  EXPECT_LE(f.output.priorities[0], 1.0);
}

TEST(PolicyNet, InitUsesFullBudgetAndPositivePriorities) {
  const auto spec = machines(3);
  PolicyNet net(3, 2, 1);
  Rng rng = make_stream(91, 0);
  net.initialize(rng, 0.1);
  const auto a = net.forward(policy_input(CountState{{3, 0, 0}}, spec));
  const auto b = net.forward(policy_input(CountState{{0, 1, 2}}, spec));
  EXPECT_EQ(a.output.resource_use[0], 1.0);
  EXPECT_NE(a.output.priorities, b.output.priorities);
  for (double u : b.output.priorities) EXPECT_GE(u, kPriorityFloor);
}

TEST(PolicyInput, Proportions) {
  const auto spec = machines(4, 1.0);
  const auto in = policy_input(CountState{{2, 1, 1}}, spec);
  EXPECT_DOUBLE_EQ(in(0), 0.5);
  EXPECT_DOUBLE_EQ(in(1), 0.25);
  EXPECT_DOUBLE_EQ(in(3), 0.25);
  EXPECT_DOUBLE_EQ(policy_input(CountState{{2, 1, 1}}, machines(4, 9.0))(3), 1.0);
}

TEST(ClippedGaussian, DensityAndDerivative) {
  const double sd = 0.1;
  EXPECT_NEAR(clipped_gaussian_logpdf(0.5, 0.5, sd), -std::log(sd * std::sqrt(2 * std::numbers::pi)), 1e-12);
  EXPECT_NEAR(clipped_gaussian_logpdf(1.0, 1.0, sd), std::log(0.5), 1e-12);
  EXPECT_NEAR(clipped_gaussian_logpdf(0.0, 0.0, sd), std::log(0.5), 1e-12);
  EXPECT_TRUE(std::isfinite(clipped_gaussian_logpdf(0.0, 3.0, sd)));
  for (double value : {0.0, 0.3, 1.0})
    for (double mean : {-0.2, 0.4, 1.1}) {
      double d = 0.0;
      clipped_gaussian_logpdf(value, mean, sd, &d);
      const double h = 1e-6;
      const double fd = (clipped_gaussian_logpdf(value, mean + h, sd) - clipped_gaussian_logpdf(value, mean - h, sd)) / (2 * h);
      EXPECT_LT(relative_error(d, fd), 1e-6);
    }
}

TEST(Act, ZeroBudgetIsIdle) {
  const auto spec = machines(4, 0.0);
  const auto net = make_net(92);
  Rng rng = make_stream(92, 1);
  for (int i = 0; i < 200; ++i) {
    const auto r = act(net, CountState{{1, 2, 1}}, spec, 0.1, rng);
    EXPECT_EQ(r.trace.action.counts, (std::vector<int>{1, 0, 2, 0, 1, 0}));
  }
}

TEST(Act, LogprobBoundedAndReplayable) {
  const auto spec = machines(5, 2.0);
  const auto net = make_net(93);
  Rng rng = make_stream(93, 1);
  const double bound = -std::log(0.1 * std::sqrt(2 * std::numbers::pi));
  const auto batch = rollout_samples(net, spec, 10000, rng);
  Rng replay = make_stream(93, 1);
  for (const auto& s : batch) {
    ASSERT_TRUE(std::isfinite(s.old_logprob));
    const double lp = policy_logprob(net, s, 0.1);
    EXPECT_LE(lp, bound + 1e-12);
  }
}

TEST(Act, FirstReplayRatioIsOne) {
  const auto spec = machines(4, 1.0);
  const auto net = make_net(94);
  Rng rng = make_stream(94, 1);
  for (int i = 0; i < 100; ++i) {
    const CountState x{{2, 1, 1}};
    const auto r = act(net, x, spec, 0.1, rng);
    PolicySample s{policy_input(x, spec), x, r.trace, r.resource, {1.0}, spec.shared_consumption()};
    EXPECT_EQ(policy_logprob(net, s, 0.1), r.logprob);
  }
}

TEST(Act, Deterministic) {
  const auto spec = machines(4, 1.0);
  const auto net = make_net(95);
  Rng a = make_stream(7, 7), b = make_stream(7, 7);
  for (int i = 0; i < 50; ++i) {
    const auto ra = act(net, CountState{{1, 1, 2}}, spec, 0.1, a);
    const auto rb = act(net, CountState{{1, 1, 2}}, spec, 0.1, b);
    EXPECT_EQ(ra.trace.action, rb.trace.action);
    EXPECT_EQ(ra.logprob, rb.logprob);
  }
}

TEST(Gradients, ActorLossMatchesFiniteDifferences) {
  const auto spec = machines(4, 2.0);
  auto net = make_net(96);
  Rng rng = make_stream(96, 1);
  const auto batch = rollout_samples(net, spec, 16, rng);
  std::vector<double> grad;
  actor_loss(net, batch, 0.2, 0.1, &grad);
  auto theta = net.mlp().parameters();
  for (int probe = 0; probe < 10; ++probe) {
    const std::size_t j = rng() % theta.size();
    const double saved = theta[j], h = 1e-6;
    theta[j] = saved + h;
    const double up = actor_loss(net, batch, 0.2, 0.1);
    theta[j] = saved - h;
    const double down = actor_loss(net, batch, 0.2, 0.1);
    theta[j] = saved;
    const double fd = (up - down) / (2 * h);
    EXPECT_LT(relative_error(grad[j], fd), 1e-4) << j << " " << grad[j] << " " << fd;
  }
}

TEST(Gradients, CriticLossMatchesFiniteDifferences) {
  const auto spec = machines(4, 2.0);
  const auto net = make_net(97);
  CriticNet critic(4, 16);
  Rng rng = make_stream(97, 1);
  critic.initialize(rng);
  const auto batch = rollout_samples(net, spec, 16, rng);
  std::vector<double> grad;
  critic_loss(critic, batch, &grad);
  auto theta = critic.mlp().parameters();
  for (int probe = 0; probe < 10; ++probe) {
    const std::size_t j = rng() % theta.size();
    const double saved = theta[j], h = 1e-6;
    theta[j] = saved + h;
    const double up = critic_loss(critic, batch);
    theta[j] = saved - h;
    const double down = critic_loss(critic, batch);
    theta[j] = saved;
    EXPECT_LT(relative_error(grad[j], (up - down) / (2 * h)), 1e-4);
  }
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Mlp mlp(3, 5, 4);
  Rng rng = make_stream(98, 0);
  mlp.initialize(rng, 1.0);
  for (double& t : mlp.parameters()) t += 0.1 * standard_normal(rng);
  Eigen::VectorXd x(3), dy(4);
  x << 0.2, -0.5, 0.9;
  dy << 1.0, -2.0, 0.5, 0.25;
  Mlp::Cache cache;
  mlp.forward(x, &cache);
  std::vector<double> grad(mlp.num_parameters(), 0.0);
  mlp.backward(cache, dy, grad);
  auto theta = mlp.parameters();
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double saved = theta[j], h = 1e-6;
    theta[j] = saved + h;
    const double up = dy.dot(mlp.forward(x));
    theta[j] = saved - h;
    const double down = dy.dot(mlp.forward(x));
    theta[j] = saved;
    EXPECT_NEAR(grad[j], (up - down) / (2 * h), 1e-7);
  }
}

TEST(Mlp, OrthogonalInit) {
  Mlp mlp(6, 6, 2);
  Rng rng = make_stream(99, 0);
  mlp.initialize(rng, 1.0);
  const Eigen::Map<const Eigen::MatrixXd> w1(mlp.parameters().data(), 6, 6);
  EXPECT_TRUE((w1.transpose() * w1).isApprox(2.0 * Eigen::MatrixXd::Identity(6, 6), 1e-10));
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  Adam adam(3, 0.01);
  std::vector<double> theta{1.0, 1.0, 1.0};
  const std::vector<double> grad{2.0, -0.5, 0.0};
  adam.step(theta, grad);
  EXPECT_NEAR(theta[0], 0.99, 1e-9);
  EXPECT_NEAR(theta[1], 1.01, 1e-9);
  EXPECT_EQ(theta[2], 1.0);
}

TEST(Adam, ClipGradNorm) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(std::hypot(g[0], g[1]), 1.0, 1e-15);
  std::vector<double> small{0.1, 0.0};
  clip_grad_norm(small, 1.0);
  EXPECT_EQ(small[0], 0.1);
}

TEST(TrainConfig, ValidationAndJson) {
  TrainConfig cfg;
  cfg.episodes = 12;
  cfg.multitask = {{2, 1.0}, {5, 1.0}};
  const auto back = train_config_from_json(train_config_to_json(cfg));
  EXPECT_EQ(back.episodes, 12);
  EXPECT_EQ(back.multitask, cfg.multitask);
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](auto& c) { c.actor_lr = 0; }, [](auto& c) { c.clip_ratio = 1.0; }, [](auto& c) { c.episodes = 0; },
           [](auto& c) { c.critic_lr = -1; }}) {
    TrainConfig bad;
    mutate(bad);
    EXPECT_THROW(bad.validate(), Error);
  }
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  Checkpoint ckpt;
  ckpt.actor = make_net(100);
  ckpt.critic = CriticNet(4, 16);
  Rng rng = make_stream(100, 1);
  ckpt.critic.initialize(rng);
  ckpt.config.hidden = 16;
  ckpt.instance = {{"num_machines", 3}};
  const auto path = std::filesystem::temp_directory_path() / "fairmdp_ckpt_test.json";
  save_checkpoint(path, ckpt);
  const auto back = load_checkpoint(path);
  std::filesystem::remove(path);
  const auto spec = machines(3);
  for (const auto& x : enumerate_count_states(3, 3)) {
    const auto in = policy_input(x, spec);
    const auto a = ckpt.actor.forward(in), b = back.actor.forward(in);
    for (int i = 0; i < 7; ++i) EXPECT_EQ(a.raw(i), b.raw(i));
    EXPECT_EQ(ckpt.critic.value(in), back.critic.value(in));
  }
  EXPECT_EQ(back.instance.at("num_machines"), 3);
  EXPECT_THROW(checkpoint_from_json(nlohmann::json{{"format", "other"}}), Error);
}

TEST(Train, SmokeAndReproducible) {
  const auto spec = machines(3);
  TrainConfig cfg;
  cfg.episodes = 6;
  cfg.steps_per_episode = 20;
  cfg.hidden = 16;
  cfg.eval_every = 3;
  cfg.eval_trajectories = 10;
  cfg.eval_horizon = 50;
  const auto a = train(spec, cfg);
  const auto b = train(spec, cfg);
  ASSERT_EQ(a.curve.size(), 3u);
  EXPECT_EQ(a.curve[0].episode, 0);
  EXPECT_EQ(a.episode_seconds.size(), 6u);
  const auto pa = a.checkpoint.actor.mlp().parameters(), pb = b.checkpoint.actor.mlp().parameters();
  EXPECT_TRUE(std::equal(pa.begin(), pa.end(), pb.begin()));
  std::ostringstream out;
  write_curve_csv(out, a.curve);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "episode,eval_ggf,stderr");
}

TEST(Train, MultitaskCheckpointServesEveryN) {
  const auto spec = machines(3);
  TrainConfig cfg;
  cfg.episodes = 4;
  cfg.steps_per_episode = 20;
  cfg.hidden = 16;
  cfg.eval_every = 100;
  cfg.eval_trajectories = 5;
  cfg.eval_horizon = 20;
  cfg.multitask = {{2, 1.0}, {3, 1.0}, {4, 1.0}, {5, 1.0}};
  const auto result = train(spec, cfg);
  for (int n = 2; n <= 5; ++n) {
    const auto target = spec.resized(n, {1.0});
    EvalConfig ec;
    ec.num_trajectories = 5;
    ec.horizon = 20;
    const auto report = evaluate_count_policy(cpdrl_count_policy(result.checkpoint.actor, target), target, ec);
    EXPECT_TRUE(std::isfinite(report.ggf_score));
    EXPECT_GT(report.ggf_score, 0.0);
  }
}
