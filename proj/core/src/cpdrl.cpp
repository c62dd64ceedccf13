#include "fairmdp/cpdrl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "fairmdp/error.hpp"

namespace fairmdp {
namespace {

using nlohmann::json;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_normal_pdf(double t) { return -0.5 * t * t - 0.5 * std::log(2.0 * std::numbers::pi); }

double log_normal_cdf(double t) {
  if (t > -30.0) return std::log(0.5 * std::erfc(-t / std::numbers::sqrt2));
  const double t2 = t * t;
  return log_normal_pdf(t) - std::log(-t) + std::log1p(-1.0 / t2 + 3.0 / (t2 * t2));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

CountState sample_initial(const WcmdpSpec& spec, Rng& rng) {
  CountState x{std::vector<int>(spec.num_states(), 0)};
  const auto mu = spec.sub_mdp(0).initial_dist();
  for (int n = 0; n < spec.num_submdps(); ++n) x.counts[sample_categorical(rng, mu)] += 1;
  return x;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void TrainConfig::validate() const {
  require(episodes >= 1 && steps_per_episode >= 1, ErrorCode::kConfigInvalid, "episodes and steps must be positive");
  require(actor_lr > 0.0 && critic_lr > 0.0, ErrorCode::kConfigInvalid, "learning rates must be positive");
  require(clip_ratio > 0.0 && clip_ratio < 1.0, ErrorCode::kConfigInvalid, "clip ratio must lie in (0,1)");
  require(discount >= 0.0 && discount < 1.0, ErrorCode::kConfigInvalid, "discount must lie in [0,1)");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, ErrorCode::kConfigInvalid, "gae_lambda must lie in [0,1]");
  require(epochs >= 1 && minibatches >= 1, ErrorCode::kConfigInvalid, "epochs and minibatches must be positive");
  require(minibatches <= steps_per_episode, ErrorCode::kConfigInvalid, "more minibatches than samples");
  require(resource_stddev > 0.0, ErrorCode::kConfigInvalid, "resource stddev must be positive");
  require(max_grad_norm > 0.0 && hidden >= 1, ErrorCode::kConfigInvalid, "bad grad-norm or hidden width");
  require(eval_every >= 1 && eval_trajectories >= 1 && eval_horizon >= 1, ErrorCode::kConfigInvalid,
          "evaluation settings must be positive");
  for (const auto& [n, b] : multitask)
    require(n >= 1 && b >= 0.0, ErrorCode::kConfigInvalid, "multitask entries need N >= 1 and b >= 0");
}

json train_config_to_json(const TrainConfig& cfg) {
  json mt = json::array();
  for (const auto& [n, b] : cfg.multitask) mt.push_back({{"N", n}, {"budget", b}});
  return {{"episodes", cfg.episodes},
          {"steps_per_episode", cfg.steps_per_episode},
          {"actor_lr", cfg.actor_lr},
          {"critic_lr", cfg.critic_lr},
          {"clip_ratio", cfg.clip_ratio},
          {"discount", cfg.discount},
          {"gae_lambda", cfg.gae_lambda},
          {"epochs", cfg.epochs},
          {"minibatches", cfg.minibatches},
          {"resource_stddev", cfg.resource_stddev},
          {"max_grad_norm", cfg.max_grad_norm},
          {"hidden", cfg.hidden},
          {"seed", cfg.seed},
          {"eval_every", cfg.eval_every},
          {"eval_trajectories", cfg.eval_trajectories},
          {"eval_horizon", cfg.eval_horizon},
          {"multitask", mt}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig cfg;
  cfg.episodes = doc.value("episodes", cfg.episodes);
  cfg.steps_per_episode = doc.value("steps_per_episode", cfg.steps_per_episode);
  cfg.actor_lr = doc.value("actor_lr", cfg.actor_lr);
  cfg.critic_lr = doc.value("critic_lr", cfg.critic_lr);
  cfg.clip_ratio = doc.value("clip_ratio", cfg.clip_ratio);
  cfg.discount = doc.value("discount", cfg.discount);
  cfg.gae_lambda = doc.value("gae_lambda", cfg.gae_lambda);
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.minibatches = doc.value("minibatches", cfg.minibatches);
  cfg.resource_stddev = doc.value("resource_stddev", cfg.resource_stddev);
  cfg.max_grad_norm = doc.value("max_grad_norm", cfg.max_grad_norm);
  cfg.hidden = doc.value("hidden", cfg.hidden);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.eval_every = doc.value("eval_every", cfg.eval_every);
  cfg.eval_trajectories = doc.value("eval_trajectories", cfg.eval_trajectories);
  cfg.eval_horizon = doc.value("eval_horizon", cfg.eval_horizon);
  if (doc.contains("multitask"))
    for (const auto& e : doc["multitask"]) cfg.multitask.emplace_back(e.at("N").get<int>(), e.at("budget").get<double>());
  cfg.validate();
  return cfg;
}

Eigen::VectorXd policy_input(const CountState& x, const WcmdpSpec& spec) {
  const int S = spec.num_states();
  const int K = spec.num_resources();
  const int N = x.total();
  require(x.size() == S, ErrorCode::kLengthMismatch, "count state does not match the instance");
  Eigen::VectorXd in(S + K);
  for (int s = 0; s < S; ++s) in(s) = N > 0 ? static_cast<double>(x[s]) / N : 0.0;
  for (int k = 0; k < K; ++k) {
    double dmax = 0.0;
    for (int a = 0; a < spec.num_actions(); ++a) dmax = std::max(dmax, spec.consumption(k, 0, a));
    const double denom = N * dmax;
    in(S + k) = denom > 0.0 ? std::min(spec.budget(k) / denom, 1.0) : 0.0;
  }
  return in;
}

double clipped_gaussian_logpdf(double value, double mean, double stddev, double* dmean) {
  if (value <= 0.0 || value >= 1.0) {
    const double t = value <= 0.0 ? -mean / stddev : (mean - 1.0) / stddev;
    const double lp = log_normal_cdf(t);
    if (dmean) {
      const double mills = std::exp(log_normal_pdf(t) - lp);
      *dmean = (value <= 0.0 ? -mills : mills) / stddev;
    }
    return lp;
  }
  const double z = (value - mean) / stddev;
  if (dmean) *dmean = z / stddev;
  return log_normal_pdf(z) - std::log(stddev);
}

PolicyNet::PolicyNet(int num_states, int num_actions, int num_resources, int hidden)
    : num_states_(num_states),
      num_actions_(num_actions),
      num_resources_(num_resources),
      mlp_(num_states + num_resources, hidden, num_states * num_actions + num_resources) {}

void PolicyNet::initialize(Rng& rng, double resource_stddev) {
  mlp_.initialize(rng, 0.01);
  auto theta = mlp_.parameters();
  const std::size_t bias = mlp_.output_bias_offset();
  for (int k = 0; k < num_resources_; ++k)
    theta[bias + static_cast<std::size_t>(num_states_) * num_actions_ + k] = 1.0 + 2.5 * resource_stddev;
}

PolicyNet::Forward PolicyNet::forward(const Eigen::VectorXd& input) const {
  Forward f;
  f.raw = mlp_.forward(input, &f.cache);
  f.output.num_states = num_states_;
  f.output.num_actions = num_actions_;
  const int sa = num_states_ * num_actions_;
  f.output.priorities.resize(sa);
  for (int i = 0; i < sa; ++i) f.output.priorities[i] = kPriorityFloor + (1.0 - kPriorityFloor) * sigmoid(f.raw(i));
  f.output.resource_use.resize(num_resources_);
  for (int k = 0; k < num_resources_; ++k) f.output.resource_use[k] = std::clamp(f.raw(sa + k), 0.0, 1.0);
  return f;
}

CriticNet::CriticNet(int input_width, int hidden) : mlp_(input_width, hidden, 1) {}

void CriticNet::initialize(Rng& rng) { mlp_.initialize(rng, 1.0); }

double CriticNet::value(const Eigen::VectorXd& input, Mlp::Cache* cache) const {
  return mlp_.forward(input, cache)(0);
}

ActResult act(const PolicyNet& net, const CountState& x, const WcmdpSpec& spec, double resource_stddev, Rng& rng) {
  const auto input = policy_input(x, spec);
  auto f = net.forward(input);
  const int sa = net.num_states() * net.num_actions();
  ActResult r;
  double density = 0.0;
  for (int k = 0; k < net.num_resources(); ++k) {
    const double mean = f.raw(sa + k);
    double p = std::clamp(mean, 0.0, 1.0);
    if (resource_stddev > 0.0) {
      p = std::clamp(mean + resource_stddev * standard_normal(rng), 0.0, 1.0);
      density += clipped_gaussian_logpdf(p, mean, resource_stddev);
    }
    f.output.resource_use[k] = p;
  }
  const auto consumption = spec.shared_consumption();
  r.trace = sample_count_action(x, f.output, spec.budgets(), consumption, rng);
  r.resource = f.output.resource_use;
  r.logprob = r.trace.logprob + density;
  return r;
}

double policy_logprob(const PolicyNet& net, const PolicySample& sample, double resource_stddev,
                      Eigen::VectorXd* dlogp, Mlp::Cache* cache) {
  Mlp::Cache local;
  Mlp::Cache& c = cache ? *cache : local;
  const Eigen::VectorXd raw = net.mlp().forward(sample.input, &c);
  const int sa = net.num_states() * net.num_actions();
  PolicyOutput out;
  out.num_states = net.num_states();
  out.num_actions = net.num_actions();
  out.priorities.resize(sa);
  std::vector<double> sig(sa);
  for (int i = 0; i < sa; ++i) {
    sig[i] = sigmoid(raw(i));
    out.priorities[i] = kPriorityFloor + (1.0 - kPriorityFloor) * sig[i];
  }
  out.resource_use = sample.resource;
  std::vector<double> grad_u;
  double lp = logprob_of(sample.state, out, sample.budgets, sample.consumption, sample.trace,
                         dlogp ? &grad_u : nullptr);
  if (dlogp) dlogp->setZero(raw.size());
  for (int i = 0; i < sa && dlogp; ++i) (*dlogp)(i) = grad_u[i] * (1.0 - kPriorityFloor) * sig[i] * (1.0 - sig[i]);
  for (int k = 0; k < net.num_resources(); ++k) {
    double dm = 0.0;
    lp += clipped_gaussian_logpdf(sample.resource[k], raw(sa + k), resource_stddev, dlogp ? &dm : nullptr);
    if (dlogp) (*dlogp)(sa + k) = dm;
  }
  return lp;
}

double actor_loss(const PolicyNet& net, std::span<const PolicySample> batch, double clip_ratio,
                  double resource_stddev, std::vector<double>* grad) {
  if (grad) grad->assign(net.mlp().num_parameters(), 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  Mlp::Cache cache;
  Eigen::VectorXd dlogp;
  for (const auto& s : batch) {
    const double lp = policy_logprob(net, s, resource_stddev, grad ? &dlogp : nullptr, &cache);
    const double ratio = std::exp(lp - s.old_logprob);
    const double unclipped = ratio * s.advantage;
    const double clipped = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * s.advantage;
    const bool use_unclipped = unclipped <= clipped;
    loss -= (use_unclipped ? unclipped : clipped) * inv;
    if (grad && use_unclipped) {
      const Eigen::VectorXd dy = (-unclipped * inv) * dlogp;
      net.mlp().backward(cache, dy, *grad);
    }
  }
  return loss;
}

double critic_loss(const CriticNet& net, std::span<const PolicySample> batch, std::vector<double>* grad) {
  if (grad) grad->assign(net.mlp().num_parameters(), 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  Mlp::Cache cache;
  Eigen::VectorXd dy(1);
  for (const auto& s : batch) {
    const double v = net.value(s.input, &cache);
    const double diff = v - s.target;
    loss += 0.5 * diff * diff * inv;
    if (grad) {
      dy(0) = diff * inv;
      net.mlp().backward(cache, dy, *grad);
    }
  }
  return loss;
}

CountPolicyFn cpdrl_count_policy(const PolicyNet& net, const WcmdpSpec& spec) {
  auto owned_net = std::make_shared<PolicyNet>(net);
  auto owned_spec = std::make_shared<WcmdpSpec>(spec);
  return [owned_net, owned_spec](const CountState& x, Rng& rng) {
    return act(*owned_net, x, *owned_spec, 0.0, rng).trace.action;
  };
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  const auto actor = ckpt.actor.mlp().parameters();
  const auto critic = ckpt.critic.mlp().parameters();
  return {{"format", "fairmdp-cpdrl"},
          {"version", 1},
          {"num_states", ckpt.actor.num_states()},
          {"num_actions", ckpt.actor.num_actions()},
          {"num_resources", ckpt.actor.num_resources()},
          {"hidden", ckpt.actor.mlp().hidden()},
          {"actor_shapes", {ckpt.actor.mlp().inputs(), ckpt.actor.mlp().hidden(), ckpt.actor.mlp().hidden(),
                            ckpt.actor.mlp().outputs()}},
          {"critic_shapes", {ckpt.critic.mlp().inputs(), ckpt.critic.mlp().hidden(), ckpt.critic.mlp().hidden(),
                             ckpt.critic.mlp().outputs()}},
          {"actor", std::vector<double>(actor.begin(), actor.end())},
          {"critic", std::vector<double>(critic.begin(), critic.end())},
          {"config", train_config_to_json(ckpt.config)},
          {"instance", ckpt.instance}};
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    require(doc.at("format").get<std::string>() == "fairmdp-cpdrl", ErrorCode::kParseError,
            "not a CP-DRL checkpoint");
    require(doc.at("version").get<int>() == 1, ErrorCode::kParseError, "unsupported checkpoint version");
    const int S = doc.at("num_states").get<int>();
    const int A = doc.at("num_actions").get<int>();
    const int K = doc.at("num_resources").get<int>();
    const int H = doc.at("hidden").get<int>();
    Checkpoint ckpt;
    ckpt.actor = PolicyNet(S, A, K, H);
    ckpt.critic = CriticNet(S + K, H);
    const auto actor = doc.at("actor").get<std::vector<double>>();
    const auto critic = doc.at("critic").get<std::vector<double>>();
    require(actor.size() == ckpt.actor.mlp().num_parameters() && critic.size() == ckpt.critic.mlp().num_parameters(),
            ErrorCode::kParseError, "checkpoint parameter count does not match its shapes");
    std::copy(actor.begin(), actor.end(), ckpt.actor.mlp().parameters().begin());
    std::copy(critic.begin(), critic.end(), ckpt.critic.mlp().parameters().begin());
    ckpt.config = train_config_from_json(doc.at("config"));
    ckpt.instance = doc.value("instance", json::object());
    return ckpt;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("checkpoint JSON: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << checkpoint_to_json(ckpt).dump() << '\n';
  require(static_cast<bool>(out), ErrorCode::kIoError, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

TrainResult train(const WcmdpSpec& spec, const TrainConfig& cfg, const json& instance_metadata) {
  cfg.validate();
  require(is_symmetric(spec), ErrorCode::kNotSymmetric, "CP-DRL training needs a symmetric instance");
  const int S = spec.num_states();
  const int A = spec.num_actions();
  const int K = spec.num_resources();

  std::vector<WcmdpSpec> tasks;
  if (cfg.multitask.empty()) {
    tasks.push_back(spec);
  } else {
    for (const auto& [n, b] : cfg.multitask) tasks.push_back(spec.resized(n, std::vector<double>(K, b)));
  }

  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  ckpt.config = cfg;
  ckpt.instance = instance_metadata;
  ckpt.actor = PolicyNet(S, A, K, cfg.hidden);
  ckpt.critic = CriticNet(S + K, cfg.hidden);
  Rng init_rng = make_stream(cfg.seed, 0);
  ckpt.actor.initialize(init_rng, cfg.resource_stddev);
  ckpt.critic.initialize(init_rng);
  PolicyNet& actor = ckpt.actor;
  CriticNet& critic = ckpt.critic;

  Adam actor_opt(actor.mlp().num_parameters(), cfg.actor_lr, 0.9, 0.999, 1e-5);
  Adam critic_opt(critic.mlp().num_parameters(), cfg.critic_lr, 0.9, 0.999, 1e-5);
  Rng task_rng = make_stream(cfg.seed, 1);
  Rng shuffle_rng = make_stream(cfg.seed, 2);
  const std::uint64_t eval_seed = mix64(cfg.seed ^ 0x5eed5eedULL);

  EvalConfig eval_cfg;
  eval_cfg.num_trajectories = cfg.eval_trajectories;
  eval_cfg.horizon = cfg.eval_horizon;
  eval_cfg.discount = spec.discount();
  eval_cfg.seed = eval_seed;

  std::size_t task = 0;
  std::vector<PolicySample> samples(cfg.steps_per_episode);
  std::vector<double> rewards(cfg.steps_per_episode), values(cfg.steps_per_episode + 1);
  std::vector<int> order(cfg.steps_per_episode);
  std::vector<double> grad;

  auto evaluate_point = [&](int episode) {
    const auto report = evaluate_count_policy(cpdrl_count_policy(actor, spec), spec, eval_cfg);
    result.curve.push_back({episode, report.ggf_score, report.std_error});
  };
  evaluate_point(0);

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const auto start = std::chrono::steady_clock::now();
    const WcmdpSpec& env = tasks[task];
    const auto consumption = env.shared_consumption();
    const std::vector<double> budgets(env.budgets().begin(), env.budgets().end());
    Rng rng = make_stream(cfg.seed, 1000 + static_cast<std::uint64_t>(ep));
    CountState x = sample_initial(env, rng);

    for (int t = 0; t < cfg.steps_per_episode; ++t) {
      PolicySample& s = samples[t];
      s.input = policy_input(x, env);
      s.state = x;
      values[t] = critic.value(s.input);
      auto r = act(actor, x, env, cfg.resource_stddev, rng);
      s.trace = std::move(r.trace);
      s.resource = std::move(r.resource);
      s.old_logprob = r.logprob;
      s.budgets = budgets;
      s.consumption = consumption;
      auto [next, reward] = step_count(x, s.trace.action, env.sub_mdp(0), rng);
      rewards[t] = reward;
      x = std::move(next);
    }
    values[cfg.steps_per_episode] = critic.value(policy_input(x, env));

    double gae = 0.0;
    for (int t = cfg.steps_per_episode - 1; t >= 0; --t) {
      const double delta = rewards[t] + cfg.discount * values[t + 1] - values[t];
      gae = delta + cfg.discount * cfg.gae_lambda * gae;
      samples[t].advantage = gae;
      samples[t].target = gae + values[t];
    }
    double mean = 0.0, var = 0.0;
    for (const auto& s : samples) mean += s.advantage;
    mean /= cfg.steps_per_episode;
    for (const auto& s : samples) var += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(var / cfg.steps_per_episode) + 1e-8;
    for (auto& s : samples) s.advantage = (s.advantage - mean) / sd;

    std::iota(order.begin(), order.end(), 0);
    const int mb_size = cfg.steps_per_episode / cfg.minibatches;
    std::vector<PolicySample> batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (int mb = 0; mb < cfg.minibatches; ++mb) {
        const int lo = mb * mb_size;
        const int hi = mb + 1 == cfg.minibatches ? cfg.steps_per_episode : lo + mb_size;
        batch.clear();
        for (int i = lo; i < hi; ++i) batch.push_back(samples[order[i]]);

        const double la = actor_loss(actor, batch, cfg.clip_ratio, cfg.resource_stddev, &grad);
        if (!std::isfinite(la) || !all_finite(grad))
          fail(ErrorCode::kNonFiniteLoss, "actor loss not finite at episode " + std::to_string(ep) +
                                              " epoch " + std::to_string(epoch) + " (loss " + std::to_string(la) + ")");
        clip_grad_norm(grad, cfg.max_grad_norm);
        actor_opt.step(actor.mlp().parameters(), grad);

        const double lc = critic_loss(critic, batch, &grad);
        if (!std::isfinite(lc) || !all_finite(grad))
          fail(ErrorCode::kNonFiniteLoss, "critic loss not finite at episode " + std::to_string(ep) +
                                              " epoch " + std::to_string(epoch) + " (loss " + std::to_string(lc) + ")");
        clip_grad_norm(grad, cfg.max_grad_norm);
        critic_opt.step(critic.mlp().parameters(), grad);
      }
    }
    result.episode_seconds.push_back(seconds_since(start));

    if ((ep + 1) % cfg.eval_every == 0) evaluate_point(ep + 1);
    if (tasks.size() > 1) task = std::uniform_int_distribution<std::size_t>(0, tasks.size() - 1)(task_rng);
  }
  return result;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "episode,eval_ggf,stderr\n";
  for (const auto& p : curve) out << p.episode << ',' << p.eval_ggf << ',' << p.std_error << '\n';
}

}  // namespace fairmdp
