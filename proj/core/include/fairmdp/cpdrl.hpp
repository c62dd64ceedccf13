#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <span>
#include <utility>
#include <vector>

#include "fairmdp/count_mdp.hpp"
#include "fairmdp/cp_sampler.hpp"
#include "fairmdp/mlp.hpp"
#include "fairmdp/model.hpp"
#include "fairmdp/rng.hpp"
#include "fairmdp/simulate.hpp"

namespace fairmdp {

inline constexpr double kPriorityFloor = 1e-6;

struct TrainConfig {
  int episodes = 800;
  int steps_per_episode = 100;
  double actor_lr = 5e-4;
  double critic_lr = 3e-4;
  double clip_ratio = 0.2;
  double discount = 0.95;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatches = 4;
  double resource_stddev = 0.1;
  double max_grad_norm = 0.5;
  int hidden = 64;
  std::uint64_t seed = 0;
  /// Curve points before training and every eval_every episodes, each from eval_trajectories rollouts.
  int eval_every = 10;
  int eval_trajectories = 100;
  int eval_horizon = 300;
  /// (N, budget) pairs; when non-empty the task switches uniformly at random after
  /// every episode.
  std::vector<std::pair<int, double>> multitask;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc);

/// x/N followed by b_k / (N max_a d_k(a)).
Eigen::VectorXd policy_input(const CountState& x, const WcmdpSpec& spec);

/// Clipped Gaussian: value = clamp(mean + stddev*xi, 0, 1). Point masses at the bounds.
/// Writes d logpdf / d mean when dmean is non-null.
double clipped_gaussian_logpdf(double value, double mean, double stddev, double* dmean = nullptr);

/// Actor: (S+K) -> hidden -> hidden -> S*A priority logits and K resource means.
class PolicyNet {
 public:
  struct Forward {
    PolicyOutput output;  // resource_use holds the clamped (noise-free) means
    Eigen::VectorXd raw;
    Mlp::Cache cache;
  };

  PolicyNet() = default;
  PolicyNet(int num_states, int num_actions, int num_resources, int hidden = 64);

  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  int num_resources() const noexcept { return num_resources_; }
  int input_width() const noexcept { return num_states_ + num_resources_; }
  int output_width() const noexcept { return num_states_ * num_actions_ + num_resources_; }

  /// Orthogonal init; resource-head biases start at 1 + 2.5 stddev so the initial
  /// policy uses the full budget.
  void initialize(Rng& rng, double resource_stddev);

  Forward forward(const Eigen::VectorXd& input) const;

  Mlp& mlp() noexcept { return mlp_; }
  const Mlp& mlp() const noexcept { return mlp_; }

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  int num_resources_ = 0;
  Mlp mlp_;
};

class CriticNet {
 public:
  CriticNet() = default;
  CriticNet(int input_width, int hidden = 64);

  void initialize(Rng& rng);
  double value(const Eigen::VectorXd& input, Mlp::Cache* cache = nullptr) const;

  Mlp& mlp() noexcept { return mlp_; }
  const Mlp& mlp() const noexcept { return mlp_; }

 private:
  Mlp mlp_;
};

/// One stored decision; budgets and consumption are kept so multitask samples replay
/// against their own instance.
struct PolicySample {
  Eigen::VectorXd input;
  CountState state;
  SampleTrace trace;
  std::vector<double> resource;
  std::vector<double> budgets;
  std::vector<double> consumption;
  double old_logprob = 0.0;
  double advantage = 0.0;
  double target = 0.0;
};

struct ActResult {
  SampleTrace trace;
  std::vector<double> resource;
  double logprob = 0.0;
};

/// Draws p from the clipped Gaussian (stddev 0 gives the clamped mean) and runs the
/// priority sampler; logprob includes the resource density.
ActResult act(const PolicyNet& net, const CountState& x, const WcmdpSpec& spec, double resource_stddev, Rng& rng);

/// log pi(trace, p | x) under net; dlogp receives d/d(network outputs) when non-null.
double policy_logprob(const PolicyNet& net, const PolicySample& sample, double resource_stddev,
                      Eigen::VectorXd* dlogp = nullptr, Mlp::Cache* cache = nullptr);

/// Mean clipped-surrogate loss -min(rho A, clip(rho) A); grad gets d/dtheta.
double actor_loss(const PolicyNet& net, std::span<const PolicySample> batch, double clip_ratio,
                  double resource_stddev, std::vector<double>* grad = nullptr);

/// Mean 0.5 (V - target)^2.
double critic_loss(const CriticNet& net, std::span<const PolicySample> batch, std::vector<double>* grad = nullptr);

/// Deterministic-budget stochastic count policy for evaluation.
CountPolicyFn cpdrl_count_policy(const PolicyNet& net, const WcmdpSpec& spec);

struct Checkpoint {
  PolicyNet actor;
  CriticNet critic;
  TrainConfig config;
  nlohmann::json instance = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

struct CurvePoint {
  int episode = 0;
  double eval_ggf = 0.0;
  double std_error = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<CurvePoint> curve;
  /// Rollout plus update time of each episode (evaluation excluded).
  std::vector<double> episode_seconds;
};

/// Clipped policy-gradient training on one symmetric instance, or on the multitask
/// list derived from it via WcmdpSpec::resized.
TrainResult train(const WcmdpSpec& spec, const TrainConfig& cfg,
                  const nlohmann::json& instance_metadata = nlohmann::json::object());

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);

}  // namespace fairmdp
