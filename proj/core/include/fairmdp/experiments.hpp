#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "fairmdp/cpdrl.hpp"
#include "fairmdp/machine_replacement.hpp"

namespace fairmdp {

/// Parsed experiment file. Unlisted keys keep these defaults:
///   preset exponential-rccc, S=3, p_m=0.8, p_s=1, b=1, gamma=0.95, seeds [0..4],
///   M=1000, T=300, 10 random-policy runs.
struct ExperimentSpec {
  std::string id;
  MachineReplacementConfig instance;
  std::string preset = "exponential-rccc";
  std::vector<int> machines;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  int eval_trajectories = 1000;
  int eval_horizon = 300;
  int random_runs = 10;
  double weights_factor = 2.0;
  /// Resource ratio b/N for e3; budget is ignored when positive.
  double resource_ratio = 0.0;
  /// Largest N whose GGF-LP is solved (e1, e2, e4); larger ones are only built.
  int max_solve_n = 5;
  /// e3: N of the checkpoint transferred to the larger instances.
  int transfer_from = 10;
  TrainConfig train;

  void validate() const;
};

ExperimentSpec experiment_spec_from_json(const std::string& id, const nlohmann::json& doc);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Each run writes <out>/<id>.csv (plus side files noted below) and returns its path.
/// Every row carries the instance metadata needed to regenerate the instance.
std::filesystem::path run_e1(const ExperimentSpec& spec, const std::filesystem::path& out_dir);
std::filesystem::path run_e2(const ExperimentSpec& spec, const std::filesystem::path& out_dir);
/// Also writes e3_fit.csv with the time-vs-N regression.
std::filesystem::path run_e3(const ExperimentSpec& spec, const std::filesystem::path& out_dir);
std::filesystem::path run_e4(const ExperimentSpec& spec, const std::filesystem::path& out_dir);

std::filesystem::path run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir);

}  // namespace fairmdp
