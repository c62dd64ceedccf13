#include "fairmdp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fairmdp/baselines.hpp"
#include "fairmdp/error.hpp"
#include "fairmdp/occupancy.hpp"
#include "fairmdp/simulate.hpp"

namespace fairmdp {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string canonical_id(const std::string& id) {
  for (const char* name : {"e1", "e2", "e3", "e4"})
    if (id == name || id.rfind(std::string(name) + "-", 0) == 0) return name;
  fail(ErrorCode::kConfigInvalid, "unknown experiment id: " + id);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out.precision(10);
  return out;
}

MachineReplacementConfig instance_for(const ExperimentSpec& spec, int n, double budget) {
  MachineReplacementConfig cfg = spec.instance;
  cfg.num_machines = n;
  cfg.budget = budget;
  return cfg;
}

double budget_for(const ExperimentSpec& spec, int n) {
  return spec.resource_ratio > 0.0 ? spec.resource_ratio * n : spec.instance.budget;
}

std::string metadata_columns() { return "preset,stay_prob,reset_success,operate_cost,instance_seed"; }

std::string metadata_values(const ExperimentSpec& spec) {
  std::ostringstream os;
  os.precision(10);
  os << spec.preset << ',' << spec.instance.stay_prob << ',' << spec.instance.reset_success << ','
     << to_string(spec.instance.operate_cost) << ',' << spec.instance.seed;
  return os.str();
}

EvalConfig eval_config(const ExperimentSpec& spec, std::uint64_t seed) {
  EvalConfig cfg;
  cfg.num_trajectories = spec.eval_trajectories;
  cfg.horizon = spec.eval_horizon;
  cfg.discount = spec.instance.discount;
  cfg.seed = seed;
  cfg.weights_factor = spec.weights_factor;
  return cfg;
}

struct PolicyRow {
  std::string policy;
  int n;
  double budget;
  long long seed;
  double ggf;
  double std_error;
  double seconds;
};

void write_policy_rows(std::ostream& out, const std::string& id, const ExperimentSpec& spec,
                       const std::vector<PolicyRow>& rows) {
  out << "experiment,policy,N,budget,seed,ggf,stderr,seconds," << metadata_columns() << '\n';
  for (const auto& r : rows)
    out << id << ',' << r.policy << ',' << r.n << ',' << r.budget << ',' << r.seed << ',' << r.ggf << ','
        << r.std_error << ',' << r.seconds << ',' << metadata_values(spec) << '\n';
}

/// OPT, WIP and RDM rows for one instance.
void baseline_rows(const ExperimentSpec& spec, const WcmdpSpec& inst, std::vector<PolicyRow>& rows) {
  const int n = inst.num_submdps();
  const double b = inst.budget(0);
  if (n <= spec.max_solve_n) {
    const auto start = Clock::now();
    const auto sol = solve_ggf_lp(expand_joint(inst), make_exponential_weights(n, spec.weights_factor));
    rows.push_back({"OPT", n, b, -1, sol.objective_value, 0.0, seconds_since(start)});
  }
  const auto table = whittle_indices(inst.sub_mdp(0), inst.discount(), 1e-6);
  for (auto seed : spec.seeds) {
    const auto start = Clock::now();
    const auto rep = evaluate_joint_policy(wip_joint_policy(table, b), inst, eval_config(spec, mix64(seed + 101)));
    rows.push_back({"WIP", n, b, static_cast<long long>(seed), rep.ggf_score, rep.std_error, seconds_since(start)});
  }
  const auto start = Clock::now();
  double total = 0.0, var = 0.0;
  for (int run = 0; run < spec.random_runs; ++run) {
    const auto rep = evaluate_joint_policy(random_joint_policy(inst), inst,
                                           eval_config(spec, mix64(0xabcdefULL + static_cast<std::uint64_t>(run))));
    total += rep.ggf_score;
    var += rep.std_error * rep.std_error;
  }
  const double runs = spec.random_runs;
  rows.push_back({"RDM", n, b, -1, total / runs, std::sqrt(var) / runs, seconds_since(start)});
}

}  // namespace

void ExperimentSpec::validate() const {
  require(!seeds.empty(), ErrorCode::kConfigInvalid, "seeds must be non-empty");
  require(!machines.empty(), ErrorCode::kConfigInvalid, "machines must be non-empty");
  for (int n : machines) require(n >= 1, ErrorCode::kConfigInvalid, "machine counts must be positive");
  require(eval_trajectories >= 1 && eval_horizon >= 1 && random_runs >= 1, ErrorCode::kConfigInvalid,
          "evaluation settings must be positive");
  require(weights_factor > 1.0, ErrorCode::kConfigInvalid, "weights_factor must exceed 1");
  instance.validate();
  train.validate();
}

ExperimentSpec experiment_spec_from_json(const std::string& id, const json& doc) {
  ExperimentSpec spec;
  spec.id = canonical_id(id);
  try {
    spec.preset = doc.value("preset", spec.preset);
    json inst = doc.value("instance", json::object());
    if (!inst.contains("preset")) inst["preset"] = spec.preset;
    spec.instance = config_from_json(inst);
    if (spec.id == "e1") spec.machines = {3, 4, 5};
    if (spec.id == "e2") {
      spec.machines = {2, 3, 4, 5};
      spec.train.episodes = 2000;
    }
    if (spec.id == "e3") {
      spec.machines = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
      spec.resource_ratio = 0.1;
    }
    if (spec.id == "e4") spec.machines = {2, 3, 4, 5, 6, 7};
    if (doc.contains("machines")) spec.machines = doc["machines"].get<std::vector<int>>();
    if (doc.contains("seeds")) spec.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    spec.eval_trajectories = doc.value("eval_trajectories", spec.eval_trajectories);
    spec.eval_horizon = doc.value("eval_horizon", spec.eval_horizon);
    spec.random_runs = doc.value("random_runs", spec.random_runs);
    spec.weights_factor = doc.value("weights_factor", spec.weights_factor);
    spec.resource_ratio = doc.value("resource_ratio", spec.resource_ratio);
    spec.max_solve_n = doc.value("max_solve_n", spec.max_solve_n);
    spec.transfer_from = doc.value("transfer_from", spec.transfer_from);
    if (doc.contains("train")) {
      json t = train_config_to_json(spec.train);
      t.update(doc["train"]);
      spec.train = train_config_from_json(t);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("experiment config: ") + e.what());
  }
  spec.validate();
  return spec;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::kLengthMismatch, "fit needs two or more paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorCode::kConfigInvalid, "fit needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::filesystem::path run_e1(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  std::vector<PolicyRow> rows;
  for (int n : spec.machines) {
    const double b = budget_for(spec, n);
    const auto cfg = instance_for(spec, n, b);
    const auto inst = build_instance(cfg);
    baseline_rows(spec, inst, rows);
    for (auto seed : spec.seeds) {
      TrainConfig tc = spec.train;
      tc.seed = seed;
      const auto start = Clock::now();
      const auto trained = train(inst, tc, config_to_json(cfg));
      const auto rep = evaluate_count_policy(cpdrl_count_policy(trained.checkpoint.actor, inst), inst,
                                             eval_config(spec, mix64(seed + 202)));
      rows.push_back({"CPDRL", n, b, static_cast<long long>(seed), rep.ggf_score, rep.std_error, seconds_since(start)});
    }
  }
  const auto path = out_dir / "e1.csv";
  auto out = open_csv(path);
  write_policy_rows(out, "e1", spec, rows);
  return path;
}

std::filesystem::path run_e2(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  std::vector<PolicyRow> rows;
  const auto base_cfg = instance_for(spec, spec.machines.front(), budget_for(spec, spec.machines.front()));
  const auto base = build_instance(base_cfg);
  std::vector<Checkpoint> checkpoints;
  std::vector<double> train_seconds;
  for (auto seed : spec.seeds) {
    TrainConfig tc = spec.train;
    tc.seed = seed;
    tc.multitask.clear();
    for (int n : spec.machines) tc.multitask.emplace_back(n, budget_for(spec, n));
    const auto start = Clock::now();
    checkpoints.push_back(train(base, tc, config_to_json(base_cfg)).checkpoint);
    train_seconds.push_back(seconds_since(start));
  }
  for (int n : spec.machines) {
    const auto inst = build_instance(instance_for(spec, n, budget_for(spec, n)));
    baseline_rows(spec, inst, rows);
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
      const auto rep = evaluate_count_policy(cpdrl_count_policy(checkpoints[i].actor, inst), inst,
                                             eval_config(spec, mix64(spec.seeds[i] + 202)));
      rows.push_back({"CPDRL-MT", n, inst.budget(0), static_cast<long long>(spec.seeds[i]), rep.ggf_score,
                      rep.std_error, train_seconds[i]});
    }
  }
  const auto path = out_dir / "e2.csv";
  auto out = open_csv(path);
  write_policy_rows(out, "e2", spec, rows);
  return path;
}

std::filesystem::path run_e3(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  const auto path = out_dir / "e3.csv";
  auto out = open_csv(path);
  out << "experiment,kind,N,budget,seed,mean_episode_seconds,median_episode_seconds,ggf,stderr,"
      << metadata_columns() << '\n';
  auto fit_out = open_csv(out_dir / "e3_fit.csv");
  fit_out << "seed,slope,intercept,r_squared\n";

  for (auto seed : spec.seeds) {
    TrainConfig tc = spec.train;
    tc.seed = seed;
    tc.multitask.clear();
    std::vector<double> ns, medians;
    for (int n : spec.machines) {
      const auto cfg = instance_for(spec, n, budget_for(spec, n));
      const auto inst = build_instance(cfg);
      const auto trained = train(inst, tc, config_to_json(cfg));
      auto times = trained.episode_seconds;
      const double mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
      std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
      const double median = times[times.size() / 2];
      const auto rep = evaluate_count_policy(cpdrl_count_policy(trained.checkpoint.actor, inst), inst,
                                             eval_config(spec, mix64(seed + 202)));
      out << "e3,train," << n << ',' << inst.budget(0) << ',' << seed << ',' << mean << ',' << median << ','
          << rep.ggf_score << ',' << rep.std_error << ',' << metadata_values(spec) << '\n';
      ns.push_back(n);
      medians.push_back(median);
    }
    if (ns.size() >= 2) {
      const auto fit = fit_line(ns, medians);
      fit_out << seed << ',' << fit.slope << ',' << fit.intercept << ',' << fit.r_squared << '\n';
    }

    const auto src_cfg = instance_for(spec, spec.transfer_from, budget_for(spec, spec.transfer_from));
    const auto source = train(build_instance(src_cfg), tc, config_to_json(src_cfg));
    for (int n : spec.machines) {
      const auto inst = build_instance(instance_for(spec, n, budget_for(spec, n)));
      const auto rep = evaluate_count_policy(cpdrl_count_policy(source.checkpoint.actor, inst), inst,
                                             eval_config(spec, mix64(seed + 303)));
      out << "e3,transfer-from-" << spec.transfer_from << ',' << n << ',' << inst.budget(0) << ',' << seed
          << ",0,0," << rep.ggf_score << ',' << rep.std_error << ',' << metadata_values(spec) << '\n';
    }
  }
  return path;
}

std::filesystem::path run_e4(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  const auto path = out_dir / "e4.csv";
  auto out = open_csv(path);
  out << "experiment,model,N,S,constraints,variables,build_seconds,solve_seconds,extract_seconds,objective,solved,"
      << metadata_columns() << '\n';
  auto emit = [&](const LpStatsRow& r) {
    out << "e4," << r.model << ',' << r.num_submdps << ',' << r.num_states << ',' << r.constraints << ','
        << r.variables << ',' << r.build_seconds << ',' << r.solve_seconds << ',' << r.extract_seconds << ','
        << r.objective << ',' << (r.solved ? 1 : 0) << ',' << metadata_values(spec) << '\n';
    out.flush();
  };
  for (int n : spec.machines) {
    const auto inst = build_instance(instance_for(spec, n, budget_for(spec, n)));
    {
      LpStatsRow row{"ggf-lp", n, inst.num_states()};
      auto start = Clock::now();
      const auto joint = expand_joint(inst);
      const auto weights = make_exponential_weights(n, spec.weights_factor);
      const auto lp = build_ggf_lp(joint, weights);
      row.build_seconds = seconds_since(start);
      row.constraints = lp.num_constraints();
      row.variables = lp.num_variables();
      if (n <= spec.max_solve_n) {
        start = Clock::now();
        const auto sol = solve_lp(lp);
        row.solve_seconds = seconds_since(start);
        start = Clock::now();
        const std::vector<double> q(sol.x.begin() + 2 * n, sol.x.end());
        const auto policy = extract_joint_policy(q, joint);
        row.extract_seconds = seconds_since(start);
        row.objective = sol.objective;
        row.solved = policy.num_states() == joint.num_states();
      }
      emit(row);
    }
    {
      LpStatsRow row{"count-dual-lp", n, inst.num_states()};
      auto start = Clock::now();
      const auto count = build_count_model(inst);
      const auto lp = build_count_dual_lp(count, inst.discount());
      row.build_seconds = seconds_since(start);
      row.constraints = lp.num_constraints();
      row.variables = lp.num_variables();
      start = Clock::now();
      const auto sol = solve_lp(lp);
      row.solve_seconds = seconds_since(start);
      start = Clock::now();
      const auto policy = extract_count_policy(sol.x, count);
      row.extract_seconds = seconds_since(start);
      row.objective = sol.objective;
      row.solved = policy.num_states() == count.num_states();
      emit(row);
    }
  }
  return path;
}

std::filesystem::path run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.id == "e1") return run_e1(spec, out_dir);
  if (spec.id == "e2") return run_e2(spec, out_dir);
  if (spec.id == "e3") return run_e3(spec, out_dir);
  if (spec.id == "e4") return run_e4(spec, out_dir);
  fail(ErrorCode::kConfigInvalid, "unknown experiment id: " + spec.id);
}

}  // namespace fairmdp
