#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "fairmdp/baselines.hpp"
#include "fairmdp/cpdrl.hpp"
#include "fairmdp/error.hpp"
#include "fairmdp/experiments.hpp"
#include "fairmdp/instance_io.hpp"
#include "fairmdp/machine_replacement.hpp"
#include "fairmdp/occupancy.hpp"
#include "fairmdp/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fairmdp;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out.precision(10);
  return out;
}

json error_report(ErrorCode code, const std::string& message) {
  return {{"status", "error"}, {"code", std::string(to_string(code))}, {"message", message}};
}

/// "2:1,3:1.5" -> {(2,1), (3,1.5)}
std::vector<std::pair<int, double>> parse_multitask(const std::string& text) {
  std::vector<std::pair<int, double>> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto colon = item.find(':');
    require(colon != std::string::npos, ErrorCode::kParseError, "multitask entries look like N:budget, got " + item);
    try {
      out.emplace_back(std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      fail(ErrorCode::kParseError, "bad multitask entry " + item);
    }
  }
  require(!out.empty(), ErrorCode::kParseError, "empty multitask list");
  return out;
}

struct GenerateArgs {
  MachineReplacementConfig cfg;
  std::string preset = "exponential-rccc";
  std::string out;
};

void run_generate(const GenerateArgs& args) {
  auto cfg = machine_replacement_preset(args.preset);
  cfg.num_machines = args.cfg.num_machines;
  cfg.num_states = args.cfg.num_states;
  cfg.stay_prob = args.cfg.stay_prob;
  cfg.reset_success = args.cfg.reset_success;
  cfg.budget = args.cfg.budget;
  cfg.discount = args.cfg.discount;
  cfg.seed = args.cfg.seed;
  json meta = config_to_json(cfg);
  meta["preset"] = args.preset;
  save_instance(args.out, build_instance(cfg), meta);
}

struct WhittleArgs {
  std::string instance;
  double gamma = 0.95;
  double tol = 1e-6;
};

void run_whittle(const WhittleArgs& args) {
  const auto spec = load_instance(args.instance).spec;
  const auto table = whittle_indices(spec.sub_mdp(0), args.gamma, args.tol);
  std::cout.precision(10);
  std::cout << "state,index\n";
  for (std::size_t s = 0; s < table.index.size(); ++s) std::cout << s << ',' << table.index[s] << '\n';
  if (!table.indexable) std::cerr << "warning: arm is not indexable on the validation grid\n";
}

struct EvaluateArgs {
  std::string instance;
  std::string policy = "wip";
  int trajectories = 1000;
  int horizon = 300;
  std::uint64_t seed = 0;
  double weights_factor = 2.0;
  std::string out;
};

void run_evaluate(const EvaluateArgs& args) {
  const auto spec = load_instance(args.instance).spec;
  EvalConfig cfg;
  cfg.num_trajectories = args.trajectories;
  cfg.horizon = args.horizon;
  cfg.discount = spec.discount();
  cfg.seed = args.seed;
  cfg.weights_factor = args.weights_factor;
  EvalReport report;
  std::string name = args.policy;
  if (args.policy == "random") {
    report = evaluate_joint_policy(random_joint_policy(spec), spec, cfg);
  } else if (args.policy == "wip") {
    const auto table = whittle_indices(spec.sub_mdp(0), spec.discount(), 1e-6);
    report = evaluate_joint_policy(wip_joint_policy(table, spec.budget(0)), spec, cfg);
  } else if (args.policy == "lp") {
    const auto joint = expand_joint(spec);
    const auto sol = solve_ggf_lp(joint, cfg.weights_for(spec.num_submdps()));
    report = evaluate_joint_policy(tabular_joint_policy(sol.policy, joint), spec, cfg);
  } else if (args.policy.rfind("cpdrl:", 0) == 0) {
    const auto ckpt = load_checkpoint(args.policy.substr(6));
    report = evaluate_count_policy(cpdrl_count_policy(ckpt.actor, spec), spec, cfg);
    name = "cpdrl";
  } else {
    fail(ErrorCode::kConfigInvalid, "unknown policy " + args.policy);
  }
  if (args.out.empty()) {
    std::cout.precision(10);
    write_eval_csv_header(std::cout);
    write_eval_csv_row(std::cout, name, spec, report);
  } else {
    auto out = open_out(args.out);
    write_eval_csv_header(out);
    write_eval_csv_row(out, name, spec, report);
  }
}

struct TrainArgs {
  std::string instance;
  std::string multitask;
  TrainConfig cfg;
  std::string out;
  std::string curve;
};

void run_train(const TrainArgs& args) {
  const auto file = load_instance(args.instance);
  TrainConfig cfg = args.cfg;
  if (!args.multitask.empty()) cfg.multitask = parse_multitask(args.multitask);
  const auto result = train(file.spec, cfg, instance_to_json(file.spec, file.metadata));
  save_checkpoint(args.out, result.checkpoint);
  if (!args.curve.empty()) {
    auto out = open_out(args.curve);
    write_curve_csv(out, result.curve);
  }
  if (!result.curve.empty())
    std::cout << "final eval_ggf " << result.curve.back().eval_ggf << " +- " << result.curve.back().std_error << '\n';
}

struct SolveArgs {
  std::string instance;
  std::string model = "ggf";
  double weights_factor = 2.0;
  std::string mps;
  std::string stats;
};

void run_solve(const SolveArgs& args) {
  using Clock = std::chrono::steady_clock;
  auto since = [](Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); };
  const auto spec = load_instance(args.instance).spec;
  LpStatsRow row;
  row.model = args.model == "count" ? "count-dual-lp" : "ggf-lp";
  row.num_submdps = spec.num_submdps();
  row.num_states = spec.num_states();
  auto start = Clock::now();
  LinearProgram lp;
  std::optional<JointModel> joint;
  std::optional<CountModel> count;
  if (args.model == "ggf") {
    joint = expand_joint(spec);
    lp = build_ggf_lp(*joint, make_exponential_weights(spec.num_submdps(), args.weights_factor));
  } else if (args.model == "count") {
    count = build_count_model(spec);
    lp = build_count_dual_lp(*count, spec.discount());
  } else {
    fail(ErrorCode::kConfigInvalid, "model must be ggf or count");
  }
  row.build_seconds = since(start);
  row.constraints = lp.num_constraints();
  row.variables = lp.num_variables();
  if (!args.mps.empty()) {
    auto out = open_out(args.mps);
    write_mps(out, lp);
  }
  start = Clock::now();
  const auto sol = solve_lp(lp);
  row.solve_seconds = since(start);
  row.objective = sol.objective;
  start = Clock::now();
  if (joint) {
    const std::vector<double> q(sol.x.begin() + 2 * spec.num_submdps(), sol.x.end());
    extract_joint_policy(q, *joint);
  } else {
    extract_count_policy(sol.x, *count);
  }
  row.extract_seconds = since(start);
  row.solved = true;
  const std::vector<LpStatsRow> rows{row};
  if (args.stats.empty()) {
    std::cout.precision(10);
    write_lp_stats_csv(std::cout, rows);
  } else {
    auto out = open_out(args.stats);
    write_lp_stats_csv(out, rows);
  }
}

struct ExperimentArgs {
  std::string id;
  std::string config;
  std::string out = "results";
};

int run_experiment_cmd(const ExperimentArgs& args) {
  const fs::path out_dir = args.out;
  try {
    json doc = json::object();
    if (!args.config.empty()) {
      std::ifstream in(args.config);
      require(static_cast<bool>(in), ErrorCode::kIoError, "cannot read " + args.config);
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        fail(ErrorCode::kParseError, e.what());
      }
    }
    const auto spec = experiment_spec_from_json(args.id, doc);
    const auto path = run_experiment(spec, out_dir);
    std::cout << json{{"status", "ok"}, {"experiment", spec.id}, {"csv", path.string()}}.dump() << '\n';
    return 0;
  } catch (const Error& e) {
    const auto report = error_report(e.code(), e.what());
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!ec) std::ofstream(out_dir / "error.json") << report.dump(2) << '\n';
    std::cerr << report.dump() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair resource allocation in weakly coupled MDPs"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate-instance", "write a machine-replacement instance");
  g->add_option("--machines", gen.cfg.num_machines)->required();
  g->add_option("--states", gen.cfg.num_states);
  g->add_option("--preset", gen.preset)->check(CLI::IsMember({"exponential-rccc", "quadratic-rccc"}));
  g->add_option("--stay-prob", gen.cfg.stay_prob);
  g->add_option("--reset-success", gen.cfg.reset_success);
  g->add_option("--budget", gen.cfg.budget);
  g->add_option("--discount", gen.cfg.discount);
  g->add_option("--seed", gen.cfg.seed);
  g->add_option("--out", gen.out)->required();

  WhittleArgs wh;
  auto* w = app.add_subcommand("whittle", "print the Whittle index of each state");
  w->add_option("--instance", wh.instance)->required();
  w->add_option("--gamma", wh.gamma);
  w->add_option("--tol", wh.tol);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Monte Carlo evaluation of a policy");
  e->add_option("--instance", ev.instance)->required();
  e->add_option("--policy", ev.policy, "random | wip | lp | cpdrl:CKPT");
  e->add_option("--trajectories", ev.trajectories);
  e->add_option("--horizon", ev.horizon);
  e->add_option("--seed", ev.seed);
  e->add_option("--weights-factor", ev.weights_factor);
  e->add_option("--out", ev.out);

  TrainArgs tr;
  auto* t = app.add_subcommand("train-cpdrl", "train the count-proportion policy");
  t->add_option("--instance", tr.instance)->required();
  t->add_option("--multitask", tr.multitask, "comma-separated N:budget pairs");
  t->add_option("--episodes", tr.cfg.episodes);
  t->add_option("--steps", tr.cfg.steps_per_episode);
  t->add_option("--seed", tr.cfg.seed);
  t->add_option("--eval-every", tr.cfg.eval_every);
  t->add_option("--out", tr.out)->required();
  t->add_option("--curve", tr.curve);

  SolveArgs so;
  auto* s = app.add_subcommand("solve-lp", "build and solve the GGF-LP or the count-dual LP");
  s->add_option("--instance", so.instance)->required();
  s->add_option("--model", so.model)->check(CLI::IsMember({"ggf", "count"}));
  s->add_option("--weights-factor", so.weights_factor);
  s->add_option("--mps", so.mps);
  s->add_option("--stats", so.stats);

  ExperimentArgs ex;
  auto* x = app.add_subcommand("experiment", "run e1, e2, e3 or e4");
  x->add_option("id", ex.id)->required();
  x->add_option("--config", ex.config);
  x->add_option("--out", ex.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) run_generate(gen);
    if (w->parsed()) run_whittle(wh);
    if (e->parsed()) run_evaluate(ev);
    if (t->parsed()) run_train(tr);
    if (s->parsed()) run_solve(so);
    if (x->parsed()) return run_experiment_cmd(ex);
  } catch (const Error& err) {
    std::cerr << error_report(err.code(), err.what()).dump() << '\n';
    return 1;
  }
  return 0;
}
