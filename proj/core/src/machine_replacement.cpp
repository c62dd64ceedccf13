#include "fairmdp/machine_replacement.hpp"

#include <algorithm>
#include <cmath>

#include "fairmdp/error.hpp"

namespace fairmdp {

std::string_view to_string(OperateCostKind kind) {
  switch (kind) {
    case OperateCostKind::kLinear: return "linear";
    case OperateCostKind::kQuadratic: return "quadratic";
    case OperateCostKind::kExponential: return "exponential";
    case OperateCostKind::kRandom: return "random";
  }
  return "unknown";
}

std::string_view to_string(ReplaceCostKind kind) {
  switch (kind) {
    case ReplaceCostKind::kRccc: return "rccc";
  }
  return "unknown";
}

OperateCostKind parse_operate_cost_kind(std::string_view name) {
  for (auto k : {OperateCostKind::kLinear, OperateCostKind::kQuadratic, OperateCostKind::kExponential,
                 OperateCostKind::kRandom})
    if (to_string(k) == name) return k;
  fail(ErrorCode::kConfigInvalid, "unknown operate cost kind: " + std::string(name));
}

ReplaceCostKind parse_replace_cost_kind(std::string_view name) {
  if (name == "rccc") return ReplaceCostKind::kRccc;
  fail(ErrorCode::kConfigInvalid, "unknown replace cost kind: " + std::string(name));
}

void MachineReplacementConfig::validate() const {
  require(num_machines >= 1, ErrorCode::kConfigInvalid, "need at least one machine");
  require(num_states >= 2, ErrorCode::kConfigInvalid, "need at least two states");
  require(stay_prob >= 0.0 && stay_prob <= 1.0, ErrorCode::kConfigInvalid, "stay_prob must lie in [0,1]");
  require(reset_success >= 0.0 && reset_success <= 1.0, ErrorCode::kConfigInvalid,
          "reset_success must lie in [0,1]");
  require(budget >= 0.0 && std::isfinite(budget), ErrorCode::kConfigInvalid, "budget must be nonnegative");
  require(discount >= 0.0 && discount < 1.0, ErrorCode::kConfigInvalid, "discount must lie in [0,1)");
}

MachineReplacementConfig machine_replacement_preset(std::string_view name) {
  MachineReplacementConfig cfg;
  if (name == "exponential-rccc") {
    cfg.operate_cost = OperateCostKind::kExponential;
  } else if (name == "quadratic-rccc") {
    cfg.operate_cost = OperateCostKind::kQuadratic;
  } else {
    fail(ErrorCode::kConfigInvalid, "unknown preset: " + std::string(name));
  }
  cfg.replace_cost = ReplaceCostKind::kRccc;
  return cfg;
}

double operate_cost(int s, OperateCostKind kind, int num_states, Rng* rng) {
  require(s >= 0 && s < num_states, ErrorCode::kConfigInvalid, "state index out of range");
  switch (kind) {
    case OperateCostKind::kLinear: return s;
    case OperateCostKind::kQuadratic: return static_cast<double>(s) * s;
    case OperateCostKind::kExponential: return std::exp(static_cast<double>(s));
    case OperateCostKind::kRandom:
      require(rng != nullptr, ErrorCode::kConfigInvalid, "random costs need a generator");
      return uniform01(*rng);
  }
  fail(ErrorCode::kConfigInvalid, "bad operate cost kind");
}

double replace_cost_rccc(int num_states) {
  require(num_states >= 2, ErrorCode::kConfigInvalid, "need at least two states");
  const double span = num_states - 1;
  return 1.5 * span * span;
}

std::vector<double> machine_costs(const MachineReplacementConfig& cfg) {
  cfg.validate();
  const int S = cfg.num_states;
  Rng rng = make_stream(cfg.seed, 0);
  std::vector<double> c(static_cast<std::size_t>(S) * 2);
  const double replace = replace_cost_rccc(S);
  for (int s = 0; s < S; ++s) {
    c[s * 2 + 0] = operate_cost(s, cfg.operate_cost, S, &rng);
    c[s * 2 + 1] = replace;
  }
  return c;
}

SubMdp build_machine(const MachineReplacementConfig& cfg) {
  const int S = cfg.num_states;
  const auto costs = machine_costs(cfg);
  const double cmax = *std::max_element(costs.begin(), costs.end());
  std::vector<double> reward(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) reward[i] = cmax > 0.0 ? 1.0 - costs[i] / cmax : 1.0;

  std::vector<double> p(static_cast<std::size_t>(S) * 2 * S, 0.0);
  auto at = [&](int s, int a, int t) -> double& { return p[(static_cast<std::size_t>(s) * 2 + a) * S + t]; };
  for (int s = 0; s < S; ++s) {
    if (s + 1 < S) {
      at(s, 0, s) = cfg.stay_prob;
      at(s, 0, s + 1) = 1.0 - cfg.stay_prob;
    } else {
      at(s, 0, s) = 1.0;
    }
    for (int t = 0; t < S; ++t) at(s, 1, t) = (1.0 - cfg.reset_success) * at(s, 0, t);
    at(s, 1, 0) += cfg.reset_success;
  }
  std::vector<double> mu(S, 1.0 / S);
  return SubMdp(S, 2, std::move(p), std::move(reward), std::move(mu));
}

WcmdpSpec build_instance(const MachineReplacementConfig& cfg) {
  const SubMdp machine = build_machine(cfg);
  const std::vector<double> d{0.0, 1.0};
  return WcmdpSpec::replicated(machine, cfg.num_machines, d, {cfg.budget}, cfg.discount);
}

nlohmann::json config_to_json(const MachineReplacementConfig& cfg) {
  return {{"num_machines", cfg.num_machines},
          {"num_states", cfg.num_states},
          {"stay_prob", cfg.stay_prob},
          {"reset_success", cfg.reset_success},
          {"operate_cost", std::string(to_string(cfg.operate_cost))},
          {"replace_cost", std::string(to_string(cfg.replace_cost))},
          {"budget", cfg.budget},
          {"discount", cfg.discount},
          {"seed", cfg.seed}};
}

MachineReplacementConfig config_from_json(const nlohmann::json& doc) {
  MachineReplacementConfig cfg;
  if (doc.contains("preset")) cfg = machine_replacement_preset(doc["preset"].get<std::string>());
  cfg.num_machines = doc.value("num_machines", cfg.num_machines);
  cfg.num_states = doc.value("num_states", cfg.num_states);
  cfg.stay_prob = doc.value("stay_prob", cfg.stay_prob);
  cfg.reset_success = doc.value("reset_success", cfg.reset_success);
  if (doc.contains("operate_cost")) cfg.operate_cost = parse_operate_cost_kind(doc["operate_cost"].get<std::string>());
  if (doc.contains("replace_cost")) cfg.replace_cost = parse_replace_cost_kind(doc["replace_cost"].get<std::string>());
  cfg.budget = doc.value("budget", cfg.budget);
  cfg.discount = doc.value("discount", cfg.discount);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

}  // namespace fairmdp
