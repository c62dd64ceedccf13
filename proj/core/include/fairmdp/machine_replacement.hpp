#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "fairmdp/model.hpp"
#include "fairmdp/rng.hpp"

namespace fairmdp {

enum class OperateCostKind { kLinear, kQuadratic, kExponential, kRandom };
enum class ReplaceCostKind { kRccc };

std::string_view to_string(OperateCostKind kind);
std::string_view to_string(ReplaceCostKind kind);
OperateCostKind parse_operate_cost_kind(std::string_view name);
ReplaceCostKind parse_replace_cost_kind(std::string_view name);

/// Action 0 operates (passive, free), action 1 replaces (consumes one unit).
struct MachineReplacementConfig {
  int num_machines = 3;
  int num_states = 3;
  double stay_prob = 0.8;
  double reset_success = 1.0;
  OperateCostKind operate_cost = OperateCostKind::kExponential;
  ReplaceCostKind replace_cost = ReplaceCostKind::kRccc;
  double budget = 1.0;
  double discount = 0.95;
  std::uint64_t seed = 0;

  void validate() const;
};

/// "exponential-rccc" or "quadratic-rccc"; other fields keep their defaults.
MachineReplacementConfig machine_replacement_preset(std::string_view name);

/// Cost of operating in state index s (0-based, so the best state costs 0 for the
/// polynomial kinds). kRandom draws U[0,1) from rng.
double operate_cost(int s, OperateCostKind kind, int num_states, Rng* rng = nullptr);

/// 1.5 (S-1)^2.
double replace_cost_rccc(int num_states);

/// Raw cost table c[s*2 + a] before normalization.
std::vector<double> machine_costs(const MachineReplacementConfig& cfg);

/// The single-machine MDP with rewards 1 - c / max c.
SubMdp build_machine(const MachineReplacementConfig& cfg);

WcmdpSpec build_instance(const MachineReplacementConfig& cfg);

nlohmann::json config_to_json(const MachineReplacementConfig& cfg);
MachineReplacementConfig config_from_json(const nlohmann::json& doc);

}  // namespace fairmdp
