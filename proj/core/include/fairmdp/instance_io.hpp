#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "fairmdp/count_mdp.hpp"
#include "fairmdp/model.hpp"

namespace fairmdp {

struct InstanceFile {
  WcmdpSpec spec;
  nlohmann::json metadata;
};

/// Symmetric specs are written with shared tables (transition[s][a][s'], reward[s][a],
/// consumption[k][a], initial[s]); otherwise every table gains a leading n axis
/// (consumption becomes [k][n][a]).
nlohmann::json instance_to_json(const WcmdpSpec& spec, const nlohmann::json& metadata = nlohmann::json::object());

/// Rows whose sum drifts from 1 by less than 1e-9 are renormalized; larger drift is a
/// ParseError.
InstanceFile instance_from_json(const nlohmann::json& doc);

void save_instance(const std::filesystem::path& path, const WcmdpSpec& spec,
                   const nlohmann::json& metadata = nlohmann::json::object());
InstanceFile load_instance(const std::filesystem::path& path);

/// Debug dump of an aggregated model in the same envelope.
nlohmann::json count_model_to_json(const CountModel& count);

}  // namespace fairmdp
