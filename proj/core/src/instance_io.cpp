#include "fairmdp/instance_io.hpp"

#include <cmath>
#include <fstream>

#include "fairmdp/error.hpp"

namespace fairmdp {
namespace {

using nlohmann::json;

constexpr double kRenormalizeDrift = 1e-9;

void normalize_row(std::vector<double>& values, std::size_t begin, std::size_t len, const std::string& what) {
  double total = 0.0;
  for (std::size_t i = begin; i < begin + len; ++i) {
    require(std::isfinite(values[i]) && values[i] >= 0.0, ErrorCode::kParseError, what + ": bad probability");
    total += values[i];
  }
  require(std::abs(total - 1.0) < kRenormalizeDrift, ErrorCode::kParseError,
          what + ": row sums to " + std::to_string(total));
  for (std::size_t i = begin; i < begin + len; ++i) values[i] /= total;
}

json sub_transition(const SubMdp& m) {
  json t = json::array();
  for (int s = 0; s < m.num_states(); ++s) {
    json per_a = json::array();
    for (int a = 0; a < m.num_actions(); ++a) {
      const auto row = m.transition_row(s, a);
      per_a.push_back(std::vector<double>(row.begin(), row.end()));
    }
    t.push_back(per_a);
  }
  return t;
}

json sub_reward(const SubMdp& m) {
  json r = json::array();
  for (int s = 0; s < m.num_states(); ++s) {
    std::vector<double> row(m.num_actions());
    for (int a = 0; a < m.num_actions(); ++a) row[a] = m.reward(s, a);
    r.push_back(row);
  }
  return r;
}

SubMdp parse_sub(const json& transition, const json& reward, const json& initial, int S, int A) {
  require(transition.is_array() && static_cast<int>(transition.size()) == S, ErrorCode::kParseError,
          "transition must have one entry per state");
  require(reward.is_array() && static_cast<int>(reward.size()) == S, ErrorCode::kParseError,
          "reward must have one entry per state");
  std::vector<double> p(static_cast<std::size_t>(S) * A * S);
  std::vector<double> r(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s) {
    require(static_cast<int>(transition[s].size()) == A && static_cast<int>(reward[s].size()) == A,
            ErrorCode::kParseError, "per-state tables must have one entry per action");
    for (int a = 0; a < A; ++a) {
      const auto& row = transition[s][a];
      require(static_cast<int>(row.size()) == S, ErrorCode::kParseError, "transition row length must equal S");
      const std::size_t base = (static_cast<std::size_t>(s) * A + a) * S;
      for (int t = 0; t < S; ++t) p[base + t] = row[t].get<double>();
      normalize_row(p, base, S, "transition[" + std::to_string(s) + "][" + std::to_string(a) + "]");
      r[static_cast<std::size_t>(s) * A + a] = reward[s][a].get<double>();
    }
  }
  auto mu = initial.get<std::vector<double>>();
  require(static_cast<int>(mu.size()) == S, ErrorCode::kParseError, "initial length must equal S");
  normalize_row(mu, 0, mu.size(), "initial");
  return SubMdp(S, A, std::move(p), std::move(r), std::move(mu));
}

}  // namespace

json instance_to_json(const WcmdpSpec& spec, const json& metadata) {
  const bool symmetric = is_symmetric(spec);
  const int N = spec.num_submdps();
  const int A = spec.num_actions();
  json doc;
  doc["num_submdps"] = N;
  doc["states"] = spec.num_states();
  doc["actions"] = A;
  doc["symmetric"] = symmetric;
  doc["discount"] = spec.discount();
  doc["budgets"] = std::vector<double>(spec.budgets().begin(), spec.budgets().end());
  if (symmetric) {
    const auto& m = spec.sub_mdp(0);
    doc["transition"] = sub_transition(m);
    doc["reward"] = sub_reward(m);
    doc["initial"] = std::vector<double>(m.initial_dist().begin(), m.initial_dist().end());
    json d = json::array();
    for (int k = 0; k < spec.num_resources(); ++k) {
      std::vector<double> row(A);
      for (int a = 0; a < A; ++a) row[a] = spec.consumption(k, 0, a);
      d.push_back(row);
    }
    doc["consumption"] = d;
  } else {
    json t = json::array(), r = json::array(), mu = json::array();
    for (const auto& m : spec.sub_mdps()) {
      t.push_back(sub_transition(m));
      r.push_back(sub_reward(m));
      mu.push_back(std::vector<double>(m.initial_dist().begin(), m.initial_dist().end()));
    }
    doc["transition"] = t;
    doc["reward"] = r;
    doc["initial"] = mu;
    json d = json::array();
    for (int k = 0; k < spec.num_resources(); ++k) {
      json per_n = json::array();
      for (int n = 0; n < N; ++n) {
        std::vector<double> row(A);
        for (int a = 0; a < A; ++a) row[a] = spec.consumption(k, n, a);
        per_n.push_back(row);
      }
      d.push_back(per_n);
    }
    doc["consumption"] = d;
  }
  doc["metadata"] = metadata;
  return doc;
}

InstanceFile instance_from_json(const json& doc) {
  try {
    const int N = doc.at("num_submdps").get<int>();
    const int S = doc.at("states").get<int>();
    const int A = doc.at("actions").get<int>();
    require(N >= 1 && S >= 1 && A >= 1, ErrorCode::kParseError, "dimensions must be positive");
    const bool symmetric = doc.value("symmetric", true);
    const auto budgets = doc.at("budgets").get<std::vector<double>>();
    const double gamma = doc.at("discount").get<double>();
    const auto& cons = doc.at("consumption");
    require(cons.size() == budgets.size(), ErrorCode::kParseError, "consumption must have one entry per resource");
    json metadata = doc.contains("metadata") ? doc["metadata"] : json::object();

    if (symmetric) {
      SubMdp sub = parse_sub(doc.at("transition"), doc.at("reward"), doc.at("initial"), S, A);
      std::vector<double> d;
      for (const auto& row : cons) {
        require(static_cast<int>(row.size()) == A, ErrorCode::kParseError, "consumption row length must equal A");
        for (const auto& v : row) d.push_back(v.get<double>());
      }
      return {WcmdpSpec::replicated(sub, N, d, budgets, gamma), std::move(metadata)};
    }
    std::vector<SubMdp> subs;
    for (int n = 0; n < N; ++n)
      subs.push_back(parse_sub(doc.at("transition").at(n), doc.at("reward").at(n), doc.at("initial").at(n), S, A));
    std::vector<double> d;
    for (const auto& per_n : cons) {
      require(static_cast<int>(per_n.size()) == N, ErrorCode::kParseError, "consumption needs one row per sub-MDP");
      for (const auto& row : per_n) {
        require(static_cast<int>(row.size()) == A, ErrorCode::kParseError, "consumption row length must equal A");
        for (const auto& v : row) d.push_back(v.get<double>());
      }
    }
    return {WcmdpSpec(std::move(subs), std::move(d), budgets, gamma), std::move(metadata)};
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("instance JSON: ") + e.what());
  }
}

void save_instance(const std::filesystem::path& path, const WcmdpSpec& spec, const json& metadata) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << instance_to_json(spec, metadata).dump(2) << '\n';
  require(static_cast<bool>(out), ErrorCode::kIoError, "write failed: " + path.string());
}

InstanceFile load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return instance_from_json(doc);
}

json count_model_to_json(const CountModel& count) {
  json doc;
  doc["num_submdps"] = count.num_submdps();
  doc["states"] = count.num_states();
  doc["sub_states"] = count.sub_states();
  doc["sub_actions"] = count.sub_actions();
  doc["discount"] = count.discount();
  json states = json::array(), actions = json::array(), transition = json::array(), reward = json::array();
  std::vector<double> initial(count.num_states());
  for (int x = 0; x < count.num_states(); ++x) {
    states.push_back(count.state(x).counts);
    initial[x] = count.initial(x);
    json ax = json::array(), tx = json::array(), rx = json::array();
    for (int u = 0; u < count.num_actions(x); ++u) {
      ax.push_back(count.action(x, u).counts);
      json row = json::array();
      for (const auto& t : count.transitions(x, u)) row.push_back({t.next, t.prob});
      tx.push_back(row);
      rx.push_back(count.mean_reward(x, u));
    }
    actions.push_back(ax);
    transition.push_back(tx);
    reward.push_back(rx);
  }
  doc["count_states"] = states;
  doc["actions"] = actions;
  doc["transition"] = transition;
  doc["reward"] = reward;
  doc["initial"] = initial;
  doc["metadata"] = {{"kind", "count_model"}};
  return doc;
}

}  // namespace fairmdp
