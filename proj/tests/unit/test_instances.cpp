#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "fairmdp/instance_io.hpp"
#include "fairmdp/machine_replacement.hpp"
#include "frozen_values.hpp"
#include "oracles.hpp"

using namespace fairmdp;

TEST(Costs, Formulas) {
  EXPECT_EQ(operate_cost(0, OperateCostKind::kQuadratic, 3), 0.0);
  EXPECT_EQ(operate_cost(1, OperateCostKind::kQuadratic, 3), 1.0);
  EXPECT_EQ(operate_cost(2, OperateCostKind::kQuadratic, 3), 4.0);
  EXPECT_EQ(operate_cost(0, OperateCostKind::kLinear, 3), 0.0);
  EXPECT_EQ(operate_cost(2, OperateCostKind::kLinear, 3), 2.0);
  EXPECT_NEAR(operate_cost(2, OperateCostKind::kExponential, 3), frozen::kExpWorstCost, 1e-12);
  EXPECT_EQ(replace_cost_rccc(3), frozen::kRcccS3);
  EXPECT_EQ(replace_cost_rccc(2), 1.5);
  EXPECT_GT(replace_cost_rccc(3), operate_cost(2, OperateCostKind::kQuadratic, 3));
  EXPECT_GT(operate_cost(2, OperateCostKind::kExponential, 3), replace_cost_rccc(3));
}

TEST(Machine, Transitions) {
  const auto sub = build_machine(MachineReplacementConfig{});
  EXPECT_EQ(sub.transition(0, 0, 0), 0.8);
  EXPECT_NEAR(sub.transition(0, 0, 1), 0.2, 1e-15);
  EXPECT_EQ(sub.transition(0, 0, 2), 0.0);
  EXPECT_EQ(sub.transition(2, 0, 2), 1.0);
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(sub.transition(s, 1, 0), 1.0);
    EXPECT_EQ(sub.initial(s), 1.0 / 3);
  }
}

TEST(Machine, PartialReset) {
  MachineReplacementConfig cfg;
  cfg.reset_success = 0.7;
  const auto sub = build_machine(cfg);
  EXPECT_NEAR(sub.transition(1, 1, 0), 0.7, 1e-15);
  EXPECT_NEAR(sub.transition(1, 1, 1), 0.3 * 0.8, 1e-15);
  EXPECT_NEAR(sub.transition(1, 1, 2), 0.3 * 0.2, 1e-15);
}

TEST(Machine, QuadraticRewards) {
  const auto sub = build_machine(machine_replacement_preset("quadratic-rccc"));
  for (int s = 0; s < 3; ++s) {
    EXPECT_NEAR(sub.reward(s, 0), frozen::kQuadraticOperateReward[s], 1e-15);
    EXPECT_NEAR(sub.reward(s, 1), frozen::kQuadraticReplaceReward, 1e-15);
  }
}

TEST(Machine, RewardRangeAndSymmetry) {
  for (const auto kind : {OperateCostKind::kLinear, OperateCostKind::kQuadratic, OperateCostKind::kExponential,
                          OperateCostKind::kRandom}) {
    for (int S : {2, 3, 5}) {
      MachineReplacementConfig cfg;
      cfg.num_machines = 4;
      cfg.num_states = S;
      cfg.operate_cost = kind;
      cfg.seed = 9;
      const auto spec = build_instance(cfg);
      EXPECT_TRUE(is_symmetric(spec));
      const auto& sub = spec.sub_mdp(0);
      double lo = 1, hi = 0;
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < 2; ++a) {
          lo = std::min(lo, sub.reward(s, a));
          hi = std::max(hi, sub.reward(s, a));
        }
      EXPECT_GE(lo, 0.0);
      EXPECT_LE(hi, 1.0);
      EXPECT_EQ(lo, 0.0);
      EXPECT_EQ(spec.consumption(0, 0, 1), 1.0);
      EXPECT_EQ(spec.consumption(0, 3, 0), 0.0);
    }
  }
}

TEST(Machine, RandomCostsFollowSeed) {
  MachineReplacementConfig a;
  a.operate_cost = OperateCostKind::kRandom;
  a.seed = 5;
  auto b = a;
  EXPECT_EQ(machine_costs(a), machine_costs(b));
  b.seed = 6;
  EXPECT_NE(machine_costs(a), machine_costs(b));
  for (double c : machine_costs(a)) EXPECT_GE(c, 0.0);
}

TEST(Config, Validation) {
  for (auto mutate : std::vector<std::function<void(MachineReplacementConfig&)>>{
           [](auto& c) { c.num_states = 1; }, [](auto& c) { c.budget = -1; }, [](auto& c) { c.discount = 1.0; },
           [](auto& c) { c.stay_prob = 1.5; }, [](auto& c) { c.num_machines = 0; }}) {
    MachineReplacementConfig cfg;
    mutate(cfg);
    try {
      build_instance(cfg);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfigInvalid);
    }
  }
  EXPECT_THROW(machine_replacement_preset("cubic"), Error);
}

TEST(Config, JsonRoundTrip) {
  MachineReplacementConfig cfg = machine_replacement_preset("quadratic-rccc");
  cfg.num_machines = 6;
  cfg.stay_prob = 0.65;
  cfg.seed = 77;
  const auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(back.num_machines, 6);
  EXPECT_EQ(back.stay_prob, 0.65);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.operate_cost, OperateCostKind::kQuadratic);
  const auto preset = config_from_json(nlohmann::json{{"preset", "quadratic-rccc"}, {"num_machines", 2}});
  EXPECT_EQ(preset.operate_cost, OperateCostKind::kQuadratic);
  EXPECT_EQ(preset.num_machines, 2);
}

TEST(InstanceIo, SymmetricRoundTrip) {
  const auto spec = build_instance(MachineReplacementConfig{});
  const auto doc = instance_to_json(spec, {{"note", "x"}});
  EXPECT_TRUE(doc.at("symmetric").get<bool>());
  EXPECT_EQ(doc.at("num_submdps").get<int>(), 3);
  const auto back = instance_from_json(doc);
  EXPECT_EQ(back.metadata.at("note"), "x");
  EXPECT_TRUE(back.spec.sub_mdp(2).approx_equal(spec.sub_mdp(0), 0.0));
  EXPECT_EQ(back.spec.budget(0), 1.0);
  EXPECT_EQ(back.spec.discount(), 0.95);
}

TEST(InstanceIo, AsymmetricRoundTripThroughFile) {
  Rng rng = make_stream(51, 0);
  const auto a = oracle::random_sub_mdp(3, rng, false), b = oracle::random_sub_mdp(3, rng, false);
  const WcmdpSpec spec({a, b}, {0, 1, 0, 2}, {2.0}, 0.8);
  const auto path = std::filesystem::temp_directory_path() / "fairmdp_instance_test.json";
  save_instance(path, spec);
  const auto back = load_instance(path).spec;
  std::filesystem::remove(path);
  EXPECT_TRUE(back.sub_mdp(0).approx_equal(a, 1e-15));
  EXPECT_TRUE(back.sub_mdp(1).approx_equal(b, 1e-15));
  EXPECT_EQ(back.consumption(0, 1, 1), 2.0);
}

TEST(InstanceIo, RenormalizesOnlySmallDrift) {
  auto doc = instance_to_json(build_instance(MachineReplacementConfig{}));
  auto small = doc;
  small["transition"][0][0][0] = 0.8 + 5e-10;
  const auto ok = instance_from_json(small).spec;
  double row = 0.0;
  for (int t = 0; t < 3; ++t) row += ok.sub_mdp(0).transition(0, 0, t);
  EXPECT_NEAR(row, 1.0, 1e-15);
  auto big = doc;
  big["transition"][0][0][0] = 0.81;
  try {
    instance_from_json(big);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
  EXPECT_THROW(load_instance("/nonexistent/instance.json"), Error);
}

TEST(InstanceIo, CountModelDump) {
  const auto doc = count_model_to_json(build_count_model(build_instance(MachineReplacementConfig{})));
  EXPECT_EQ(doc.at("count_states").size(), 10u);
}
