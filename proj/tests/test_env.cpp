#include <gtest/gtest.h>

#include <cmath>

#include "antijam/env.hpp"

using namespace antijam;
using namespace antijam::env;

namespace {

EnvConfig quiet_config(std::size_t channels) {
  EnvConfig c;
  c.num_channels = channels;
  c.noise_floor = 0.0;
  c.jammer_power = 1.0;
  return c;
}

// Direct transcription of the reward rule: 0 on a match, U - cost * [switched] otherwise.
double reward_oracle(std::size_t ft, std::size_t fj, std::size_t a, std::optional<std::size_t> prev,
                     double u, double cost) {
  if (ft == fj) return 0.0;
  const double delta = (prev && *prev != a) ? 1.0 : 0.0;
  return u - cost * delta;
}

}  // namespace

TEST(EnvReset, FixedJammerWithoutLeakageIsOneHot) {
  Environment env(quiet_config(4), JammerModel::fixed(2));
  const auto obs = env.reset();
  EXPECT_EQ(obs.powers, (std::vector<double>{0, 0, 1, 0}));
  EXPECT_EQ(env.steps_taken(), 0u);
}

TEST(EnvReset, LeakageReachesLinearNeighbours) {
  auto c = quiet_config(4);
  c.adjacent_leakage = 0.5;
  Environment env(c, JammerModel::fixed(2));
  EXPECT_EQ(env.reset().powers, (std::vector<double>{0, 0.5, 1, 0.5}));
}

TEST(EnvReset, SwitchingCostAboveUtilityRejected) {
  auto c = quiet_config(2);
  c.switching_cost = 1.5;
  try {
    Environment env(c, JammerModel::fixed(0));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "switching_cost");
  }
}

TEST(EnvReset, InvalidFieldsNamed) {
  auto c = quiet_config(1);
  EXPECT_THROW(Environment(c, JammerModel::fixed(0)), ConfigError);
  try {
    Environment env(c, JammerModel::fixed(0));
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "num_channels");
  }
  c = quiet_config(4);
  c.noise_floor = 0.01;
  c.jammer_power = 0.0;
  try {
    Environment env(c, JammerModel::fixed(0));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "jammer_power");
  }
  c = quiet_config(4);
  c.adjacent_leakage = 1.0;
  EXPECT_THROW(Environment(c, JammerModel::fixed(0)), ConfigError);
  EXPECT_THROW(Environment(quiet_config(4), JammerModel::fixed(4)), ConfigError);
  EXPECT_THROW(Environment(quiet_config(4), JammerModel::markov(1.5)), ConfigError);
  EXPECT_THROW(Environment(quiet_config(4), JammerModel::sweep(0, 0)), ConfigError);
}

TEST(EnvStep, SweepVisitsChannelsInOrder) {
  Environment env(quiet_config(4), JammerModel::sweep(0, 1, 1));
  env.reset();
  std::vector<std::size_t> seen;
  for (int t = 0; t < 4; ++t) seen.push_back(env.step(0).info.jammer_channel);
  env.reset();
  // Five slots of one episode need T >= 5.
  auto c = quiet_config(4);
  c.steps_per_episode = 5;
  Environment five(c, JammerModel::sweep(0, 1, 1));
  five.reset();
  seen.clear();
  for (int t = 0; t < 5; ++t) seen.push_back(five.step(1).info.jammer_channel);
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3, 0}));
}

TEST(EnvStep, JammedSlotGivesZero) {
  Environment env(quiet_config(4), JammerModel::fixed(3));
  env.reset();
  const auto out = env.step(3);
  EXPECT_EQ(out.reward, 0.0);
  EXPECT_TRUE(out.info.jammed);
}

TEST(EnvStep, StayingOnCleanChannelEarnsFullUtility) {
  auto c = quiet_config(4);
  c.switching_cost = 0.1;
  Environment env(c, JammerModel::fixed(3));
  env.reset();
  EXPECT_EQ(env.step(1).reward, 1.0);  // first step: no previous action
  const auto out = env.step(1);
  EXPECT_EQ(out.reward, 1.0);
  EXPECT_FALSE(out.info.switched);
  EXPECT_DOUBLE_EQ(env.step(2).reward, 0.9);
}

TEST(EnvStep, ObservationShowsJammerForNextSlot) {
  Environment env(quiet_config(4), JammerModel::sweep(0, 1, 1));
  auto obs = env.reset();
  for (int t = 0; t < 6; ++t) {
    const std::size_t shown = static_cast<std::size_t>(std::max_element(obs.powers.begin(), obs.powers.end()) - obs.powers.begin());
    auto out = env.step(0);
    EXPECT_EQ(out.info.jammer_channel, shown);
    obs = out.observation;
  }
}

TEST(EnvStep, ErrorsOnBadActionAndAfterDone) {
  auto c = quiet_config(3);
  c.steps_per_episode = 2;
  Environment env(c, JammerModel::fixed(0));
  EXPECT_THROW(env.step(0), std::logic_error);
  env.reset();
  EXPECT_THROW(env.step(3), std::out_of_range);
  EXPECT_FALSE(env.step(1).done);
  EXPECT_TRUE(env.step(1).done);
  EXPECT_THROW(env.step(1), std::logic_error);
}

TEST(ComputeReward, Examples) {
  EnvConfig c = quiet_config(4);
  c.switching_cost = 0.1;
  EXPECT_EQ(compute_reward(2, 2, 2, 1, c), 0.0);
  EXPECT_EQ(compute_reward(2, 2, 2, std::nullopt, c), 0.0);
  EXPECT_DOUBLE_EQ(compute_reward(1, 3, 1, 0, c), 0.9);
  EXPECT_EQ(compute_reward(1, 3, 1, std::nullopt, c), 1.0);
  EXPECT_THROW(compute_reward(4, 0, 4, std::nullopt, c), std::out_of_range);
}

TEST(ComputeReward, ExhaustiveAgainstOracleSmallGrids) {
  for (std::size_t n = 2; n <= 5; ++n) {
    for (double cost : {0.0, 0.1, 0.5}) {
      EnvConfig c = quiet_config(n);
      c.switching_cost = cost;
      for (std::size_t fj = 0; fj < n; ++fj)
        for (std::size_t a = 0; a < n; ++a) {
          EXPECT_EQ(compute_reward(a, fj, a, std::nullopt, c), reward_oracle(a, fj, a, std::nullopt, 1.0, cost));
          for (std::size_t prev = 0; prev < n; ++prev) {
            EXPECT_EQ(compute_reward(a, fj, a, prev, c), reward_oracle(a, fj, a, prev, 1.0, cost));
          }
        }
    }
  }
}

TEST(ComputeReward, SinrUtilityIsNormalizedLogRate) {
  EnvConfig c;
  c.num_channels = 5;
  c.utility_mode = UtilityMode::sinr;
  c.noise_floor = 0.01;
  c.signal_power = 1.0;
  c.adjacent_leakage = 0.5;
  c.switching_cost = 0.0;
  EXPECT_DOUBLE_EQ(compute_reward(0, 3, 0, std::nullopt, c), 1.0);
  const double adjacent = std::log2(1.0 + 1.0 / 0.51) / std::log2(1.0 + 1.0 / 0.01);
  EXPECT_DOUBLE_EQ(compute_reward(2, 3, 2, std::nullopt, c), adjacent);
  EXPECT_EQ(compute_reward(3, 3, 3, std::nullopt, c), 0.0);
}

TEST(ReceivedPowers, Examples) {
  EnvConfig c = quiet_config(3);
  c.adjacent_leakage = 0.5;
  EXPECT_EQ(received_powers(0, c, nullptr).powers, (std::vector<double>{1, 0.5, 0}));
  // Channels 0 and N-1 are not neighbours.
  EXPECT_EQ(received_powers(2, c, nullptr).powers, (std::vector<double>{0, 0.5, 1}));
  c.adjacent_leakage = 0.0;
  EXPECT_EQ(received_powers(1, c, nullptr).powers, (std::vector<double>{0, 1, 0}));
}

TEST(ReceivedPowers, NoiseStaysWithinFloorAndNormalizedBounds) {
  EnvConfig c;
  c.num_channels = 6;
  c.jammer_power = 2.0;
  c.noise_floor = 0.3;
  c.adjacent_leakage = 0.4;
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t fj = trial % 6;
    const auto obs = received_powers(fj, c, &rng);
    ASSERT_EQ(obs.powers.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
      const double base = interference(i, fj, c);
      EXPECT_GE(obs.powers[i], base);
      EXPECT_LE(obs.powers[i], base + c.noise_floor);
      EXPECT_GE(obs.normalized[i], 0.0);
      EXPECT_LE(obs.normalized[i], 1.0);
    }
  }
}

TEST(EnvConfigDefaults, NoiseFloorScalesWithJammerPower) {
  KeyValues kv{{"env.jammer_power", "4"}};
  const EnvConfig c = env_config_from(kv, "env.");
  EXPECT_DOUBLE_EQ(c.noise_floor, 0.04);
  EXPECT_TRUE(kv.empty());
}

TEST(JammerModel, SweepMatchesClosedForm) {
  for (std::size_t n : {2u, 5u, 10u}) {
    for (std::size_t stride : {1u, 2u, 3u, 7u}) {
      for (int dir : {1, -1}) {
        for (std::size_t start = 0; start < n; ++start) {
          auto j = JammerModel::sweep(start, stride, dir);
          Rng rng(0);
          j.reset(rng, n);
          for (std::size_t t = 0; t < 3 * n; ++t) {
            const long long expected =
                ((static_cast<long long>(start) + dir * static_cast<long long>(t * stride)) % static_cast<long long>(n) +
                 static_cast<long long>(n)) %
                static_cast<long long>(n);
            ASSERT_EQ(j.channel(), static_cast<std::size_t>(expected)) << "n=" << n << " stride=" << stride << " t=" << t;
            j.advance(rng, n);
          }
        }
      }
    }
  }
}

TEST(JammerModel, MarkovExtremes) {
  Rng rng(5);
  auto stay = JammerModel::markov(1.0);
  stay.reset(rng, 6);
  const auto first = stay.channel();
  for (int i = 0; i < 100; ++i) {
    stay.advance(rng, 6);
    EXPECT_EQ(stay.channel(), first);
  }
  auto hop = JammerModel::markov(0.0);
  hop.reset(rng, 6);
  for (int i = 0; i < 100; ++i) {
    const auto before = hop.channel();
    hop.advance(rng, 6);
    EXPECT_NE(hop.channel(), before);
    EXPECT_LT(hop.channel(), 6u);
  }
}

class EnvProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(EnvProperties, RewardAlgebraAndBoundsHoldOnRandomTrajectories) {
  Rng gen(GetParam());
  for (int scenario = 0; scenario < 20; ++scenario) {
    EnvConfig c;
    c.num_channels = 2 + uniform_index(gen, 7);
    c.steps_per_episode = 1 + uniform_index(gen, 40);
    c.switching_cost = 0.9 * uniform_unit(gen);
    c.adjacent_leakage = 0.9 * uniform_unit(gen);
    c.utility_mode = uniform_index(gen, 2) == 0 ? UtilityMode::binary : UtilityMode::sinr;
    c.rng_seed = gen();
    const JammerModel jammers[] = {JammerModel::fixed(uniform_index(gen, c.num_channels)),
                                   JammerModel::sweep(0, 1 + uniform_index(gen, 3), uniform_index(gen, 2) ? 1 : -1),
                                   JammerModel::random_uniform(), JammerModel::markov(uniform_unit(gen))};
    Environment env(c, jammers[scenario % 4]);
    env.reset();
    double ret = 0.0;
    std::optional<std::size_t> prev;
    while (!env.done()) {
      const std::size_t a = uniform_index(gen, c.num_channels);
      const auto out = env.step(a);
      ASSERT_EQ(out.observation.powers.size(), c.num_channels);
      for (double p : out.observation.normalized) {
        ASSERT_GE(p, 0.0);
        ASSERT_LE(p, 1.0);
      }
      ASSERT_EQ(out.reward == 0.0, a == out.info.jammer_channel);
      ASSERT_EQ(out.info.jammed, out.reward == 0.0);
      if (!out.info.jammed) {
        const double u = utility(a, out.info.jammer_channel, c);
        ASSERT_EQ(out.reward, u - (out.info.switched ? c.switching_cost : 0.0));
        if (c.utility_mode == UtilityMode::binary) {
          ASSERT_TRUE(out.reward == 1.0 || out.reward == 1.0 - c.switching_cost);
        }
      }
      ASSERT_EQ(out.info.switched, prev.has_value() && *prev != a);
      ASSERT_EQ(out.done, env.steps_taken() == c.steps_per_episode);
      prev = a;
      ret += out.reward;
    }
    if (c.utility_mode == UtilityMode::binary) {
      const double t = static_cast<double>(c.steps_per_episode);
      EXPECT_LE(ret, t);
      EXPECT_GE(ret, -c.switching_cost * t);
    }
  }
}

TEST_P(EnvProperties, SameSeedSameTrajectory) {
  EnvConfig c;
  c.num_channels = 7;
  c.rng_seed = GetParam();
  c.adjacent_leakage = 0.2;
  Environment a(c, JammerModel::markov(0.6));
  Environment b(c, JammerModel::markov(0.6));
  Rng actions(GetParam() + 1);
  for (int ep = 0; ep < 3; ++ep) {
    auto oa = a.reset();
    auto ob = b.reset();
    ASSERT_EQ(oa.powers, ob.powers);
    while (!a.done()) {
      const std::size_t act = uniform_index(actions, 7);
      const auto sa = a.step(act);
      const auto sb = b.step(act);
      ASSERT_EQ(sa.observation.powers, sb.observation.powers);
      ASSERT_EQ(sa.reward, sb.reward);
      ASSERT_EQ(sa.info.jammer_channel, sb.info.jammer_channel);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, EnvProperties, ::testing::Values(1u, 2u, 3u, 42u));

TEST(EnvSchema, KeyValuesRoundTrip) {
  EnvConfig c;
  c.num_channels = 6;
  c.switching_cost = 0.25;
  c.utility_mode = UtilityMode::sinr;
  c.noise_floor = 0.05;
  KeyValues kv = to_key_values(c, "env.");
  const EnvConfig back = env_config_from(kv, "env.");
  EXPECT_TRUE(kv.empty());
  EXPECT_EQ(to_key_values(back, "env."), to_key_values(c, "env."));

  const auto j = JammerModel::sweep(3, 2, -1);
  KeyValues jkv = to_key_values(j, "jammer.");
  EXPECT_EQ(jammer_from(jkv, "jammer."), j);
  KeyValues bad{{"jammer.kind", "reactive"}};
  EXPECT_THROW(jammer_from(bad, "jammer."), ConfigError);
}
