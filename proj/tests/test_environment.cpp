#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "edgesim/environment.hpp"
#include "edgesim/errors.hpp"

using namespace edgesim;

namespace {

EnvConfig small_config(BandwidthSpec bw = BandwidthSpec::constant(5.0)) {
  EnvConfig c = default_env_config();
  c.grid = {2, 2, 2, 2};
  c.bandwidth = std::move(bw);
  return c;
}

Policy fixed(std::size_t a) {
  return [a](const EnvState&) { return a; };
}

}  // namespace

TEST_CASE("bandwidth: trace mode cycles through entries") {
  BandwidthSpec s;
  s.mode = BandwidthMode::trace;
  s.trace = {5.0, 5.0, 5.0};
  BandwidthProcess p(s, 1);
  for (int i = 0; i < 10; ++i) CHECK(p.next() == 5.0);

  s.trace = {2.0, 3.0, 4.0};
  BandwidthProcess q(s, 1);
  for (double expect : {2.0, 3.0, 4.0, 2.0, 3.0}) CHECK(q.next() == expect);
}

TEST_CASE("bandwidth: seeded walk regression sequence") {
  BandwidthSpec s;  // walk, [2, 8], step 0.5, start 5
  BandwidthProcess p(s, 42);
  const double golden[] = {5,
                           5.2551555329545394,
                           5.3941869268092368,
                           5.6463321275572635,
                           5.2826048111897004,
                           5.6858737776180783,
                           5.2799420893809152,
                           5.3545123934891787,
                           5.2274000929453637,
                           5.0012741946825345};
  for (double g : golden) CHECK(p.next() == g);
}

TEST_CASE("bandwidth: walk stays inside its bounds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BandwidthSpec s;
    s.step = 3.0;
    s.initial = 7.9;
    BandwidthProcess p(s, seed);
    for (int i = 0; i < 2000; ++i) {
      const double b = p.next();
      CHECK((b >= 2.0 && b <= 8.0));
    }
  }
}

TEST_CASE("bandwidth: invalid specs are rejected") {
  BandwidthSpec s;
  s.step = 7.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = BandwidthSpec{};
  s.initial = 9.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = BandwidthSpec{};
  s.mode = BandwidthMode::trace;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("bandwidth trace files") {
  const std::string path = "test_env_trace.csv";
  {
    std::ofstream out(path);
    out << "step,mbps\n0,2.5\n1,7\n";
  }
  CHECK(load_bandwidth_trace(path) == std::vector<double>{2.5, 7.0});
  {
    std::ofstream out(path);
    out << "t,bw\n0,2.5\n";
  }
  CHECK_THROWS_AS(load_bandwidth_trace(path), ConfigError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_bandwidth_trace("does-not-exist.csv"), ConfigError);
}

TEST_CASE("importance summary") {
  ImportanceDist uniform{std::vector<double>(8, 0.125)};
  const auto s = summarize_importance(uniform);
  CHECK(s[kSummaryTop] == doctest::Approx(std::log(8.0)).epsilon(1e-15));
  CHECK(s[kSummaryTop] == doctest::Approx(2.0794).epsilon(1e-4));
  CHECK(s[kSummaryTop + 1] == doctest::Approx(0.375).epsilon(1e-15));
  for (std::size_t i = 0; i < kSummaryTop; ++i) CHECK(s[i] == 0.125);

  ImportanceDist small{{0.7, 0.2, 0.1}};
  const auto t = summarize_importance(small);
  CHECK(t[0] == 0.7);
  CHECK(t[3] == 0.0);
  CHECK(t[kSummaryTop + 1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("encode_state") {
  EnvState s;
  s.channels = 8;
  s.importance_summary = summarize_importance(ImportanceDist{std::vector<double>(8, 0.125)});
  s.bandwidth = 5.0;
  const auto x = encode_state(s);
  CHECK(x.size() == 13);
  CHECK(x[0] == 0.5);
  CHECK(x[1] == 0.5);
  CHECK(x[10] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x[12] == 0.5);
  s.bandwidth = 11.0;
  CHECK(encode_state(s)[12] == 1.0);
}

TEST_CASE("reset is deterministic and echoes the config") {
  OffloadEnv a(default_env_config());
  OffloadEnv b(default_env_config());
  const EnvState sa = a.reset(7);
  CHECK(sa == b.reset(7));
  CHECK(sa.lambda == 0.5);
  CHECK(sa.eta == 0.5);
  CHECK(sa.bandwidth == 5.0);
  CHECK(sa.channels == 16);
  CHECK(a.attended_map() == b.attended_map());
  CHECK_FALSE(a.reset(8) == sa);
}

TEST_CASE("encoded features lie in [0, 1] and top-3 mass is near 0.6") {
  OffloadEnv env(default_env_config());
  EnvState s = env.reset(3);
  double top3 = 0.0;
  const int steps = 400;
  for (int i = 0; i < steps; ++i) {
    for (double v : encode_state(s)) CHECK((v >= 0.0 && v <= 1.0));
    top3 += s.importance_summary[kSummaryTop + 1] / steps;
    s = env.apply(static_cast<std::size_t>(i) % env.action_count(), 0.25).next_state;
  }
  CHECK(std::abs(top3 - 0.6) <= 0.05);
}

TEST_CASE("step: local-only actions price pure local execution") {
  OffloadEnv env(small_config());
  const EnvState s = env.reset(1);
  const Action a = env.decode(14);  // f_max everywhere, xi = 0
  CHECK(a.xi == 0.0);
  const StepOutcome o = env.step(s, a);
  CHECK(o.evaluation.latency.comp == 0.0);
  CHECK(o.evaluation.latency.off == 0.0);
  CHECK(o.evaluation.latency.cloud == 0.0);
  CHECK(o.reward == -o.evaluation.cost);
  CHECK(o.evaluation.cost == doctest::Approx(700.0).epsilon(1e-12));
  CHECK(o.reward <= 0.0);
}

TEST_CASE("step: off-grid action is a domain error") {
  OffloadEnv env(small_config());
  const EnvState s = env.reset(1);
  Action a = env.decode(3);
  a.xi = 0.3;
  CHECK_THROWS_AS(env.step(s, a), DomainError);
  CHECK_THROWS_AS(env.apply(0, 1.5), DomainError);
}

TEST_CASE("reward composition for the worked example") {
  const LatencyBreakdown lat = make_latency(2.0, 4.0, 200.0, 0.694);
  const EnergyBreakdown en{30.0, 200.0, 230.0};
  const double reward = -cost(lat, en, CostParams{0.5, 20.0});
  CHECK(lat.total == doctest::Approx(206.694).epsilon(1e-12));
  CHECK(reward == doctest::Approx(-2181.94).epsilon(1e-12));
}

TEST_CASE("concurrent_step: t_as = H matches the blocking step over 100 seeds") {
  EnvConfig cfg = default_env_config();
  cfg.grid = {3, 3, 3, 3};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    OffloadEnv a(cfg);
    OffloadEnv b(cfg);
    EnvState sa = a.reset(seed);
    EnvState sb = b.reset(seed);
    Rng pick(seed);
    for (int t = 0; t < 5; ++t) {
      const std::size_t idx = pick.below(a.action_count());
      const Transition tr = a.concurrent_step(sa, fixed(idx), 100.0, 100.0);
      const StepOutcome ob = b.step(sb, b.decode(idx));
      CHECK(tr.reward == ob.reward);
      CHECK(a.last_outcome().bandwidth == ob.bandwidth);
      CHECK(tr.next_state == ob.next_state);
      sa = tr.next_state;
      sb = ob.next_state;
    }
  }
}

TEST_CASE("concurrent_step: slip interpolates the bandwidth") {
  BandwidthSpec bw;
  bw.mode = BandwidthMode::trace;
  bw.trace = {2.0, 8.0};
  OffloadEnv env(small_config(bw));
  const EnvState s = env.reset(0);
  const std::size_t cloud = 1;  // f_min everywhere, xi = 1
  const Transition tr = env.concurrent_step(s, fixed(cloud), 50.0, 100.0);
  CHECK(env.last_outcome().bandwidth == 5.0);
  CHECK(tr.reward == -env.price(env.decode(cloud), 5.0).cost);
  CHECK(tr.t_as == 50.0);
  CHECK(tr.horizon == 100.0);
  CHECK(tr.priority > 0.0);
  CHECK_THROWS_AS(env.concurrent_step(s, fixed(cloud), 0.0, 100.0), DomainError);
  CHECK_THROWS_AS(env.concurrent_step(s, fixed(cloud), 150.0, 100.0), DomainError);
}

TEST_CASE("concurrent_step: constant bandwidth makes slip irrelevant") {
  OffloadEnv a(small_config());
  OffloadEnv b(small_config());
  EnvState sa = a.reset(5);
  EnvState sb = b.reset(5);
  for (std::size_t i = 0; i < 16; ++i) {
    const Transition ta = a.concurrent_step(sa, fixed(i), 25.0, 100.0);
    const Transition tb = b.concurrent_step(sb, fixed(i), 100.0, 100.0);
    CHECK(ta.reward == tb.reward);
    sa = ta.next_state;
    sb = tb.next_state;
  }
}

TEST_CASE("rollout is deterministic and rewards are non-positive") {
  OffloadEnv env(small_config(BandwidthSpec{}));
  const RolloutStats r1 = rollout(env, fixed(9), 3, 11, 0.25);
  const RolloutStats r2 = rollout(env, fixed(9), 3, 11, 0.25);
  CHECK(r1.cost == r2.cost);
  CHECK(r1.episode_returns.size() == 3);
  CHECK(r1.cost.size() == 3 * env.episode_length());
  for (double ret : r1.episode_returns) CHECK(ret <= 0.0);
  const double total = std::accumulate(r1.cost.begin(), r1.cost.end(), 0.0);
  CHECK(-total == doctest::Approx(std::accumulate(r1.episode_returns.begin(), r1.episode_returns.end(), 0.0)));
}

TEST_CASE("mean and stddev") {
  CHECK(mean({}) == 0.0);
  CHECK(mean({1.0, 2.0, 3.0}) == 2.0);
  CHECK(stddev({1.0, 2.0, 3.0}) == doctest::Approx(1.0));
  CHECK(stddev({4.0}) == 0.0);
}
