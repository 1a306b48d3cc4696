#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <sstream>

#include "cbfmarl/errors.hpp"
#include "cbfmarl/eval.hpp"
#include "cbfmarl/footprints.hpp"
#include "cbfmarl/marl/ppo.hpp"
#include "cbfmarl/trace.hpp"

using namespace cbfmarl;

namespace {

Trace blank_trace(std::size_t agents, std::size_t steps) {
  Trace t;
  t.num_agents = agents;
  t.dt = 0.1;
  t.steps.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    t.steps[k].k = k;
    t.steps[k].vehicles.resize(agents);
  }
  return t;
}

EpisodeEvent exit_of(AgentId i, std::size_t k) { return {EventKind::kExit, k, {i, i}, 1}; }

EnvConfig two_agents() {
  EnvConfig c;
  c.num_agents = 2;
  return c;
}

}  // namespace

TEST_CASE("total reward examples") {
  const EvalConfig cfg;
  REQUIRE(cfg.steps(0.1) == 600);
  Trace t = blank_trace(2, 600);
  CHECK(total_reward(t, cfg).value == 0.0);

  t.steps[10].events.push_back(exit_of(0, 11));
  t.steps[400].events.push_back(exit_of(1, 401));
  CHECK(total_reward(t, cfg).value == 2.0);

  Trace c = blank_trace(2, 600);
  for (auto& s : c.steps)
    for (auto& v : s.vehicles) v.accel = 3.0;
  CHECK(total_reward(c, cfg).value == doctest::Approx(-0.2).epsilon(1e-12));

  Trace j = blank_trace(2, 600);
  for (auto& v : j.steps[0].vehicles) v.jerk = 20.0;
  CHECK(total_reward(j, cfg).comfort_penalty == doctest::Approx(0.2 / 600).epsilon(1e-12));
}

TEST_CASE("total reward needs a full-length trace") {
  const EvalConfig cfg;
  CHECK_THROWS_AS(total_reward(blank_trace(2, 599), cfg), std::invalid_argument);
  CHECK_THROWS_AS(total_reward(blank_trace(2, 601), cfg), std::invalid_argument);
  CHECK_THROWS_AS(total_reward(blank_trace(0, 600), cfg), std::invalid_argument);
}

TEST_CASE("one more collision lowers the total by exactly one") {
  const EvalConfig cfg;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  Trace t = blank_trace(3, 600);
  for (auto& s : t.steps)
    for (auto& v : s.vehicles) {
      v.accel = u(rng);
      v.jerk = 5 * u(rng);
    }
  t.steps[50].events.push_back(exit_of(2, 51));
  const auto before = total_reward(t, cfg);
  t.steps[300].events.push_back({EventKind::kVehicleCollision, 301, {0, 1}, 2});
  const auto after = total_reward(t, cfg);
  CHECK(before.value - after.value == 1.0);
  CHECK(after.collided_vehicles == 2);
  CHECK(before.value_per_vehicle - after.value_per_vehicle == 2.0);
  t.steps[310].events.push_back({EventKind::kRoadCollision, 311, {2, 2}, 1});
  CHECK(after.value - total_reward(t, cfg).value == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("total reward does not depend on agent labels") {
  const EvalConfig cfg;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  Trace t = blank_trace(4, 600);
  for (auto& s : t.steps)
    for (auto& v : s.vehicles) {
      v.accel = u(rng);
      v.jerk = 5 * u(rng);
    }
  t.steps[7].events.push_back(exit_of(3, 8));
  t.steps[90].events.push_back({EventKind::kVehicleCollision, 91, {0, 2}, 2});
  Trace p = t;
  const std::array<AgentId, 4> perm{2, 0, 3, 1};
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    for (AgentId i = 0; i < 4; ++i) p.steps[k].vehicles[perm[i]] = t.steps[k].vehicles[i];
    for (auto& e : p.steps[k].events) e.agents = {perm[e.agents[0]], perm[e.agents[1]]};
  }
  CHECK(total_reward(p, cfg).value == doctest::Approx(total_reward(t, cfg).value).epsilon(1e-12));
}

TEST_CASE("a frozen controller never exits") {
  const IntersectionEnv env(two_agents());
  const VehicleParams vp;
  ConstantController brake({vp.accel_min, 0.0});
  EvalConfig cfg;
  cfg.seeds = {1, 2};
  const auto r = evaluate_policy(brake, env, cfg);
  for (const auto& m : r.per_seed) {
    CHECK(m.total.exits == 0);
    CHECK(m.total.value <= 0.0);
  }
}

TEST_CASE("evaluation is deterministic per seed") {
  const IntersectionEnv env(two_agents());
  marl::PpoConfig ppo;
  const auto params = marl::initial_policy(env, ppo);
  EvalConfig cfg;
  cfg.seeds = {3, 4};
  cfg.t_eval = 10.0;
  cfg.filter_diagnostics = true;
  PolicyController a(params, false);
  PolicyController b(params, false);
  const auto ra = evaluate_policy(a, env, cfg);
  const auto rb = evaluate_policy(b, env, cfg);
  REQUIRE(ra.per_seed.size() == 2);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(ra.per_seed[s].total.value == rb.per_seed[s].total.value);
    CHECK(ra.per_seed[s].mean_step_reward == rb.per_seed[s].mean_step_reward);
    CHECK(ra.per_seed[s].activation_degree == rb.per_seed[s].activation_degree);
    CHECK(ra.traces[s].steps.size() == 100);
  }
  CHECK(ra.mean_total() == rb.mean_total());
}

TEST_CASE("a path follower on non-conflicting routes exits without collisions") {
  const IntersectionEnv env(two_agents());
  WorldState w = env.reset(5);
  const std::size_t routes[2] = {IntersectionMap::route_id(Region::kSouth, Maneuver::kStraight),
                                 IntersectionMap::route_id(Region::kNorth, Maneuver::kStraight)};
  for (AgentId i = 0; i < 2; ++i) {
    const auto& path = env.map().route(routes[i]).path;
    const Point2 p = path.point_at(0.5);
    w.vehicles[i] = {};
    w.vehicles[i].state = {p.x, p.y, wrap_angle(path.heading_at(0.5)), 0.6, 0.0};
    w.vehicles[i].route = routes[i];
  }
  PathFollowingController pf;
  const Trace t = rollout(env, w, pf, 100, false);
  std::vector<EpisodeEvent> events;
  for (const auto& s : t.steps) events.insert(events.end(), s.events.begin(), s.events.end());
  REQUIRE(events.size() >= 2);
  // Both original vehicles leave before anything else happens.
  CHECK(events[0].kind == EventKind::kExit);
  CHECK(events[1].kind == EventKind::kExit);
  CHECK(events[0].agents[0] != events[1].agents[0]);
}

TEST_CASE("trace round trip") {
  const IntersectionEnv env(two_agents());
  WorldState w = env.reset(6);
  PathFollowingController pf;
  Trace t = rollout(env, w, pf, 40, true);
  t.seed = 6;
  t.config_hash = "0123abcd";
  std::stringstream io;
  write_trace(io, t);
  const Trace back = read_trace(io);
  CHECK(back.seed == 6);
  CHECK(back.config_hash == t.config_hash);
  CHECK(back.method == t.method);
  CHECK(back.num_agents == 2);
  CHECK(back.dt == t.dt);
  REQUIRE(back.steps.size() == t.steps.size());
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    CHECK(back.steps[k].k == t.steps[k].k);
    CHECK(back.steps[k].events == t.steps[k].events);
    for (AgentId i = 0; i < 2; ++i) {
      const auto& a = t.steps[k].vehicles[i];
      const auto& b = back.steps[k].vehicles[i];
      CHECK(a.state == b.state);
      CHECK(a.action == b.action);
      CHECK(a.accel == b.accel);
      CHECK(a.jerk == b.jerk);
      CHECK(a.reward == b.reward);
      CHECK(a.route == b.route);
      CHECK(b.has_filter);
      CHECK(a.filtered == b.filtered);
      CHECK(a.normalized_correction == b.normalized_correction);
    }
  }
  std::stringstream bad("{\"not\": \"a trace\"}\n");
  CHECK_THROWS_AS(read_trace(bad), ConfigError);
  CHECK_THROWS_AS(load_trace("/nonexistent/trace.jsonl"), MissingFileError);
}

TEST_CASE("footprint export") {
  Trace t = blank_trace(2, 30);
  for (auto& s : t.steps) {
    s.vehicles[0].state = {0.45, -1.0, std::numbers::pi / 2, 0.0, 0.0};
    s.vehicles[1].state = {-0.45, 1.0 - 0.01 * static_cast<double>(s.k), -std::numbers::pi / 2, 0.1, 0.0};
  }
  const auto doc = export_footprints(t, 5, 15);
  REQUIRE(doc.outlines.size() == 20);
  for (const auto& f : doc.outlines) {
    const auto& v = t.steps[f.k].vehicles[f.agent].state;
    const auto expect = rectangle_corners(v, t.body_length, t.body_width);
    for (int c = 0; c < 4; ++c) CHECK(f.corners[c] == expect[c]);
    CHECK(f.time == doctest::Approx(0.1 * static_cast<double>(f.k)));
    if (f.agent == 0) CHECK(f.corners == doc.outlines.front().corners);
  }
  CHECK(doc.outlines[0].k == 5);
  CHECK(doc.outlines[0].agent == 0);
  CHECK(doc.outlines[1].agent == 1);
  CHECK(export_footprints(t, 25, 100).outlines.size() == 10);
  const auto svg = footprints_svg(doc, nullptr);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(agent_color(0) != agent_color(1));
}

TEST_CASE("policy compatibility") {
  const IntersectionEnv env(two_agents());
  EnvConfig four;
  four.num_agents = 4;
  const IntersectionEnv env4(four);
  const auto params = marl::initial_policy(env, marl::PpoConfig{});
  CHECK_NOTHROW(check_compatible(params, env));
  CHECK_THROWS_AS(check_compatible(params, env4), ConfigError);
}
