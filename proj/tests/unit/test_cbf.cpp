#include <doctest.h>

#include <cmath>
#include <random>

#include "cbfmarl/cbf.hpp"
#include "cbfmarl/env.hpp"
#include "oracles.hpp"

using namespace cbfmarl;

namespace {

Route straight_corridor(double lane_width) {
  Route r;
  r.path.waypoints = {{-5, 0}, {5, 0}};
  r.path.arclength = {0, 10};
  r.path.heading = {0, 0};
  r.left = Polyline({{-5, 0.5 * lane_width}, {5, 0.5 * lane_width}}, CorridorSide::kRight);
  r.right = Polyline({{-5, -0.5 * lane_width}, {5, -0.5 * lane_width}}, CorridorSide::kLeft);
  return r;
}

CircleDecomposition single_circle(double radius) { return {{0.0}, radius}; }

}  // namespace

TEST_CASE("road barrier of a vehicle centered in a straight lane") {
  const VehicleParams p;
  const auto r = straight_corridor(0.3);
  const auto d = single_circle(0.06);
  for (auto side : {RoadSide::kLeft, RoadSide::kRight}) {
    const auto e = road_cbf(0, {0, 0, 0, 0, 0}, side, r, d, p);
    CHECK(e.h == doctest::Approx(0.09).epsilon(1e-14));
    CHECK(e.h_dot == 0.0);
    CHECK(e.h_ddot_const == 0.0);
  }
}

TEST_CASE("pair barrier of two single-circle vehicles") {
  const VehicleParams p;
  const auto d = single_circle(0.06);
  auto e = vehicle_pair_cbf(0, {0, 0, 0, 0, 0}, 1, {1.0, 0, 0, 0, 0}, d, p);
  CHECK(e.h == doctest::Approx(0.88).epsilon(1e-14));
  CHECK(e.h_dot == 0.0);
  CHECK(e.h_ddot_const == 0.0);
  CHECK_THROWS_AS(vehicle_pair_cbf(0, {}, 0, {}, d, p), std::invalid_argument);

  // Head-on at unit speed each: the gap closes at 2 m/s.
  e = vehicle_pair_cbf(0, {0, 0, 0, 1.0, 0}, 1, {1.0, 0, std::numbers::pi, 1.0, 0}, d, p);
  CHECK(e.h_dot == doctest::Approx(-2.0).epsilon(1e-12));
  const double eps = 1e-6;
  auto h_at = [&](double t) {
    return vehicle_pair_cbf(0, {t, 0, 0, 1, 0}, 1, {1.0 - t, 0, std::numbers::pi, 1, 0}, d, p).h;
  };
  CHECK(e.h_dot == doctest::Approx((h_at(eps) - h_at(-eps)) / (2 * eps)).epsilon(1e-4));
}

TEST_CASE("psi of a static safe vehicle") {
  const VehicleParams p;
  const auto r = straight_corridor(0.3);
  const auto e = road_cbf(0, {0, 0, 0, 0, 0}, RoadSide::kLeft, r, single_circle(0.06), p);
  CbfConfig c;
  c.gamma = 1.0;
  const ControlInput u[1] = {{}};
  CHECK(evaluate_psi(e, u, c) == doctest::Approx(0.09).epsilon(1e-14));
  c.remainder_mode = RemainderMode::kConstant;
  c.remainder = -0.01;
  CHECK(evaluate_psi(e, u, c) == doctest::Approx(0.08).epsilon(1e-14));
  CHECK_THROWS_AS(evaluate_psi(e, std::span<const ControlInput>{}, c), std::out_of_range);
}

TEST_CASE("psi term by term and affine in the inputs") {
  const VehicleParams p;
  const auto d = decompose_rectangle(0.2, 0.1, 3);
  CbfConfig c;
  c.gamma = 0.7;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const VehicleState si{u(rng), u(rng), 3 * u(rng), 0.5 + 0.5 * u(rng), 0.6 * u(rng)};
    const VehicleState sj{u(rng), u(rng), 3 * u(rng), 0.5 + 0.5 * u(rng), 0.6 * u(rng)};
    const auto e = vehicle_pair_cbf(0, si, 1, sj, d, p);
    auto draw = [&] {
      return std::array<ControlInput, 2>{ControlInput{5 * u(rng), 1.5 * u(rng)}, ControlInput{5 * u(rng), 1.5 * u(rng)}};
    };
    const auto u1 = draw();
    const auto u2 = draw();
    std::array<ControlInput, 2> mid;
    for (int k = 0; k < 2; ++k)
      mid[k] = {0.5 * (u1[k].accel + u2[k].accel), 0.5 * (u1[k].steering_rate + u2[k].steering_rate)};
    const double p1 = evaluate_psi(e, u1, c);
    const double p2 = evaluate_psi(e, u2, c);
    CHECK(p1 + p2 == doctest::Approx(2 * evaluate_psi(e, mid, c)).epsilon(1e-12));

    double h_ddot = e.h_ddot_const;
    for (int k = 0; k < 2; ++k)
      h_ddot += e.involved[k].input_coeffs[0] * u1[k].accel + e.involved[k].input_coeffs[1] * u1[k].steering_rate;
    const double expect = c.dt * e.h_dot + 0.5 * c.dt * c.dt * h_ddot + c.gamma * e.h;
    CHECK(p1 == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("input coefficients are the steering and speed partials of h_dot") {
  const VehicleParams p;
  const auto d = decompose_rectangle(0.2, 0.1, 3);
  const auto e = vehicle_pair_cbf(0, {0, 0, 0.2, 0.6, 0.1}, 1, {0.5, 0.3, 2.5, 0.4, -0.2}, d, p);
  for (int k = 0; k < 2; ++k) {
    CHECK(e.involved[k].input_coeffs[0] == e.involved[k].grad_h_dot[3]);
    CHECK(e.involved[k].input_coeffs[1] == e.involved[k].grad_h_dot[4]);
  }
}

TEST_CASE("road derivatives match finite differences") {
  const VehicleParams p;
  const auto map = build_intersection(MapConfig{});
  const auto d = decompose_rectangle(0.2, 0.1, 3);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, 11);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto& route = map.route(pick(rng));
    const double s = 0.5 * (1 + u(rng)) * route.path.length();
    const double h = route.path.heading_at(s);
    const Point2 c = route.path.point_at(s) + 0.08 * u(rng) * Point2{-std::sin(h), std::cos(h)};
    const VehicleState st{c.x, c.y, h + 0.5 * u(rng), 0.5 + 0.5 * u(rng), 0.7 * u(rng)};
    const ControlInput in{5 * u(rng), 1.5 * u(rng)};
    for (auto side : {RoadSide::kLeft, RoadSide::kRight}) {
      const auto r = oracle::fd_check_road(st, in, side, route, d, p);
      if (r.skipped) continue;
      ++checked;
      REQUIRE(r.grad_h <= 1e-4);
      REQUIRE(r.grad_h_dot <= 1e-4);
      REQUIRE(r.h_dot <= 1e-5);
      REQUIRE(r.h_ddot <= 1e-4);
    }
  }
  CHECK(checked > 800);
}

TEST_CASE("pair derivatives match finite differences") {
  const VehicleParams p;
  const auto d = decompose_rectangle(0.2, 0.1, 3);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const VehicleState si{u(rng), u(rng), 3 * u(rng), 0.5 + 0.5 * u(rng), 0.7 * u(rng)};
    const VehicleState sj{u(rng), u(rng), 3 * u(rng), 0.5 + 0.5 * u(rng), 0.7 * u(rng)};
    const auto r = oracle::fd_check_pair(si, {5 * u(rng), 1.5 * u(rng)}, sj, {5 * u(rng), 1.5 * u(rng)}, d, p);
    if (r.skipped) continue;
    ++checked;
    REQUIRE(r.max() <= 1e-4);
    CHECK(vehicle_pair_cbf(0, si, 1, sj, d, p).h == doctest::Approx(oracle::brute_pair_h(si, sj, d)).epsilon(1e-14));
  }
  CHECK(checked > 450);
}

TEST_CASE("head-on pair psi does not increase while the active pair holds") {
  const VehicleParams p;
  const auto d = decompose_rectangle(0.2, 0.1, 3);
  CbfConfig c;
  VehicleState a{0, 0, 0, 0.8, 0};
  VehicleState b{1.5, 0, std::numbers::pi, 0.8, 0};
  const std::array<ControlInput, 2> u{};
  auto e = vehicle_pair_cbf(0, a, 1, b, d, p);
  double prev = evaluate_psi(e, u, c);
  for (int k = 0; k < 8; ++k) {
    a = step(a, u[0], p, 0.1);
    b = step(b, u[1], p, 0.1);
    const auto next = vehicle_pair_cbf(0, a, 1, b, d, p);
    if (next.circle_a != e.circle_a || next.circle_b != e.circle_b) break;
    const double psi = evaluate_psi(next, u, c);
    CHECK(psi <= prev + 1e-12);
    prev = psi;
    e = next;
  }
}

TEST_CASE("constraint counts and pair symmetry") {
  EnvConfig cfg;
  for (std::size_t n : {std::size_t{1}, std::size_t{4}}) {
    cfg.num_agents = n;
    IntersectionEnv env(cfg);
    const auto world = env.reset(3);
    std::vector<ControlInput> u(n, ControlInput{0.3, -0.1});
    if (n == 4) u[2] = {-2.0, 0.5};
    const auto cs = all_constraints(world, u, cfg.cbf);
    REQUIRE(cs.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(cs[i].size() == 2 + (n - 1));
      CHECK(cs[i][0].source.kind == ConstraintKind::kRoadLeft);
      CHECK(cs[i][1].source.kind == ConstraintKind::kRoadRight);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        auto find = [&](std::size_t a, std::size_t b) {
          for (const auto& c : cs[a])
            if (c.source.kind == ConstraintKind::kVehicle && c.source.other == b) return c.psi;
          FAIL("missing pair");
          return 0.0;
        };
        CHECK(find(i, j) == find(j, i));
      }
    }
  }
}
