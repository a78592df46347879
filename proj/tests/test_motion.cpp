#include "doctest.h"

#include "kinder/motion.hpp"
#include "kinder/suite2d.hpp"

using namespace kinder;

namespace {

const RobotSpec kSpec{};

ConfigGoal region_goal(const SceneState& s, const std::string& region) {
  const auto& r = s.at(region);
  const double x = r.f[bf::kX], y = r.f[bf::kY], hw = r.f[bf::kHalfW] - 0.1, hh = r.f[bf::kHalfH] - 0.1;
  const RobotConfig start = robot_config(s);
  ConfigGoal g;
  g.contains = [=](const RobotConfig& c) { return std::abs(c.pose.x - x) <= hw && std::abs(c.pose.y - y) <= hh; };
  g.sample = [=](Rng& rng) {
    RobotConfig c = start;
    c.pose.x = rng.uniform(x - hw, x + hw);
    c.pose.y = rng.uniform(y - hh, y + hh);
    return c;
  };
  RobotConfig pref = start;
  pref.pose.x = std::clamp(start.pose.x, x - hw, x + hw);
  pref.pose.y = std::clamp(start.pose.y, y - hh, y + hh);
  g.preferred = pref;
  return g;
}

// Independent check of one config: every robot part against every blocker.
bool oracle_valid(const SceneState& s, const RobotConfig& q, const WorldBounds& w) {
  const SceneState m = with_config(s, q);
  const auto rp = robot_parts(m.robot());
  auto inside = [&](const geom::PlacedConvex& p) {
    const auto b = geom::aabb(p);
    return b.min_x >= -1e-9 && b.min_y >= -1e-9 && b.max_x <= w.width + 1e-9 && b.max_y <= w.height + 1e-9;
  };
  if (!inside(rp.base) || !inside(rp.arm) || !inside(rp.vacuum)) return false;
  for (const auto& o : m.objects()) {
    if (o.type == ObjType::Robot || m.is_held(o.name) || o.collision() == CollisionClass::Passive) continue;
    const auto sh = object_shape(o);
    for (const auto& part : geom::convex_parts(sh)) {
      if (geom::collides(rp.base, part)) return false;
      if (o.collision() == CollisionClass::BaseOnly) continue;
      if (geom::collides(rp.arm, part) || geom::collides(rp.vacuum, part)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("start inside the goal gives a single waypoint") {
  const auto v = parse_variant("Motion2D-p0");
  const auto s = generate(v, 3);
  const auto plan = plan_motion(s, ConfigGoal::exact(robot_config(s)), 0, kSpec, v.world);
  REQUIRE(plan);
  CHECK(plan->waypoints.size() == 1);
}

TEST_CASE("interpolation respects the step bounds and lands exactly") {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    RobotConfig a{{rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(-3, 3)}, rng.uniform(0.3, 1.0), false};
    RobotConfig b{{rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(-3, 3)}, rng.uniform(0.3, 1.0), false};
    const auto pts = interpolate(a, b, kSpec);
    RobotConfig prev = a;
    for (const auto& p : pts) {
      CHECK(std::abs(p.pose.x - prev.pose.x) <= kSpec.max_deltas[0] + 1e-12);
      CHECK(std::abs(p.pose.y - prev.pose.y) <= kSpec.max_deltas[1] + 1e-12);
      CHECK(std::abs(geom::angle_diff(prev.pose.theta, p.pose.theta)) <= kSpec.max_deltas[2] + 1e-12);
      CHECK(std::abs(p.ext - prev.ext) <= kSpec.max_deltas[3] + 1e-12);
      prev = p;
    }
    CHECK(pts.back().pose.x == b.pose.x);
    CHECK(pts.back().ext == b.ext);
  }
}

TEST_CASE("collision world agrees with configuration_valid") {
  Rng rng(9);
  for (const char* name : {"Motion2D-p2", "Obstruction2D-o3", "ClutteredRetrieval2D-o4", "ClutteredStorage2D-b3",
                           "PushPullHook2D-b1", "StickButton2D-b3"}) {
    const auto v = parse_variant(name);
    const auto s = generate(v, 11);
    const CollisionWorld cw(s, v.world, {}, geom::kDefaultTol);
    int agree = 0;
    for (int i = 0; i < 1500; ++i) {
      RobotConfig q{{rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(-3.2, 3.2)}, rng.uniform(0.3, 1.0), false};
      const bool expect = configuration_valid(with_config(s, q), v.world);
      agree += cw.valid(q) == expect;
    }
    CHECK_MESSAGE(agree == 1500, name);
  }
}

TEST_CASE("plans in open worlds replay without reverts and reach the goal") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto v = parse_variant(seed % 2 ? "Motion2D-p1" : "Motion2D-p0");
    EnvInstance env(v);
    const auto s = env.reset(seed);
    const auto goal = region_goal(s, "target_region");
    const auto plan = plan_motion(s, goal, seed, kSpec, v.world);
    REQUIRE(plan);
    CHECK(plan->waypoints.front() == robot_config(s));
    CHECK(goal.contains(plan->waypoints.back()));
    for (std::size_t i = 0; i < plan->waypoints.size(); ++i) {
      CHECK(oracle_valid(s, plan->waypoints[i], v.world));
      if (i == 0) continue;
      const auto a = action_toward(robot_config(env.state()), plan->waypoints[i], kSpec);
      const auto out = env.step(a);
      CHECK_FALSE(out.info.reverted);
      const auto now = robot_config(env.state());
      CHECK(std::abs(now.pose.x - plan->waypoints[i].pose.x) < 1e-9);
      CHECK(std::abs(now.pose.y - plan->waypoints[i].pose.y) < 1e-9);
    }
    CHECK(env.check_goal());
  }
}

TEST_CASE("plans are deterministic in the seed") {
  const auto v = parse_variant("Motion2D-p3");
  const auto s = generate(v, 5);
  const auto goal = region_goal(s, "target_region");
  const auto a = plan_motion(s, goal, 17, kSpec, v.world);
  const auto b = plan_motion(s, goal, 17, kSpec, v.world);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->waypoints == b->waypoints);
}

TEST_CASE("enclosed target is unreachable") {
  SceneState s;
  s.add("robot", ObjType::Robot, kSpec.features({2.0, 2.0, 0.0}, 0.3, false));
  const std::array<double, 10> region{7.0, 7.0, 0.0, 0.4, 0.4, 0.0, 0, 0, 0, 0};
  s.add("target_region", ObjType::Region, region);
  auto wall = [&](const char* n, double x, double y, double hw, double hh) {
    const std::array<double, 10> f{x, y, 0.0, hw, hh, 0.0, 0, 0, 0, 0};
    s.add(n, ObjType::Wall, f);
  };
  wall("w0", 7.0, 5.5, 1.6, 0.1);
  wall("w1", 7.0, 8.5, 1.6, 0.1);
  wall("w2", 5.5, 7.0, 0.1, 1.6);
  wall("w3", 8.5, 7.0, 0.1, 1.6);
  MotionOptions opts;
  opts.budget = 800;
  CHECK_FALSE(plan_motion(s, region_goal(s, "target_region"), 1, kSpec, {}, opts));
}

TEST_CASE("held objects are carried and checked") {
  const auto v = parse_variant("StickButton2D-b1");
  auto s = generate(v, 2);
  const auto stick = s.at("stick");
  // Attach the stick to the vacuum wherever it is; the planner must keep it in bounds.
  s.set_held({"stick"});
  const CollisionWorld cw(s, v.world, {}, 1e-7);
  RobotConfig q = robot_config(s);
  CHECK(cw.valid(q) == configuration_valid(s, v.world, {{}, 1e-7}));
  q.pose.x = 0.31;
  CHECK(cw.valid(q) == configuration_valid(with_config(s, q), v.world, {{}, 1e-7}));
  (void)stick;
}
