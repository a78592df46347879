#include "doctest.h"

#include "kinder/rng.hpp"
#include "kinder/suite2d.hpp"

using namespace kinder;

namespace {

const std::vector<std::string> kVariants{
    "Motion2D-p0",          "Motion2D-p1",          "Motion2D-p3",           "Obstruction2D-o0",
    "Obstruction2D-o1",     "Obstruction2D-o3",     "ClutteredRetrieval2D-o1", "ClutteredRetrieval2D-o4",
    "ClutteredRetrieval2D-o6", "ClutteredStorage2D-b1", "ClutteredStorage2D-b3", "ClutteredStorage2D-b5",
    "PushPullHook2D-b1",    "StickButton2D-b1",     "StickButton2D-b3",      "StickButton2D-b5",
};

int count_type(const SceneState& s, ObjType t, std::string_view prefix = "") {
  int n = 0;
  for (const auto& o : s.objects()) {
    if (o.type == t && o.name.rfind(prefix, 0) == 0) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("variant parsing") {
  const auto v = parse_variant("StickButton2D-b5");
  CHECK(v.env == EnvId::StickButton2D);
  CHECK(v.count == 5);
  CHECK(v.str() == "StickButton2D-b5");
  CHECK(parse_variant("Motion2D-p12").count == 12);
  CHECK_THROWS_AS(parse_variant("Motion2D-z9"), BadVariant);
  CHECK_THROWS_AS(parse_variant("motion2d-p0"), BadVariant);
  CHECK_THROWS_AS(parse_variant("Motion2D-p"), BadVariant);
  CHECK_THROWS_AS(parse_variant("Motion2D"), BadVariant);
  CHECK_THROWS_AS(parse_variant("PushPullHook2D-b2"), BadVariant);
  try {
    parse_variant("Obstruction2D-b1");
  } catch (const BadVariant& e) {
    CHECK(std::string(e.what()).find("Obstruction2D: o") != std::string::npos);
  }
}

TEST_CASE("reset is deterministic in the seed") {
  EnvInstance env(parse_variant("Motion2D-p0"));
  const SceneState a = env.reset(7);
  const SceneState b = env.reset(7);
  CHECK(to_json(a) == to_json(b));
  const SceneState c = env.reset(8);
  CHECK(a.at("target_region").features()[0] != c.at("target_region").features()[0]);
}

TEST_CASE("object counts match the variant") {
  for (int seed = 0; seed < 20; ++seed) {
    CHECK(count_type(generate(parse_variant("Motion2D-p0"), seed), ObjType::Wall) == 0);
    CHECK(count_type(generate(parse_variant("Motion2D-p2"), seed), ObjType::Wall) == 4);
    CHECK(count_type(generate(parse_variant("Obstruction2D-o1"), seed), ObjType::Block, "obstruction") == 1);
    const auto sb = generate(parse_variant("StickButton2D-b3"), seed);
    CHECK(count_type(sb, ObjType::Button) == 3);
    CHECK(count_type(sb, ObjType::Stick) == 1);
    CHECK(count_type(sb, ObjType::Holder) == 1);
    CHECK(count_type(generate(parse_variant("StickButton2D-b1"), seed), ObjType::Button) == 1);
    CHECK(count_type(generate(parse_variant("ClutteredStorage2D-b4"), seed), ObjType::Block) == 4);
    CHECK(count_type(generate(parse_variant("ClutteredRetrieval2D-o2"), seed), ObjType::Block, "obstruction") == 2);
  }
}

TEST_CASE("generated states are valid and certified") {
  for (const auto& name : kVariants) {
    const auto v = parse_variant(name);
    const auto layout = flat_layout(v);
    std::size_t len = 0;
    for (int seed = 0; seed < 60; ++seed) {
      CAPTURE(name);
      CAPTURE(seed);
      const SceneState s = generate(v, static_cast<std::uint64_t>(seed));
      CHECK(certify_feasible(s, v));
      CHECK(configuration_valid(s, v.world));
      const auto flat = flatten(s, layout);
      if (seed == 0) len = flat.size();
      CHECK(flat.size() == len);
      CHECK(unflatten(flat, layout) == s);
    }
  }
}

TEST_CASE("StickButton2D flat length follows the schema") {
  const auto v = parse_variant("StickButton2D-b1");
  const auto flat = flatten(generate(v, 3), flat_layout(v));
  // robot + table + holder + stick + one button
  CHECK(flat.size() == 10 + 10 + 10 + 10 + 9);
}

TEST_CASE("Motion2D passages are wide enough") {
  const RobotSpec spec;
  for (int seed = 0; seed < 100; ++seed) {
    const auto s = generate(parse_variant("Motion2D-p3"), seed);
    for (int i = 0; i < 3; ++i) {
      const auto& lo = s.at("wall" + std::to_string(i) + "_lo");
      const auto& hi = s.at("wall" + std::to_string(i) + "_hi");
      const double gap = (hi.f[bf::kY] - hi.f[bf::kHalfH]) - (lo.f[bf::kY] + lo.f[bf::kHalfH]);
      CHECK(gap >= 2 * spec.base_radius + 0.02);
    }
  }
}

TEST_CASE("certificates reject broken states") {
  auto v = parse_variant("Motion2D-p1");
  SceneState s = generate(v, 4);
  auto& hi = s.at("wall0_hi");
  auto& lo = s.at("wall0_lo");
  // close the passage to 0.5 m
  const double top = lo.f[bf::kY] + lo.f[bf::kHalfH];
  const double new_bottom = top + 0.5;
  const double hi_top = hi.f[bf::kY] + hi.f[bf::kHalfH];
  hi.f[bf::kY] = (new_bottom + hi_top) / 2;
  hi.f[bf::kHalfH] = (hi_top - new_bottom) / 2;
  if (configuration_valid(s, v.world)) CHECK_FALSE(certify_feasible(s, v));

  auto sv = parse_variant("ClutteredStorage2D-b3");
  SceneState st = generate(sv, 1);
  st.at("shelf").f[bf::kHalfW] = 0.3;  // interior 0.6 x 0.8 < 1.5 * 3 * 0.16
  CHECK_FALSE(certify_feasible(st, sv));
}

TEST_CASE("goals") {
  auto v = parse_variant("Motion2D-p0");
  SceneState s = generate(v, 2);
  const auto goal = make_goal(v);
  CHECK_FALSE(goal.predicate(s));
  s.robot().f[rf::kX] = s.at("target_region").f[bf::kX];
  s.robot().f[rf::kY] = s.at("target_region").f[bf::kY];
  CHECK(goal.predicate(s));

  auto ov = parse_variant("Obstruction2D-o0");
  SceneState o = generate(ov, 5);
  const auto& surf = o.at("target_surface");
  auto& blk = o.at("target_block");
  blk.f[bf::kX] = surf.f[bf::kX];
  blk.f[bf::kY] = kFloorTop + blk.f[bf::kHalfH] + 5e-5;
  CHECK(make_goal(ov).predicate(o));
  blk.f[bf::kY] += 1e-3;
  CHECK_FALSE(make_goal(ov).predicate(o));

  auto bv = parse_variant("StickButton2D-b2");
  SceneState b = generate(bv, 5);
  CHECK_FALSE(make_goal(bv).predicate(b));
  b.at("button0").f[btn::kPressed] = 1.0;
  CHECK_FALSE(make_goal(bv).predicate(b));
  b.at("button1").f[btn::kPressed] = 1.0;
  CHECK(make_goal(bv).predicate(b));
}

TEST_CASE("stick contact presses and latches") {
  auto v = parse_variant("StickButton2D-b1");
  EnvInstance env(v);
  SceneState s = env.reset(11);
  // Hold the stick and teleport it over the button.
  s.set_held({"stick"});
  auto& stick = s.at("stick");
  const auto& button = s.at("button0");
  stick.f[bf::kX] = button.f[btn::kX];
  stick.f[bf::kY] = button.f[btn::kY] + button.f[btn::kRadius] + stick.f[bf::kHalfH];
  stick.f[bf::kTheta] = 0.0;
  const auto pressed = resolve_contact_rules(EnvId::StickButton2D, s, s);
  REQUIRE(pressed);
  CHECK(pressed->at("button0").f[btn::kPressed] == 1.0);

  SceneState away = *pressed;
  away.at("stick").f[bf::kY] += 1.0;
  const auto still = resolve_contact_rules(EnvId::StickButton2D, *pressed, away);
  CHECK(still->at("button0").f[btn::kPressed] == 1.0);
}

TEST_CASE("pressed features never decrease along random trajectories") {
  auto v = parse_variant("StickButton2D-b3");
  EnvInstance env(v);
  Rng rng(4);
  for (int ep = 0; ep < 5; ++ep) {
    env.reset(static_cast<std::uint64_t>(ep));
    std::vector<double> prev(3, 0.0);
    for (int t = 0; t < 300; ++t) {
      env.step(ActionDelta({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                            rng.uniform(-1, 1)}));
      for (int i = 0; i < 3; ++i) {
        const double p = env.state().at("button" + std::to_string(i)).f[btn::kPressed];
        CHECK(p >= prev[static_cast<std::size_t>(i)]);
        prev[static_cast<std::size_t>(i)] = p;
      }
    }
  }
}

namespace {

// Holds the hook upright with its leg just above the movable button.
SceneState hook_over_button(std::uint64_t seed) {
  EnvInstance env(parse_variant("PushPullHook2D-b1"));
  SceneState s = env.reset(seed);
  const auto& mb = s.at("movable_button");
  auto& hook = s.at("hook");
  const double shaft = hook.f[hk::kShaft], t = hook.f[hk::kThick];
  // Upright: local x points to +y, leg extends toward -x.
  hook.f[hk::kTheta] = geom::kPi / 2;
  hook.f[hk::kX] = mb.f[btn::kX] + 0.4;
  hook.f[hk::kY] = mb.f[btn::kY] + mb.f[btn::kRadius] - (shaft / 2 - t) + 0.001;
  s.set_held({"hook"});
  return s;
}

}  // namespace

TEST_CASE("hook pulls the movable button by the minimum translation") {
  SceneState s = hook_over_button(3);
  const double y0 = s.at("movable_button").f[btn::kY];
  SceneState after = s;
  after.at("hook").f[hk::kY] -= 0.05;
  const auto pushed = resolve_contact_rules(EnvId::PushPullHook2D, s, after);
  REQUIRE(pushed);
  const double dy = pushed->at("movable_button").f[btn::kY] - y0;
  CHECK(dy == doctest::Approx(-0.049).epsilon(1e-6));
  CHECK(std::abs(dy) <= 0.05 + 1e-6);
  CHECK_FALSE(geom::collides(object_shape(pushed->at("hook")), object_shape(pushed->at("movable_button"))));

  // Moving away leaves the button in place.
  SceneState up = s;
  up.at("hook").f[hk::kY] += 0.05;
  const auto still = resolve_contact_rules(EnvId::PushPullHook2D, s, up);
  CHECK(still->at("movable_button").f[btn::kY] == y0);
}

TEST_CASE("a push into a wall reverts the step") {
  SceneState s = hook_over_button(5);
  const auto& mb = s.at("movable_button");
  const std::array<double, 10> wall{mb.f[btn::kX], mb.f[btn::kY] - mb.f[btn::kRadius] - 0.02, 0, 1.0, 0.01,
                                    0,             0.2,                                       0.2, 0.2, 0};
  s.add("blocker", ObjType::Wall, wall);
  SceneState after = s;
  after.at("hook").f[hk::kY] -= 0.05;
  CHECK_FALSE(resolve_contact_rules(EnvId::PushPullHook2D, s, after).has_value());
}

TEST_CASE("generation failure is reported") {
  // A world too small for any Motion2D-p3 passage layout.
  VariantSpec v = parse_variant("Motion2D-p3");
  v.world = {1.0, 1.0};
  CHECK_THROWS_AS(generate(v, 1), GenerationFailed);
}
