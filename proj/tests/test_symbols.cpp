#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "kinder/symbols.hpp"
#include "support/strips_oracle.hpp"

using namespace kinder;

namespace {

bool has(const std::set<plan::Atom>& atoms, const std::string& pred, std::vector<std::string> args) {
  return atoms.count(plan::Atom{pred, std::move(args)}) > 0;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Object tuples for a skill's typed parameters.
std::vector<ObjectArgs> groundings(const SceneState& s, const SkillDef& sk) {
  std::vector<ObjectArgs> out{{}};
  for (const auto& p : sk.objects) {
    std::vector<ObjectArgs> next;
    for (const auto& prefix : out) {
      for (const auto& o : s.objects()) {
        const auto& d = type_def(o.type);
        if (d.name != p.type && d.parent != p.type && p.type != "object") continue;
        auto a = prefix;
        a.push_back(o.name);
        next.push_back(std::move(a));
      }
    }
    out = std::move(next);
  }
  return out;
}

plan::Atom bind(const plan::Atom& a, const std::vector<plan::TypedName>& params, const ObjectArgs& args) {
  plan::Atom b{a.pred, {}};
  for (const auto& x : a.args) {
    std::string v = x;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].name == x) v = args[i];
    }
    b.args.push_back(v);
  }
  return b;
}

const char* kVariants[] = {"Motion2D-p1",           "Obstruction2D-o2",   "ClutteredRetrieval2D-o2",
                           "ClutteredStorage2D-b2", "PushPullHook2D-b1", "StickButton2D-b3"};

}  // namespace

TEST_CASE("a block resting on a surface is On it, and not once lifted") {
  auto s = generate(parse_variant("Obstruction2D-o0"), 5);
  auto& b = s.at("target_block");
  const auto& surf = s.at("target_surface");
  const double top = surf.f[bf::kY] + surf.f[bf::kHalfH];
  b.f[bf::kX] = surf.f[bf::kX];
  b.f[bf::kY] = top + b.f[bf::kHalfH] + 5e-5;
  b.f[bf::kTheta] = 0.0;
  const auto& preds = predicates_for(EnvId::Obstruction2D);
  CHECK(has(abstract(s, preds), "On", {"target_block", "target_surface"}));
  b.f[bf::kY] += 0.1;
  CHECK_FALSE(has(abstract(s, preds), "On", {"target_block", "target_surface"}));
}

TEST_CASE("an empty hand gives HandEmpty and no Holding") {
  for (const auto* v : kVariants) {
    const auto vs = parse_variant(v);
    const auto s = generate(vs, 2);
    const auto atoms = abstract(s, predicates_for(vs.env));
    CHECK(has(atoms, "HandEmpty", {"robot"}));
    CHECK(std::none_of(atoms.begin(), atoms.end(), [](const plan::Atom& a) { return a.pred == "Holding"; }));
  }
}

TEST_CASE("a latched button is Pressed") {
  auto s = generate(parse_variant("StickButton2D-b3"), 1);
  const auto& preds = predicates_for(EnvId::StickButton2D);
  CHECK_FALSE(has(abstract(s, preds), "Pressed", {"button1"}));
  s.at("button1").f[btn::kPressed] = 1.0;
  const auto atoms = abstract(s, preds);
  CHECK(has(atoms, "Pressed", {"button1"}));
  CHECK_FALSE(has(atoms, "Pressed", {"button0"}));
}

TEST_CASE("abstract is deterministic") {
  const auto s = generate(parse_variant("ClutteredRetrieval2D-o2"), 7);
  const auto& preds = predicates_for(EnvId::ClutteredRetrieval2D);
  CHECK(abstract(s, preds) == abstract(s, preds));
}

TEST_CASE("skill inventories") {
  const auto m = skill_registry(EnvId::Motion2D);
  REQUIRE(m.size() == 1);
  CHECK(m[0].name == "MoveTo");
  const auto sb = skill_registry(EnvId::StickButton2D);
  CHECK(find_skill(sb, "PressWithStick") != nullptr);
  CHECK(find_skill(sb, "PressButton") != nullptr);
  CHECK(find_skill(sb, "PickStick") != nullptr);
  const auto pp = skill_registry(EnvId::PushPullHook2D);
  CHECK(find_skill(pp, "PickHook") != nullptr);
  CHECK(find_skill(pp, "PushButtonWithHook") != nullptr);
  for (auto env : {EnvId::Obstruction2D, EnvId::ClutteredRetrieval2D, EnvId::ClutteredStorage2D}) {
    const auto sk = skill_registry(env);
    CHECK(find_skill(sk, "Pick") != nullptr);
    CHECK(find_skill(sk, "Place") != nullptr);
  }
}

TEST_CASE("operators reference only registered predicates with matching arity") {
  for (auto env : all_envs()) {
    const auto& preds = predicates_for(env);
    for (const auto& sk : skill_registry(env)) {
      CHECK(sk.op.params == sk.objects);
      CHECK(sk.op.name == sk.name);
      CHECK(sk.param_names.size() == sk.box.lo.size());
      for (const auto* list : {&sk.op.pre, &sk.op.add, &sk.op.del}) {
        for (const auto& a : *list) {
          const auto it = std::find_if(preds.begin(), preds.end(), [&](const auto& p) { return p.name == a.pred; });
          INFO(sk.name << " uses " << a.str());
          REQUIRE(it != preds.end());
          CHECK(it->types.size() == a.args.size());
          for (const auto& x : a.args) {
            const bool is_param = std::any_of(sk.objects.begin(), sk.objects.end(),
                                              [&](const auto& t) { return t.name == x; });
            CHECK((is_param || x == "robot"));
          }
        }
      }
    }
  }
}

TEST_CASE("goal atoms use registered predicates") {
  for (const auto* v : kVariants) {
    const auto vs = parse_variant(v);
    const auto s = generate(vs, 0);
    const auto& preds = predicates_for(vs.env);
    for (const auto& a : goal_atoms(vs.env, s)) {
      CHECK(std::any_of(preds.begin(), preds.end(), [&](const auto& p) { return p.name == a.pred; }));
      for (const auto& x : a.args) CHECK(s.find(x) != nullptr);
    }
  }
}

TEST_CASE("sampled parameters stay inside the box") {
  for (const auto* v : kVariants) {
    const auto vs = parse_variant(v);
    const auto skills = skill_registry(SkillEnv{vs.env, {}, vs.world});
    for (int seed = 0; seed < 4; ++seed) {
      const auto s = generate(vs, static_cast<std::uint64_t>(seed));
      Rng rng(static_cast<std::uint64_t>(seed));
      for (const auto& sk : skills) {
        for (const auto& args : groundings(s, sk)) {
          for (int k = 0; k < 5; ++k) {
            const auto p = sk.sampler(s, args, rng);
            INFO(v << " " << sk.name);
            CHECK(sk.box.contains(p));
          }
        }
      }
    }
  }
}

TEST_CASE("operator effects hold after every successful option") {
  // Random walks over initiable (skill, objects, sample) triples.
  for (const auto* v : kVariants) {
    const auto vs = parse_variant(v);
    const auto skills = skill_registry(SkillEnv{vs.env, {}, vs.world});
    const auto& preds = predicates_for(vs.env);
    int triples = 0, successes = 0, seed = 0;
    Rng rng(99);
    while (triples < 200) {
      EnvInstance env(vs);
      env.reset(static_cast<std::uint64_t>(seed++));
      for (int depth = 0; depth < 6 && triples < 200; ++depth) {
        std::vector<std::pair<const SkillDef*, ObjectArgs>> cands;
        for (const auto& sk : skills) {
          for (auto& args : groundings(env.state(), sk)) {
            if (sk.initiable(env.state(), args)) cands.emplace_back(&sk, std::move(args));
          }
        }
        if (cands.empty()) break;
        const auto& [sk, args] = cands[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cands.size()) - 1))];
        const auto before = abstract(env.state(), preds);
        for (const auto& a : sk->op.pre) REQUIRE(before.count(bind(a, sk->op.params, args)));
        const auto p = sk->sampler(env.state(), args, rng);
        const auto res = execute_option(env, *sk, args, p, 500, rng.next_u64());
        ++triples;
        if (!res.success) continue;
        ++successes;
        const auto after = abstract(env.state(), preds);
        for (const auto& a : sk->op.add) {
          INFO(v << " " << sk->name << " add " << bind(a, sk->op.params, args).str());
          CHECK(after.count(bind(a, sk->op.params, args)));
        }
        for (const auto& a : sk->op.del) {
          INFO(v << " " << sk->name << " del " << bind(a, sk->op.params, args).str());
          CHECK_FALSE(after.count(bind(a, sk->op.params, args)));
        }
      }
    }
    INFO(v << ": " << successes << " of " << triples);
    CHECK(successes >= 40);
  }
}

TEST_CASE("MoveTo reaches the target region") {
  const auto vs = parse_variant("Motion2D-p0");
  EnvInstance env(vs);
  env.reset(11);
  const auto skills = skill_registry(EnvId::Motion2D);
  const auto res = execute_option(env, skills[0], {"robot", "target_region"}, {0.0});
  CHECK(res.success);
  CHECK(res.states.size() == res.actions.size() + 1);
  const auto& r = env.state().at("target_region");
  const auto& robot = env.state().robot();
  CHECK(std::abs(robot.f[rf::kX] - r.f[bf::kX]) <= r.f[bf::kHalfW]);
  CHECK(std::abs(robot.f[rf::kY] - r.f[bf::kY]) <= r.f[bf::kHalfH]);
  CHECK(env.check_goal());
}

TEST_CASE("Pick leaves the robot Holding the block") {
  const auto vs = parse_variant("ClutteredStorage2D-b1");
  const auto skills = skill_registry(EnvId::ClutteredStorage2D);
  const auto* pick = find_skill(skills, "Pick");
  int ok = 0;
  for (int seed = 0; seed < 5; ++seed) {
    EnvInstance env(vs);
    env.reset(static_cast<std::uint64_t>(seed));
    // Start next to the block so the option is a short approach.
    auto s = env.state();
    const auto& b = s.at("block0");
    RobotConfig q = robot_config(s);
    for (double dx : {-1.0, 1.0}) {
      q.pose = {b.f[bf::kX] + dx, b.f[bf::kY], 0.0};
      if (configuration_valid(with_config(s, q), vs.world)) break;
    }
    env.set_state(with_config(s, q));
    Rng rng(static_cast<std::uint64_t>(seed));
    const auto p = pick->sampler(env.state(), {"robot", "block0"}, rng);
    const auto res = execute_option(env, *pick, {"robot", "block0"}, p);
    if (!res.success) continue;
    ++ok;
    const auto atoms = abstract(env.state(), predicates_for(EnvId::ClutteredStorage2D));
    CHECK(has(atoms, "Holding", {"robot", "block0"}));
    CHECK_FALSE(has(atoms, "HandEmpty", {"robot"}));
  }
  CHECK(ok >= 4);
}

TEST_CASE("Place into a full shelf fails without throwing") {
  const auto vs = parse_variant("ClutteredStorage2D-b2");
  const auto skills = skill_registry(EnvId::ClutteredStorage2D);
  const auto* pick = find_skill(skills, "Pick");
  const auto* place = find_skill(skills, "Place");
  EnvInstance env(vs);
  env.reset(4);
  // block0 starts on the shelf; block1 on the floor.
  Rng rng(1);
  const auto p = pick->sampler(env.state(), {"robot", "block1"}, rng);
  REQUIRE(execute_option(env, *pick, {"robot", "block1"}, p).success);
  // Fill the other slot.
  auto s = env.state();
  const auto& shelf = s.at("shelf");
  const auto& b0 = s.at("block0");
  const double left = shelf.f[bf::kX] - shelf.f[bf::kHalfW];
  const double slot0 = left + 0.45, slot1 = left + 0.95;
  const double other = std::abs(b0.f[bf::kX] - slot0) < 0.1 ? slot1 : slot0;
  auto f = b0.f;
  f[bf::kX] = other;
  s.add("block9", ObjType::Block, std::span<const double>(f.data(), b0.dim()));
  env.set_state(s);
  OptionResult res;
  CHECK_NOTHROW(res = execute_option(env, *place, {"robot", "block1", "shelf"}, {0.5, 0.5, 0.0}));
  CHECK_FALSE(res.success);
  CHECK_FALSE(res.failure.empty());
}

TEST_CASE("an option that cannot start throws InitiationFailed") {
  const auto vs = parse_variant("ClutteredStorage2D-b1");
  EnvInstance env(vs);
  env.reset(0);
  const auto skills = skill_registry(EnvId::ClutteredStorage2D);
  // Place needs Holding.
  CHECK_THROWS_AS(execute_option(env, *find_skill(skills, "Place"), {"robot", "block0", "shelf"}, {0.5, 0.5, 0.0}),
                  InitiationFailed);
  CHECK(env.state() == generate(vs, 0));
}

TEST_CASE("the step cap ends an option as a failure") {
  const auto vs = parse_variant("Motion2D-p0");
  EnvInstance env(vs);
  env.reset(11);
  const auto skills = skill_registry(EnvId::Motion2D);
  const auto res = execute_option(env, skills[0], {"robot", "target_region"}, {0.0}, 3);
  CHECK_FALSE(res.success);
  CHECK(res.actions.size() == 3);
}

// ---------------------------------------------------------------- export

TEST_CASE("the StickButton2D domain matches the fixture") {
  const auto text = read_file("tests/fixtures/stickbutton2d.kd-pddl");
  REQUIRE_FALSE(text.empty());
  const auto parsed = plan::parse_domain(text);
  const auto d = domain_for(EnvId::StickButton2D);
  CHECK(parsed.operators == d.operators);
  CHECK(parsed == d);
}

TEST_CASE("every domain round-trips through the writer") {
  for (auto env : all_envs()) {
    const auto d = domain_for(env);
    CHECK_NOTHROW(plan::validate(d));
    CHECK(plan::parse_domain(plan::serialize(d)) == d);
  }
}

TEST_CASE("problems round-trip and ground to the exhaustive count") {
  const auto vs = parse_variant("StickButton2D-b3");
  const auto d = domain_for(vs.env);
  for (int seed = 0; seed < 5; ++seed) {
    const auto s = generate(vs, static_cast<std::uint64_t>(seed));
    const auto p = problem_for(vs.env, s);
    CHECK(plan::parse_problem(plan::serialize(p), d) == p);
    CHECK(plan::ground(d, p).ops.size() == oracle::exhaustive_ground_count(d, p));
  }
}

TEST_CASE("a satisfied goal gives the empty abstract plan") {
  const auto vs = parse_variant("StickButton2D-b1");
  auto s = generate(vs, 0);
  s.at("button0").f[btn::kPressed] = 1.0;
  const auto d = domain_for(vs.env);
  const auto gp = plan::ground(d, problem_for(vs.env, s));
  plan::PlanStream stream(gp, 1, std::chrono::seconds(5));
  const auto ap = stream.next();
  REQUIRE(ap);
  CHECK(ap->ops.empty());
}

TEST_CASE("controllers are rendered as ParameterizedController lines") {
  const auto text = controllers_block(EnvId::Motion2D);
  CHECK(text.rfind("ParameterizedController(name=MoveTo, types=[robot, region], "
                   "params_space=Box([-3.142], [3.142], (1,), float32))\n",
                   0) == 0);
  const auto sb = controllers_block(EnvId::StickButton2D);
  CHECK(sb.find("ParameterizedController(name=PickStick, types=[robot, stick], "
                "params_space=Box([0.0], [1.0], (1,), float32))") != std::string::npos);
  CHECK(type_hierarchy_block(EnvId::StickButton2D).find("- movable\n") != std::string::npos);
}
