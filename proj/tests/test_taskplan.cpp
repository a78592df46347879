#include "doctest.h"

#include <thread>

#include "kinder/rng.hpp"
#include "kinder/taskplan.hpp"
#include "support/strips_oracle.hpp"

using namespace kinder;
using namespace kinder::plan;

namespace {

const char* kBlocks = R"((define (domain blocks)
  (:requirements :strips :typing)
  (:types block - object)
  (:predicates (On ?x - block ?y - block) (OnTable ?x - block) (Clear ?x - block)
               (HandEmpty) (Holding ?x - block))
  (:action PickUp
    :parameters (?x - block)
    :precondition (and (Clear ?x) (OnTable ?x) (HandEmpty))
    :effect (and (Holding ?x) (not (Clear ?x)) (not (OnTable ?x)) (not (HandEmpty))))
  (:action PutDown
    :parameters (?x - block)
    :precondition (and (Holding ?x))
    :effect (and (Clear ?x) (OnTable ?x) (HandEmpty) (not (Holding ?x))))
  (:action Stack
    :parameters (?x - block ?y - block)
    :precondition (and (Holding ?x) (Clear ?y))
    :effect (and (On ?x ?y) (Clear ?x) (HandEmpty) (not (Holding ?x)) (not (Clear ?y))))
  (:action Unstack
    :parameters (?x - block ?y - block)
    :precondition (and (On ?x ?y) (Clear ?x) (HandEmpty))
    :effect (and (Holding ?x) (Clear ?y) (not (On ?x ?y)) (not (Clear ?x)) (not (HandEmpty)))))
)";

const char* kTower = R"((define (problem tower)
  (:domain blocks)
  (:objects a b c - block)
  (:init (OnTable a) (OnTable b) (On c a) (Clear b) (Clear c) (HandEmpty))
  (:goal (and (On a b) (On b c))))
)";

const char* kSwap = R"((define (problem swap)
  (:domain blocks)
  (:objects a b c - block)
  (:init (On a b) (On b c) (OnTable c) (Clear a) (HandEmpty))
  (:goal (and (On c b) (On b a))))
)";

const char* kChain = R"((define (domain chain)
  (:predicates (A) (B) (C))
  (:action ab :parameters () :precondition (and (A)) :effect (and (B)))
  (:action bc :parameters () :precondition (and (B)) :effect (and (C))))
)";

GroundProblem chain_problem(const std::string& goal) {
  const Domain d = parse_domain(kChain);
  const Problem p = parse_problem("(define (problem c) (:domain chain) (:init (A)) (:goal (and " + goal + ")))", d);
  return ground(d, p);
}

}  // namespace

TEST_CASE("round trip through the writer") {
  const Domain d = parse_domain(kBlocks);
  CHECK(d.operators.size() == 4);
  CHECK(d.operators[2].params.size() == 2);
  CHECK(d.operators[0].del.size() == 3);
  const Domain d2 = parse_domain(serialize(d));
  CHECK(d2 == d);
  CHECK(serialize(d2) == serialize(d));

  const Problem p = parse_problem(kTower, d);
  const Problem p2 = parse_problem(serialize(p), d);
  CHECK(p2 == p);
}

TEST_CASE("grouped parameter types") {
  const Domain d = parse_domain(R"((define (domain g)
    (:types robot thing - object box - thing)
    (:constants robot - robot)
    (:predicates (At ?a ?b - thing))
    (:action Go :parameters (?a ?b - box) :precondition (and) :effect (and (At ?a ?b))))
  )");
  REQUIRE(d.operators.size() == 1);
  CHECK(d.operators[0].params[0].type == "box");
  CHECK(d.predicates[0].params[0].type == "thing");
  CHECK(d.is_subtype("box", "thing"));
  CHECK(d.is_subtype("box", "object"));
  CHECK_FALSE(d.is_subtype("robot", "thing"));
  CHECK(parse_domain(serialize(d)) == d);
}

TEST_CASE("a missing paren in an effect is located") {
  const std::string text =
      "(define (domain broken)\n"
      "  (:predicates (P) (Q))\n"
      "  (:action a\n"
      "    :parameters ()\n"
      "    :precondition (and (P))\n"
      "    :effect (and (Q) (not (P))\n"
      "  (:action b\n"
      "    :parameters ()\n"
      "    :effect (and (P))))\n";
  try {
    parse_domain(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 7);
    CHECK(e.column == 4);
    CHECK(std::find(e.expected.begin(), e.expected.end(), "predicate name or 'not'") != e.expected.end());
  }

  try {
    parse_domain("(define (domain d)\n  (:predicates (P))\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(e.expected.size() == 2);
  }
}

TEST_CASE("structural validation") {
  CHECK_THROWS_AS(parse_domain("(define (domain d) (:predicates (P)) (:action a :parameters () :effect (and (R))))"),
                  KinderError);
  CHECK_THROWS_AS(
      parse_domain("(define (domain d) (:predicates (P ?x)) (:action a :parameters (?y) :effect (and (P ?z))))"),
      KinderError);
  CHECK_THROWS_AS(parse_domain("(define (domain d) (:predicates (P)) (:action a :parameters () :effect (and (P) (not (P)))))"),
                  KinderError);
}

TEST_CASE("grounding is the product of the arities") {
  const Domain d = parse_domain(R"((define (domain pairs)
    (:types thing - object)
    (:predicates (R ?a - thing ?b - thing))
    (:action link :parameters (?a - thing ?b - thing) :precondition (and) :effect (and (R ?a ?b))))
  )");
  const Problem p = parse_problem("(define (problem q) (:domain pairs) (:objects x y z - thing) (:init) (:goal (and (R x y))))", d);
  CHECK(ground(d, p).ops.size() == 9);
  CHECK(oracle::exhaustive_ground_count(d, p) == 9);
}

TEST_CASE("static pruning removes operators with unreachable preconditions") {
  const Domain d = parse_domain(R"((define (domain s)
    (:predicates (Link ?a ?b) (At ?a))
    (:action go :parameters (?a ?b) :precondition (and (At ?a) (Link ?a ?b)) :effect (and (At ?b) (not (At ?a)))))
  )");
  const Problem p = parse_problem(
      "(define (problem s) (:domain s) (:objects u v w) (:init (At u) (Link u v) (Link v w)) (:goal (and (At w))))", d);
  const auto gp = ground(d, p);
  CHECK(gp.ops.size() == 2);
  CHECK(oracle::exhaustive_ground_count(d, p, false) == 9);
  CHECK(oracle::exhaustive_ground_count(d, p) == 2);
}

TEST_CASE("hff on a chain") {
  const auto gp = chain_problem("(C)");
  const auto s0 = make_state(gp.atoms.size(), gp.init);
  CHECK(hff(s0, gp.goal, gp) == 2);
  CHECK(hff(s0, gp.init, gp) == 0);

  const Domain d = parse_domain(kChain);
  const Problem p = parse_problem("(define (problem c) (:domain chain) (:init (B)) (:goal (and (A))))", d);
  const auto gp2 = ground(d, p);
  CHECK(hff(make_state(gp2.atoms.size(), gp2.init), gp2.goal, gp2) == kInfinity);
}

TEST_CASE("hff supporter ties go to the smaller operator name") {
  const Domain d = parse_domain(R"((define (domain t)
    (:predicates (S) (G) (X) (Y))
    (:action zeta :parameters () :precondition (and (S)) :effect (and (G) (X)))
    (:action alpha :parameters () :precondition (and (S)) :effect (and (G) (Y))))
  )");
  const auto gp = ground(d, parse_problem("(define (problem t) (:domain t) (:init (S)) (:goal (and (G))))", d));
  const auto rp = relaxed_plan(make_state(gp.atoms.size(), gp.init), gp.goal, gp);
  REQUIRE(rp);
  REQUIRE(rp->size() == 1);
  CHECK(gp.ops[static_cast<std::size_t>((*rp)[0])].name == "(alpha)");
}

TEST_CASE("hff against the optimal relaxed plan") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto gp = oracle::random_task(rng, static_cast<int>(rng.uniform_int(3, 12)));
    const auto s = make_state(gp.atoms.size(), gp.init);
    const int h = hff(s, gp.goal, gp);
    const int hp = oracle::hplus(oracle::mask_of(gp.init), gp);
    CAPTURE(trial);
    if (hp < 0) {
      CHECK(h == kInfinity);
      continue;
    }
    CHECK((h == 0) == (hp == 0));
    CHECK(h >= hp);
    const auto rp = relaxed_plan(s, gp.goal, gp);
    REQUIRE(rp);
    CHECK(oracle::relaxed_plan_valid(oracle::mask_of(gp.init), gp, *rp));
  }
}

TEST_CASE("first GBFS plan is optimal on the stacking toy") {
  const Domain d = parse_domain(kBlocks);
  for (const char* text : {kTower, kSwap}) {
    const auto gp = ground(d, parse_problem(text, d));
    PlanStream stream(gp, 1, std::chrono::seconds(10));
    const auto plan = stream.next();
    REQUIRE(plan);
    CHECK(oracle::plan_valid(gp, plan->ops));
    CHECK(static_cast<int>(plan->ops.size()) == oracle::bfs_optimum(gp));
    CHECK(stream.stats().expanded <= oracle::ucs_expansions(gp));
    CHECK_FALSE(stream.next());
  }
}

TEST_CASE("the stream yields distinct valid plans up to the cap") {
  const Domain d = parse_domain(kBlocks);
  const auto gp = ground(d, parse_problem(kTower, d));
  PlanStream stream(gp, 10, std::chrono::seconds(30));
  std::vector<AbstractPlan> plans;
  while (auto p = stream.next()) plans.push_back(*p);
  CHECK(plans.size() == 10);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    CHECK(oracle::plan_valid(gp, plans[i].ops));
    for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(plans[i] == plans[j]);
  }
}

TEST_CASE("GBFS expands no more than uniform-cost search on random tasks") {
  Rng rng(77);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto gp = oracle::random_task(rng, 10);
    const int opt = oracle::bfs_optimum(gp);
    PlanStream stream(gp, 3, std::chrono::seconds(5));
    const auto plan = stream.next();
    CAPTURE(trial);
    CHECK(plan.has_value() == (opt >= 0));
    if (!plan) continue;
    ++solved;
    CHECK(oracle::plan_valid(gp, plan->ops));
    CHECK(static_cast<int>(plan->ops.size()) >= opt);
  }
  CHECK(solved > 20);
}

TEST_CASE("the deadline is honoured") {
  // A wide problem with no solution: every binding adds a fresh fact but the
  // goal needs an atom nothing adds, except through a huge state space.
  std::string objs;
  for (int i = 0; i < 18; ++i) objs += " o" + std::to_string(i);
  const Domain d = parse_domain(R"((define (domain wide)
    (:predicates (Free ?x) (Mark ?x) (Done) (Ready))
    (:action mark :parameters (?x) :precondition (and (Free ?x)) :effect (and (Mark ?x) (not (Free ?x))))
    (:action unmark :parameters (?x) :precondition (and (Mark ?x)) :effect (and (Free ?x) (not (Mark ?x))))
    (:action finish :parameters () :precondition (and (Ready)) :effect (and (Done))))
  )");
  std::string init;
  for (int i = 0; i < 18; ++i) init += " (Free o" + std::to_string(i) + ")";
  const Problem p = parse_problem("(define (problem w) (:domain wide) (:objects" + objs + ") (:init" + init +
                                      " (Ready)) (:goal (and (Done) (Mark o0) (Free o0))))",
                                  d);
  const auto gp = ground(d, p);
  PlanStream stream(gp, 1, std::chrono::milliseconds(100));
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_FALSE(stream.next());
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(dt < 0.150);
  CHECK(stream.stats().timed_out);
}
