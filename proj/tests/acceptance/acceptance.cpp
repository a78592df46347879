// One line per acceptance criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "CLI11.hpp"

#include "kinder/baselines.hpp"
#include "kinder/bench.hpp"
#include "kinder/demos.hpp"
#include "kinder/symbols.hpp"
#include "kinder/taskplan.hpp"
#include "support/geom_oracle.hpp"
#include "support/strips_oracle.hpp"

#ifndef KINDER_CLI_PATH
#define KINDER_CLI_PATH "kinder"
#endif

using namespace kinder;
using namespace kinder::bench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

RunSpec spec(Baseline b, const std::string& variant, int seeds, int episodes, double obs_sigma = 0.0) {
  RunSpec s;
  s.baseline = b;
  s.variant = variant;
  s.num_seeds = seeds;
  s.episodes_per_seed = episodes;
  s.obs_sigma = obs_sigma;
  return s;
}

MetricRow run(const RunSpec& s, const PlannerOptions& opts = {}) { return compute_metrics(run_matrix({s}, opts)); }

std::string describe(const MetricRow& m) {
  return "SR " + fmt("%.2f", m.sr) + ", Rwd " + (m.rwd ? fmt("%.1f", *m.rwd) : std::string("--")) + ", Inf-Time " +
         fmt("%.4f", m.inf_time_s) + " s";
}

// ---------------------------------------------------------------- planners

// Shared with the scaling criterion.
std::optional<MetricRow> g_stickbutton_b1;

MetricRow stickbutton_b1() {
  if (!g_stickbutton_b1) g_stickbutton_b1 = run(spec(Baseline::BP, "StickButton2D-b1", 5, 50));
  return *g_stickbutton_b1;
}

Outcome bp_motion() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = run(spec(Baseline::BP, "Motion2D-p0", 5, 50));
  const double t = seconds_since(t0);
  const bool ok = m.sr >= 0.95 && m.rwd && *m.rwd >= -80.0 && *m.rwd <= -25.0 && t < 300.0;
  return {ok, describe(m) + " over " + std::to_string(m.episodes) + " episodes in " + fmt("%.1f", t) + " s"};
}

Outcome bp_stickbutton() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = stickbutton_b1();
  const double t = seconds_since(t0);
  return {m.sr >= 0.80 && t < 900.0, describe(m) + " in " + fmt("%.1f", t) + " s"};
}

Outcome bp_scaling() {
  const auto b1 = stickbutton_b1();
  const auto b3 = run(spec(Baseline::BP, "StickButton2D-b3", 5, 50));
  const auto b5 = run(spec(Baseline::BP, "StickButton2D-b5", 5, 50));
  const bool sr_ok = b1.sr >= b3.sr && b3.sr >= b5.sr;
  const bool time_ok = b1.inf_time_s < b3.inf_time_s && b3.inf_time_s < b5.inf_time_s;
  const double ratio = b5.inf_time_s / b1.inf_time_s;
  std::ostringstream d;
  d << "SR " << fmt("%.2f", b1.sr) << "/" << fmt("%.2f", b3.sr) << "/" << fmt("%.2f", b5.sr) << ", Inf-Time "
    << fmt("%.4f", b1.inf_time_s) << "/" << fmt("%.4f", b3.inf_time_s) << "/" << fmt("%.4f", b5.inf_time_s)
    << " s, b5/b1 " << fmt("%.1f", ratio) << "x";
  return {sr_ok && time_ok && ratio >= 5.0, d.str()};
}

Outcome mpc_motion() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = run(spec(Baseline::MPC, "Motion2D-p0", 2, 20));
  const double t = seconds_since(t0);
  return {m.sr >= 0.50 && t < 1800.0, describe(m) + " in " + fmt("%.1f", t) + " s"};
}

Outcome noise() {
  std::vector<double> sr;
  for (double sigma : {0.0, 0.01, 0.1}) sr.push_back(run(spec(Baseline::BP, "StickButton2D-b1", 1, 50, sigma)).sr);
  const bool ok = sr[0] > sr[1] && sr[1] > sr[2];
  return {ok, "BP StickButton2D-b1 SR at obs sigma 0/0.01/0.1: " + fmt("%.2f", sr[0]) + "/" + fmt("%.2f", sr[1]) +
                  "/" + fmt("%.2f", sr[2])};
}

// ---------------------------------------------------------------- symbols

// Forward STRIPS simulation over plain atom sets.
bool simulate(const plan::GroundProblem& gp, const std::vector<int>& ops) {
  std::set<int> s(gp.init.begin(), gp.init.end());
  for (int i : ops) {
    const auto& op = gp.ops.at(static_cast<std::size_t>(i));
    for (int p : op.pre) {
      if (!s.count(p)) return false;
    }
    for (int d : op.del) s.erase(d);
    for (int a : op.add) s.insert(a);
  }
  for (int g : gp.goal) {
    if (!s.count(g)) return false;
  }
  return true;
}

Outcome symbolic() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(786);
  int h_bad = 0, h_exact = 0, solved = 0, plans = 0, plan_bad = 0, solv_bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto gp = oracle::random_task(rng, static_cast<int>(rng.uniform_int(3, 12)));
    const auto s = plan::make_state(gp.atoms.size(), gp.init);
    const int h = plan::hff(s, gp.goal, gp);
    const int hp = oracle::hplus(oracle::mask_of(gp.init), gp);
    bool ok = (hp < 0) == (h == plan::kInfinity) && (hp == 0) == (h == 0);
    if (hp >= 0 && h != plan::kInfinity) {
      ok = ok && h >= hp;
      const auto rp = plan::relaxed_plan(s, gp.goal, gp);
      ok = ok && rp && oracle::relaxed_plan_valid(oracle::mask_of(gp.init), gp, *rp) &&
           static_cast<int>(rp->size()) == h;
      h_exact += h == hp;
    }
    h_bad += !ok;

    plan::PlanStream stream(gp, 3, std::chrono::seconds(5));
    bool any = false;
    while (const auto p = stream.next()) {
      any = true;
      ++plans;
      plan_bad += !simulate(gp, p->ops) || !oracle::plan_valid(gp, p->ops);
    }
    solv_bad += any != (oracle::bfs_optimum(gp) >= 0);
    solved += any;
  }

  // Env domains: plans from real resets, grounding against enumeration.
  int ground_checked = 0, ground_bad = 0;
  for (EnvId env : all_envs()) {
    const auto d = plan::Domain(domain_for(env));
    const std::string v = std::string(env_name(env)) + "-" + variant_letter(env) + (env == EnvId::Motion2D || env == EnvId::PushPullHook2D ? "1" : "2");
    const auto vs = parse_variant(v);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto p = problem_for(env, generate(vs, seed));
      const auto gp = plan::ground(d, p);
      ++ground_checked;
      ground_bad += gp.ops.size() != oracle::exhaustive_ground_count(d, p);
      plan::PlanStream stream(gp, 3, std::chrono::seconds(10));
      while (const auto pl = stream.next()) {
        ++plans;
        plan_bad += !simulate(gp, pl->ops);
      }
    }
  }
  const double t = seconds_since(t0);
  std::ostringstream d;
  d << "hff mismatches " << h_bad << "/200 (hff == h+ on " << h_exact << "), GBFS plans invalid " << plan_bad << "/"
    << plans << ", solvability mismatches " << solv_bad << " (" << solved << " solvable), ground count mismatches "
    << ground_bad << "/" << ground_checked << ", " << fmt("%.1f", t) << " s";
  return {h_bad == 0 && plan_bad == 0 && solv_bad == 0 && ground_bad == 0 && plans > 0 && t < 60.0, d.str()};
}

// ---------------------------------------------------------------- replay

std::string bits(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof u);
  return std::to_string(u);
}

Outcome determinism() {
  const std::vector<std::string> variants = {
      "Motion2D-p0",       "Motion2D-p3",          "Obstruction2D-o0",      "Obstruction2D-o3",
      "ClutteredStorage2D-b1", "ClutteredStorage2D-b3", "PushPullHook2D-b1", "StickButton2D-b1",
      "StickButton2D-b4"};
  Rng rng(787);
  int mismatched = 0;
  for (int ep = 0; ep < 100; ++ep) {
    const auto vs = parse_variant(variants[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(variants.size()) - 1))]);
    const std::uint64_t seed = rng.next_u64();
    const int len = static_cast<int>(rng.uniform_int(20, 150));
    std::vector<ActionDelta> actions;
    for (int i = 0; i < len; ++i) {
      actions.push_back(ActionDelta({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                                     static_cast<double>(rng.uniform_int(-1, 1))}));
    }
    auto trace = [&](const std::vector<ActionDelta>& acts) {
      EnvInstance env(vs);
      std::string t = to_json(env.reset(seed)) + "\n";
      for (const auto& a : acts) {
        const auto out = env.step(a);
        t += to_json(env.state()) + " " + bits(out.reward) + (out.terminated ? " T" : "") + "\n";
      }
      return t;
    };
    const auto a = trace(actions);
    // The second pass goes through the demo file format.
    const auto rec = demos::record_actions(vs, seed, actions, demos::Source::Teleop, "2026-01-01T00:00:00Z");
    const auto back = demos::parse_jsonl(demos::to_jsonl(rec));
    const auto b = trace(back.steps);
    const auto r = demos::replay(back);
    EnvInstance env(vs);
    env.reset(seed);
    for (const auto& act : back.steps) env.step(act);
    mismatched += a != b || !(r.final_state == env.state());
  }

  // BP demos across envs, checked by the command-line verifier.
  const auto dir = fs::temp_directory_path() / ("kinder-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const std::vector<std::string> demo_variants = {"Motion2D-p1", "Obstruction2D-o1", "ClutteredStorage2D-b1",
                                                  "StickButton2D-b1", "StickButton2D-b2"};
  int written = 0;
  for (const auto& v : demo_variants) {
    int got = 0;
    for (std::uint64_t base = 1; got < 20 && base < 6; ++base) {
      auto ds = demos::generate_dataset(demos::bilevel_planner(), parse_variant(v), 20, base * 1000);
      if (static_cast<int>(ds.demos.size()) > 20 - got) ds.demos.resize(static_cast<std::size_t>(20 - got));
      got += static_cast<int>(demos::write_dataset(dir.string(), ds).size());
    }
    written += got;
  }
  std::string cmd = std::string(KINDER_CLI_PATH) + " demo verify";
  for (const auto& e : fs::directory_iterator(dir)) cmd += " '" + e.path().string() + "'";
  cmd += " > '" + (dir / "verify.log").string() + "' 2>&1";
  const int rc = std::system(cmd.c_str());
  fs::remove_all(dir);
  std::ostringstream d;
  d << "random episodes replayed with mismatches " << mismatched << "/100; " << written
    << " BP demos, demo verify exit status " << rc;
  return {mismatched == 0 && written == 100 && rc == 0, d.str()};
}

// ---------------------------------------------------------------- geometry

geom::PlacedShape random_shape(Rng& rng, bool convex_only) {
  using namespace geom;
  const Pose2 pose{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-kPi, kPi)};
  switch (rng.uniform_int(0, convex_only ? 1 : 2)) {
    case 0: return {Circle{rng.uniform(0.1, 1.0)}, pose};
    case 1: return {Rect{rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0)}, pose};
    default: {
      const double shaft = rng.uniform(0.5, 2.0), leg = rng.uniform(0.2, 0.8), t = rng.uniform(0.05, 0.2);
      Compound c{{{Rect{shaft / 2, t / 2}, {}}, {Rect{t / 2, leg / 2}, {shaft / 2 - t / 2, t / 2 + leg / 2, 0}}}};
      return {c, pose};
    }
  }
}

Outcome geometry() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(788);
  const double pitch = 1e-3;
  int cases = 0, decided = 0, bad = 0;
  int n_collide = 0, n_contain = 0, n_mtv = 0;
  std::string first_bad;
  auto fail = [&](const std::string& what) {
    ++bad;
    if (first_bad.empty()) first_bad = what + " at case " + std::to_string(cases);
  };
  for (; cases < 10000; ++cases) {
    const int kind = cases % 3;
    if (kind == 0) {
      const auto a = random_shape(rng, false), b = random_shape(rng, false);
      const auto v = oracle::overlap_verdict(a, b, pitch);
      ++n_collide;
      if (v == oracle::Verdict::Band) continue;
      ++decided;
      if (geom::collides(a, b, 0.0) != (v == oracle::Verdict::Yes)) fail("collides");
    } else if (kind == 1) {
      const geom::PlacedShape outer{
          rng.uniform_int(0, 1) ? geom::Shape2{geom::Rect{rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)}}
                                : geom::Shape2{geom::Circle{rng.uniform(0.3, 1.0)}},
          {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-geom::kPi, geom::kPi)}};
      const geom::PlacedShape inner{
          rng.uniform_int(0, 1) ? geom::Shape2{geom::Rect{rng.uniform(0.02, 0.5), rng.uniform(0.02, 0.5)}}
                                : geom::Shape2{geom::Circle{rng.uniform(0.02, 0.5)}},
          {rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-geom::kPi, geom::kPi)}};
      const auto v = oracle::contains_verdict(outer, inner, pitch);
      ++n_contain;
      if (v == oracle::Verdict::Band) continue;
      ++decided;
      if (geom::contains(outer, inner, 0.0) != (v == oracle::Verdict::Yes)) fail("contains");
    } else {
      // Minimality is checked along sampled directions on convex pairs, where
      // overlap along a ray is an interval and bisection is exact.
      const bool convex = rng.uniform_int(0, 1) == 1;
      const auto a = random_shape(rng, convex), b = random_shape(rng, convex);
      ++n_mtv;
      const auto mtv = geom::min_translation(a, b);
      const auto v = oracle::overlap_verdict(a, b, pitch);
      if (!mtv) {
        if (v == oracle::Verdict::Band) continue;
        ++decided;
        if (v == oracle::Verdict::Yes) fail("mtv missing");
        continue;
      }
      if (v == oracle::Verdict::Band) continue;
      ++decided;
      if (v == oracle::Verdict::No) {
        fail("mtv on separated shapes");
        continue;
      }
      const double len = std::hypot(mtv->x, mtv->y);
      const double ux = mtv->x / len, uy = mtv->y / len;
      const auto moved = oracle::shifted(b, mtv->x + 3 * pitch * ux, mtv->y + 3 * pitch * uy);
      if (oracle::overlap_verdict(a, moved, pitch) == oracle::Verdict::Yes) fail("mtv does not separate");
      if (convex) {
        for (int k = 0; k < 8; ++k) {
          const double th = 2 * geom::kPi * k / 8 + 0.1;
          const double sep = oracle::separation_along(a, b, std::cos(th), std::sin(th), 1e-3, 20.0, true);
          if (sep < len - 1e-3) {
            fail("mtv not minimal");
            break;
          }
        }
      }
    }
  }
  const double t = seconds_since(t0);
  std::ostringstream d;
  d << cases << " cases (" << n_collide << " collides, " << n_contain << " contains, " << n_mtv << " MTV), "
    << decided << " outside the band, " << bad << " disagreements" << (first_bad.empty() ? "" : " [" + first_bad + "]")
    << ", " << fmt("%.1f", t) << " s";
  return {bad == 0 && decided >= 9000 && t < 120.0, d.str()};
}

// ---------------------------------------------------------------- llm

Outcome llm_cassettes() {
  struct Case {
    const char* variant;
    const char* file;
  };
  const std::vector<Case> cases = {{"Motion2D-p0", "motion2d-p0"}, {"StickButton2D-b1", "stickbutton2d-b1"}};
  int golden_ok = 0, golden_n = 0, bad_n = 0, bad_diag = 0, crashes = 0;
  std::set<std::string> kinds;
  for (const auto& c : cases) {
    for (const char* kind : {"golden", "malformed"}) {
      PlannerOptions opts;
      auto tape = std::make_shared<CassetteTransport>(
          CassetteTransport::replay(std::string("tests/fixtures/cassettes/") + c.file + "-" + kind + ".jsonl"));
      opts.transport = [tape] { return std::make_unique<SharedTransport>(tape); };
      for (const auto& r : run_matrix({spec(Baseline::LLM, c.variant, 2, 10)}, opts)) {
        crashes += r.failure_kind.rfind("exception", 0) == 0;
        if (std::string(kind) == "golden") {
          ++golden_n;
          golden_ok += r.success;
        } else {
          ++bad_n;
          const bool diag = !r.success && r.failure_kind.rfind("no_plan: ", 0) == 0 && r.failure_kind.size() > 9;
          bad_diag += diag;
          if (diag) kinds.insert(r.failure_kind.substr(9, r.failure_kind.find(':', 9) - 9));
        }
      }
    }
  }
  std::ostringstream d;
  d << "golden " << golden_ok << "/" << golden_n << " succeeded; malformed " << bad_diag << "/" << bad_n
    << " failed with a diagnostic (";
  for (auto it = kinds.begin(); it != kinds.end(); ++it) d << (it == kinds.begin() ? "" : ", ") << *it;
  d << "); " << crashes << " exceptions";
  return {golden_n > 0 && golden_ok == golden_n && bad_n > 0 && bad_diag == bad_n && crashes == 0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinder acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "criterion numbers to run");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "BP Motion2D-p0 (5x50): SR >= 0.95, Rwd in [-80, -25], < 5 min", bp_motion},
      {2, "BP StickButton2D-b1 (5x50): SR >= 0.80, < 15 min", bp_stickbutton},
      {3, "BP StickButton2D b1/b3/b5: SR non-increasing, time increasing, b5 >= 5x b1", bp_scaling},
      {4, "MPC Motion2D-p0 (2x20): SR >= 0.50, < 30 min", mpc_motion},
      {5, "BP StickButton2D-b1 obs noise 0/0.01/0.1: SR strictly decreasing", noise},
      {6, "symbolic layer against brute-force oracles, < 60 s", symbolic},
      {7, "determinism and demo replay", determinism},
      {8, "geometry against the point-sampling oracle (10,000 cases), < 120 s", geometry},
      {9, "LLM planner on golden and malformed cassettes", llm_cassettes},
  };
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << " -- " << o.detail << " ("
              << fmt("%.1f", seconds_since(t0)) << " s)" << std::endl;
  }
  return failures;
}
