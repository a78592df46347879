#include <benchmark/benchmark.h>

#include <omp.h>

#include "kinder/baselines.hpp"
#include "kinder/geom2d.hpp"
#include "kinder/rng.hpp"
#include "kinder/suite2d.hpp"

using namespace kinder;

namespace {

// Scattered circles, rects and hooks in a 20 x 20 box.
std::vector<geom::PlacedShape> scatter(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<geom::PlacedShape> out;
  for (int i = 0; i < n; ++i) {
    const geom::Pose2 pose{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-3.14, 3.14)};
    switch (rng.uniform_int(0, 2)) {
      case 0: out.push_back({geom::Circle{rng.uniform(0.1, 0.8)}, pose}); break;
      case 1: out.push_back({geom::Rect{rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.8)}, pose}); break;
      default: {
        geom::Compound c{{{geom::Rect{0.6, 0.05}, {}}, {geom::Rect{0.05, 0.3}, {0.55, 0.35, 0}}}};
        out.push_back({c, pose});
      }
    }
  }
  return out;
}

void collision_pairs(benchmark::State& st, bool parallel) {
  const auto shapes = scatter(static_cast<int>(st.range(0)), 1);
  std::size_t hits = 0;
  for (auto _ : st) {
    const auto p = geom::collision_pairs(shapes, geom::kDefaultTol, parallel);
    hits = p.size();
    benchmark::DoNotOptimize(p.data());
  }
  st.counters["pairs"] = static_cast<double>(hits);
  st.counters["threads"] = parallel ? omp_get_max_threads() : 1;
}

void collides_any(benchmark::State& st, bool parallel) {
  const auto obstacles = scatter(64, 2);
  const auto queries = scatter(static_cast<int>(st.range(0)), 3);
  for (auto _ : st) {
    auto r = geom::collides_any(queries, obstacles, geom::kDefaultTol, parallel);
    benchmark::DoNotOptimize(r);
  }
  st.counters["threads"] = parallel ? omp_get_max_threads() : 1;
}

// One MPC decision: num_candidates rollouts of the full horizon.
void mpc_step(benchmark::State& st, const char* variant, bool parallel) {
  EnvInstance env(parse_variant(variant));
  const SceneState s = env.reset(0);
  MpcConfig cfg;
  cfg.num_candidates = static_cast<int>(st.range(0));
  cfg.parallel = parallel;
  const auto warm = zero_controls(cfg);
  for (auto _ : st) {
    Rng rng(5);
    auto r = mpc_act(env, s, cfg, warm, rng, cfg.noise_sigma);
    benchmark::DoNotOptimize(r.action);
  }
  st.counters["rollouts/s"] =
      benchmark::Counter(static_cast<double>(st.iterations()) * cfg.num_candidates, benchmark::Counter::kIsRate);
  st.counters["threads"] = parallel ? omp_get_max_threads() : 1;
}

void env_step(benchmark::State& st, const char* variant) {
  EnvInstance env(parse_variant(variant));
  env.reset(0);
  const ActionDelta a({0.3, 0.2, 0.1, 0.0, 0.0});
  const ActionDelta b({-0.3, -0.2, -0.1, 0.0, 0.0});
  bool flip = false;
  for (auto _ : st) {
    auto out = env.step((flip = !flip) ? a : b);
    benchmark::DoNotOptimize(out.reward);
  }
}

void bilevel(benchmark::State& st, const char* variant) {
  EnvInstance env(parse_variant(variant));
  const SceneState s = env.reset(1);
  for (auto _ : st) {
    auto r = bilevel_solve(env, s, {}, 1);
    benchmark::DoNotOptimize(r.actions);
  }
}

}  // namespace

BENCHMARK_CAPTURE(collision_pairs, serial, false)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK_CAPTURE(collision_pairs, omp, true)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK_CAPTURE(collides_any, serial, false)->Arg(1024)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK_CAPTURE(collides_any, omp, true)->Arg(1024)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK_CAPTURE(mpc_step, motion2d_serial, "Motion2D-p2", false)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(mpc_step, motion2d_omp, "Motion2D-p2", true)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(mpc_step, stickbutton_serial, "StickButton2D-b3", false)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(mpc_step, stickbutton_omp, "StickButton2D-b3", true)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(env_step, motion2d, "Motion2D-p5");
BENCHMARK_CAPTURE(env_step, obstruction, "Obstruction2D-o4");
BENCHMARK_CAPTURE(env_step, storage, "ClutteredStorage2D-b7");
BENCHMARK_CAPTURE(env_step, pushpull, "PushPullHook2D-b1");
BENCHMARK_CAPTURE(env_step, stickbutton, "StickButton2D-b5");
BENCHMARK_CAPTURE(bilevel, stickbutton_b1, "StickButton2D-b1")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bilevel, obstruction_o1, "Obstruction2D-o1")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
