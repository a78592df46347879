#include <pthread.h>
#include <signal.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "kinder/baselines.hpp"
#include "kinder/bench.hpp"
#include "kinder/demos.hpp"
#include "kinder/teleop_server.hpp"

using namespace kinder;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw KinderError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw KinderError("cannot write " + path);
  out << text;
}

bench::Baseline baseline_arg(const std::string& name) {
  const auto b = bench::baseline_from_name(name);
  if (!b) throw CLI::ValidationError("--baseline", "unknown baseline '" + name + "' (bp, mpc, llm, llm-con)");
  return *b;
}

std::vector<bench::EpisodeResult> load_results(const std::string& path) {
  const auto text = slurp(path);
  return path.ends_with(".jsonl") ? bench::parse_jsonl(text) : bench::parse_csv(text);
}

// ---------------------------------------------------------------- bench

struct BenchRunArgs {
  std::vector<std::string> baselines{"bp"};
  std::vector<std::string> variants;
  int seeds = 5;
  int episodes = 50;
  int max_steps = 500;
  double obs_noise = 0.0;
  double act_noise = 0.0;
  std::uint64_t base_seed = 0;
  std::string out;
  std::string jsonl;
  int workers = 1;
  std::string cassette;
  bool live = false;
  std::string model = "gpt-4o";
  double fake_clock = 0.0;
};

int bench_run(const BenchRunArgs& a) {
  std::vector<bench::RunSpec> specs;
  bool needs_llm = false;
  for (const auto& v : a.variants) {
    for (const auto& b : a.baselines) {
      bench::RunSpec s;
      s.baseline = baseline_arg(b);
      s.variant = v;
      s.num_seeds = a.seeds;
      s.episodes_per_seed = a.episodes;
      s.max_steps = a.max_steps;
      s.obs_sigma = a.obs_noise;
      s.act_sigma = a.act_noise;
      s.base_seed = a.base_seed;
      s.validate();
      needs_llm |= s.baseline == bench::Baseline::LLM || s.baseline == bench::Baseline::LLMCon;
      specs.push_back(s);
    }
  }
  bench::PlannerOptions opts;
  opts.llm.model = a.model;
  if (needs_llm) {
    if (!a.cassette.empty()) {
      auto tape = std::make_shared<CassetteTransport>(CassetteTransport::replay(a.cassette));
      opts.transport = [tape] { return std::make_unique<SharedTransport>(tape); };
    } else if (a.live) {
      opts.transport = [] { return std::make_unique<HttpTransport>(); };
    } else {
      throw CLI::ValidationError("LLM baselines need --cassette <file> or --live");
    }
  }
  std::function<std::unique_ptr<bench::Clock>()> clock;
  if (a.fake_clock > 0) {
    const double tick = a.fake_clock;
    clock = [tick] { return std::make_unique<bench::FakeClock>(tick); };
  }
  const auto results = bench::run_matrix(specs, opts, a.workers, clock);
  if (!a.out.empty()) spit(a.out, bench::to_csv(results));
  if (!a.jsonl.empty()) spit(a.jsonl, bench::to_jsonl(results));
  std::cout << bench::render_table(bench::metrics_by_group(results));
  return 0;
}

// ---------------------------------------------------------------- demo

int demo_verify(const std::vector<std::string>& paths) {
  int bad = 0;
  for (const auto& p : paths) {
    try {
      const auto d = demos::read_demo(p);
      const auto r = demos::replay(d);
      std::cout << "OK    " << p << " (" << d.steps.size() << " steps, " << (r.success ? "success" : "failure")
                << ")\n";
    } catch (const std::exception& e) {
      ++bad;
      std::cout << "FAIL  " << p << ": " << e.what() << "\n";
    }
  }
  return bad ? 1 : 0;
}

int demo_generate(const std::string& baseline, const std::string& variant, int n, const std::string& out,
                  std::uint64_t base_seed, int workers, int max_steps) {
  if (baseline_arg(baseline) != bench::Baseline::BP) {
    throw CLI::ValidationError("--baseline", "demos are generated with bp only");
  }
  const auto ds =
      demos::generate_dataset(demos::bilevel_planner(max_steps), parse_variant(variant), n, base_seed, workers);
  const auto paths = demos::write_dataset(out, ds);
  std::cout << "wrote " << paths.size() << " demos to " << out << " (" << ds.stats.successes << "/"
            << ds.stats.attempts << " episodes solved)\n";
  return 0;
}

// ---------------------------------------------------------------- teleop

int teleop_serve(const teleop::ServerConfig& cfg, const std::string& host, std::uint16_t port) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // inherited by the server thread

  teleop::Server server(cfg, host, port);
  std::cout << "teleop listening on ws://" << host << ":" << server.port() << "/" << std::endl;
  std::thread t([&] { server.run(); });
  int sig = 0;
  sigwait(&set, &sig);
  std::cout << "shutting down" << std::endl;
  server.stop();
  t.join();
  return 0;
}

// ---------------------------------------------------------------- llm

int llm_prompt(const std::string& variant, std::uint64_t seed, bool in_context) {
  const auto vs = parse_variant(variant);
  EnvInstance env(vs);
  const auto& s = env.reset(seed);
  const auto mode = in_context ? PromptMode::InContext : PromptMode::ZeroShot;
  std::cout << build_prompt(vs.env, s, mode, in_context ? default_examples(vs.env, 2) : std::vector<std::string>{});
  return 0;
}

int llm_cassette(const BenchRunArgs& a, const std::string& kind) {
  if (a.baselines.size() != 1 || a.variants.size() != 1) {
    throw CLI::ValidationError("give exactly one --baseline and one --variant");
  }
  bench::RunSpec s;
  s.baseline = baseline_arg(a.baselines[0]);
  s.variant = a.variants[0];
  s.num_seeds = a.seeds;
  s.episodes_per_seed = a.episodes;
  s.max_steps = a.max_steps;
  s.base_seed = a.base_seed;
  bench::PlannerOptions opts;
  opts.llm.model = a.model;
  bench::ReplyFn reply;
  if (kind == "golden") {
    reply = bench::oracle_reply(a.max_steps);
  } else if (kind == "malformed") {
    reply = bench::malformed_reply(a.max_steps);
  } else {
    throw CLI::ValidationError("--kind", "golden or malformed");
  }
  std::filesystem::remove(a.out);
  const auto parent = std::filesystem::path(a.out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const int n = bench::record_cassette(s, opts, a.out, reply);
  std::cout << "recorded " << n << " exchanges to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinder: 2D kinematic environments, baselines and benchmark"};
  app.require_subcommand(1);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run baselines and tabulate results");
  bench_cmd->require_subcommand(1);
  BenchRunArgs run;
  auto* run_cmd = bench_cmd->add_subcommand("run", "run a (baseline x variant) matrix");
  run_cmd->add_option("--baseline,-b", run.baselines, "bp, mpc, llm, llm-con (repeatable)");
  run_cmd->add_option("--variant,-v", run.variants, "e.g. Motion2D-p0 (repeatable)")->required();
  run_cmd->add_option("--seeds", run.seeds)->capture_default_str();
  run_cmd->add_option("--episodes", run.episodes, "episodes per seed")->capture_default_str();
  run_cmd->add_option("--max-steps", run.max_steps)->capture_default_str();
  run_cmd->add_option("--obs-noise", run.obs_noise, "observation noise sigma")->capture_default_str();
  run_cmd->add_option("--act-noise", run.act_noise, "action noise sigma")->capture_default_str();
  run_cmd->add_option("--base-seed", run.base_seed)->capture_default_str();
  run_cmd->add_option("--out,-o", run.out, "per-episode CSV");
  run_cmd->add_option("--jsonl", run.jsonl, "per-episode JSONL");
  run_cmd->add_option("--workers,-j", run.workers)->capture_default_str()->check(CLI::PositiveNumber);
  run_cmd->add_option("--cassette", run.cassette, "replay LLM replies from a cassette")->check(CLI::ExistingFile);
  run_cmd->add_flag("--live", run.live, "query KINDER_LLM_URL over HTTP");
  run_cmd->add_option("--model", run.model)->capture_default_str();
  run_cmd->add_option("--fake-clock", run.fake_clock, "time each planner call as this many seconds");
  run_cmd->callback([&] { std::exit(bench_run(run)); });

  std::string table_in;
  auto* table_cmd = bench_cmd->add_subcommand("table", "metrics table from a results file");
  table_cmd->add_option("--in,-i", table_in, "CSV or .jsonl results")->required()->check(CLI::ExistingFile);
  table_cmd->callback([&] {
    std::cout << bench::render_table(bench::metrics_by_group(load_results(table_in)));
    std::exit(0);
  });

  // demo
  auto* demo_cmd = app.add_subcommand("demo", "demonstration files");
  demo_cmd->require_subcommand(1);
  std::vector<std::string> verify_paths;
  auto* verify_cmd = demo_cmd->add_subcommand("verify", "replay demos and check their recorded outcome");
  verify_cmd->add_option("paths", verify_paths)->required()->check(CLI::ExistingFile);
  verify_cmd->callback([&] { std::exit(demo_verify(verify_paths)); });

  std::string gen_baseline = "bp", gen_variant, gen_out;
  int gen_n = 100, gen_workers = 1, gen_max_steps = 500;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = demo_cmd->add_subcommand("generate", "planner demos for a variant");
  gen_cmd->add_option("--baseline,-b", gen_baseline)->capture_default_str();
  gen_cmd->add_option("--variant,-v", gen_variant)->required();
  gen_cmd->add_option("-n", gen_n, "episodes to attempt")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out,-o", gen_out, "output directory")->required();
  gen_cmd->add_option("--base-seed", gen_seed)->capture_default_str();
  gen_cmd->add_option("--workers,-j", gen_workers)->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--max-steps", gen_max_steps)->capture_default_str();
  gen_cmd->callback([&] {
    std::exit(demo_generate(gen_baseline, gen_variant, gen_n, gen_out, gen_seed, gen_workers, gen_max_steps));
  });

  // teleop
  auto* teleop_cmd = app.add_subcommand("teleop", "teleoperation server");
  teleop_cmd->require_subcommand(1);
  teleop::ServerConfig scfg;
  std::string host = "127.0.0.1";
  std::uint16_t port = 8753;
  auto* serve_cmd = teleop_cmd->add_subcommand("serve", "serve the WebSocket protocol and the UI bundle");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--static-dir", scfg.static_dir, "directory served over HTTP");
  serve_cmd->add_option("--save-dir", scfg.save_dir)->capture_default_str();
  serve_cmd->add_option("--tick-hz", scfg.tick_hz)->capture_default_str()->check(CLI::PositiveNumber);
  serve_cmd->add_option("--idle-timeout", scfg.idle_timeout_s, "seconds")->capture_default_str();
  serve_cmd->callback([&] { std::exit(teleop_serve(scfg, host, port)); });

  // llm
  auto* llm_cmd = app.add_subcommand("llm", "LLM prompt and cassette helpers");
  llm_cmd->require_subcommand(1);
  std::string p_variant;
  std::uint64_t p_seed = 0;
  bool p_icl = false;
  auto* prompt_cmd = llm_cmd->add_subcommand("prompt", "print the prompt for one reset");
  prompt_cmd->add_option("--variant,-v", p_variant)->required();
  prompt_cmd->add_option("--seed", p_seed)->capture_default_str();
  prompt_cmd->add_flag("--in-context", p_icl, "include the default examples");
  prompt_cmd->callback([&] { std::exit(llm_prompt(p_variant, p_seed, p_icl)); });

  BenchRunArgs cas;
  cas.baselines = {"llm"};
  std::string cas_kind = "golden";
  auto* cas_cmd = llm_cmd->add_subcommand("cassette", "record planner-derived replies for a bench run");
  cas_cmd->add_option("--baseline,-b", cas.baselines, "llm or llm-con")->capture_default_str();
  cas_cmd->add_option("--variant,-v", cas.variants)->required();
  cas_cmd->add_option("--seeds", cas.seeds)->capture_default_str();
  cas_cmd->add_option("--episodes", cas.episodes)->capture_default_str();
  cas_cmd->add_option("--max-steps", cas.max_steps)->capture_default_str();
  cas_cmd->add_option("--base-seed", cas.base_seed)->capture_default_str();
  cas_cmd->add_option("--model", cas.model)->capture_default_str();
  cas_cmd->add_option("--kind", cas_kind, "golden or malformed")->capture_default_str();
  cas_cmd->add_option("--out,-o", cas.out)->required();
  cas_cmd->callback([&] { std::exit(llm_cassette(cas, cas_kind)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
