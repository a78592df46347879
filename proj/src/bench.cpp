#include "kinder/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"

namespace kinder::bench {

namespace {

constexpr std::array<std::string_view, 4> kBaselineNames{"bp", "mpc", "llm", "llm-con"};

std::string fmt17(double v) { return format_double(v); }

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for fewer than two values.
double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string_view baseline_name(Baseline b) { return kBaselineNames[static_cast<std::size_t>(b)]; }

std::optional<Baseline> baseline_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kBaselineNames.size(); ++i) {
    if (kBaselineNames[i] == name) return static_cast<Baseline>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- noise

bool is_boolean_feature(ObjType t, std::size_t i) {
  switch (t) {
    case ObjType::Robot: return i == rf::kVacuumOn;
    case ObjType::Button: return i == btn::kPressed || i == btn::kMovable;
    case ObjType::Hook: return i == hk::kHeld;
    default: return i == bf::kHeld || i == bf::kFlag;
  }
}

SceneState perturb_observation(const SceneState& s, double sigma, Rng& rng) {
  SceneState out = s;
  if (sigma <= 0) return out;
  for (auto& o : out.objects()) {
    for (std::size_t i = 0; i < o.dim(); ++i) {
      if (!is_boolean_feature(o.type, i)) o.f[i] += rng.normal(0.0, sigma);
    }
  }
  return out;
}

NoisyEnv::NoisyEnv(EnvInstance env, double obs_sigma, double act_sigma, std::uint64_t noise_seed)
    : env_(std::move(env)), obs_sigma_(obs_sigma), act_sigma_(act_sigma), rng_(noise_seed) {
  if (obs_sigma < 0 || act_sigma < 0) throw KinderError("noise sigma must be >= 0");
}

const SceneState& NoisyEnv::reset(std::uint64_t seed) { return env_.reset(seed); }

SceneState NoisyEnv::observe() { return perturb_observation(env_.state(), obs_sigma_, rng_); }

StepOutcome NoisyEnv::step(const ActionDelta& a) {
  if (act_sigma_ <= 0) return env_.step(a);
  std::array<double, 5> raw = a.u;
  for (double& v : raw) v += rng_.normal(0.0, act_sigma_);
  return env_.step(ActionDelta(raw));
}

NoisyEnv wrap_obs_noise(EnvInstance env, double sigma, std::uint64_t noise_seed) {
  return NoisyEnv(std::move(env), sigma, 0.0, noise_seed);
}

NoisyEnv wrap_act_noise(EnvInstance env, double sigma, std::uint64_t noise_seed) {
  return NoisyEnv(std::move(env), 0.0, sigma, noise_seed);
}

double SteadyClock::now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------- runs

void RunSpec::validate() const {
  if (num_seeds <= 0 || episodes_per_seed <= 0 || max_steps <= 0) throw KinderError("run counts must be positive");
  if (obs_sigma < 0 || act_sigma < 0) throw KinderError("noise sigma must be >= 0");
  parse_variant(variant);
}

std::uint64_t episode_seed(std::uint64_t base_seed, int seed_index, int episode_index) {
  return fnv64({base_seed, static_cast<std::uint64_t>(seed_index), static_cast<std::uint64_t>(episode_index)});
}

namespace {

/// Executes an open-loop action sequence until success or the step limit.
void execute_open_loop(NoisyEnv& env, const std::vector<ActionDelta>& actions, int max_steps, EpisodeResult& r) {
  for (const auto& a : actions) {
    if (r.steps >= max_steps) break;
    const auto out = env.step(a);
    ++r.steps;
    r.reward += out.reward;
    if (out.terminated) {
      r.success = true;
      return;
    }
  }
  r.failure_kind = r.steps >= max_steps ? "max_steps" : "plan_ended";
}

void run_bp(NoisyEnv& env, const RunSpec& spec, std::uint64_t seed, const PlannerOptions& opts, Clock& clock,
            EpisodeResult& r) {
  const SceneState obs = env.observe();
  BilevelConfig cfg = opts.bilevel;
  cfg.max_actions = spec.max_steps;
  const double t0 = clock.now();
  const auto res = bilevel_solve(env.inner(), obs, cfg, seed);
  r.inf_time_s = clock.now() - t0;
  if (!res.actions) {
    r.failure_kind = res.stats.timed_out ? "timeout" : "no_plan";
    return;
  }
  execute_open_loop(env, *res.actions, spec.max_steps, r);
}

LlmConfig llm_config(const RunSpec& spec, const PlannerOptions& opts, EnvId env) {
  LlmConfig cfg = opts.llm;
  cfg.mode = spec.baseline == Baseline::LLMCon ? PromptMode::InContext : PromptMode::ZeroShot;
  if (cfg.mode == PromptMode::InContext && cfg.examples.empty()) cfg.examples = default_examples(env, 2);
  return cfg;
}

NoisyEnv episode_env(const RunSpec& spec, std::uint64_t es) {
  NoisyEnv env(EnvInstance(parse_variant(spec.variant)), spec.obs_sigma, spec.act_sigma, fnv64({es, 0x6e6f697365}));
  env.reset(es);
  return env;
}

void run_llm(NoisyEnv& env, const RunSpec& spec, std::uint64_t seed, const PlannerOptions& opts, Clock& clock,
             EpisodeResult& r) {
  if (!opts.transport) throw KinderError("LLM baseline needs a transport");
  auto transport = opts.transport();
  const LlmConfig cfg = llm_config(spec, opts, env.inner().variant().env);
  const SceneState obs = env.observe();
  const double t0 = clock.now();
  const auto res = llm_solve(env.inner(), obs, *transport, cfg, seed);
  r.inf_time_s = clock.now() - t0;
  if (!res.actions) {
    r.failure_kind = "no_plan";
    if (!res.diagnostics.empty()) r.failure_kind += ": " + res.diagnostics.front();
    return;
  }
  execute_open_loop(env, *res.actions, spec.max_steps, r);
}

void run_mpc(NoisyEnv& env, const RunSpec& spec, std::uint64_t seed, const PlannerOptions& opts, Clock& clock,
             EpisodeResult& r) {
  const MpcConfig& cfg = opts.mpc;
  Rng rng(seed);
  ControlPoints warm = zero_controls(cfg);
  double sigma = cfg.noise_sigma;
  EnvInstance model = env.inner().clone();
  std::vector<ActionDelta> pending;
  std::size_t next = 0;
  while (r.steps < spec.max_steps) {
    if (next >= pending.size()) {
      const SceneState obs = env.observe();
      const double t0 = clock.now();
      model.set_state(obs);
      if (model.check_goal()) {
        r.inf_time_s += clock.now() - t0;
        r.failure_kind = "observed_goal";  // noise made the goal look reached
        return;
      }
      pending.clear();
      next = 0;
      for (int k = 0; k < std::max(1, cfg.replan_every); ++k) {
        const auto st = mpc_act(model, model.state(), cfg, warm, rng, sigma);
        pending.push_back(st.action);
        warm = st.warm;
        sigma = st.sigma;
        if (cfg.replan_every > 1) model.step(st.action);
      }
      r.inf_time_s += clock.now() - t0;
    }
    const auto out = env.step(pending[next++]);
    ++r.steps;
    r.reward += out.reward;
    if (out.terminated) {
      r.success = true;
      return;
    }
  }
  if (!r.success) r.failure_kind = "max_steps";
}

}  // namespace

EpisodeResult run_episode(const RunSpec& spec, int seed_index, int episode_index, const PlannerOptions& opts,
                          Clock& clock) {
  EpisodeResult r;
  r.baseline = std::string(baseline_name(spec.baseline));
  r.variant = spec.variant;
  r.seed = seed_index;
  r.episode = episode_index;
  const std::uint64_t es = episode_seed(spec.base_seed, seed_index, episode_index);
  try {
    NoisyEnv env = episode_env(spec, es);
    if (env.inner().check_goal()) {
      r.success = true;
      return r;
    }
    const std::uint64_t planner_seed = fnv64({es, 0x706c616e});
    switch (spec.baseline) {
      case Baseline::BP: run_bp(env, spec, planner_seed, opts, clock, r); break;
      case Baseline::MPC: run_mpc(env, spec, planner_seed, opts, clock, r); break;
      case Baseline::LLM:
      case Baseline::LLMCon: run_llm(env, spec, planner_seed, opts, clock, r); break;
    }
  } catch (const std::exception& e) {
    r.success = false;
    r.failure_kind = std::string("exception: ") + e.what();
  }
  if (r.success) r.failure_kind.clear();
  return r;
}

int record_cassette(const RunSpec& spec, const PlannerOptions& opts, const std::string& path, const ReplyFn& reply) {
  spec.validate();
  if (spec.baseline != Baseline::LLM && spec.baseline != Baseline::LLMCon) {
    throw KinderError("cassettes are recorded for LLM baselines only");
  }
  std::optional<LlmConfig> cfg;
  int n = 0;
  for (int si = 0; si < spec.num_seeds; ++si) {
    for (int ei = 0; ei < spec.episodes_per_seed; ++ei) {
      const std::uint64_t es = episode_seed(spec.base_seed, si, ei);
      NoisyEnv env = episode_env(spec, es);
      if (env.inner().check_goal()) continue;  // no request is sent
      if (!cfg) cfg = llm_config(spec, opts, env.inner().variant().env);
      const std::uint64_t planner_seed = fnv64({es, 0x706c616e});
      const SceneState obs = env.observe();
      StubTransport stub({reply(env.inner(), obs, planner_seed, si, ei)});
      auto rec = CassetteTransport::record(path, stub);
      llm_solve(env.inner(), obs, rec, *cfg, planner_seed);
      ++n;
    }
  }
  return n;
}

namespace {

std::optional<std::string> oracle_plan_text(const EnvInstance& env, const SceneState& obs, std::uint64_t seed,
                                            int max_steps) {
  BilevelConfig cfg;
  cfg.max_actions = max_steps;
  const auto res = bilevel_solve(env, obs, cfg, seed);
  if (!res.actions) return std::nullopt;
  return format_plan(env.variant().env, res.plan);
}

}  // namespace

ReplyFn oracle_reply(int max_steps) {
  return [max_steps](const EnvInstance& env, const SceneState& obs, std::uint64_t seed, int, int) {
    const auto plan = oracle_plan_text(env, obs, seed, max_steps);
    if (!plan) return std::string("I could not find a plan for this task.\n");
    return "The robot needs to reach the goal.\n\nPlan:\n" + *plan;
  };
}

ReplyFn malformed_reply(int max_steps) {
  return [max_steps](const EnvInstance& env, const SceneState& obs, std::uint64_t seed, int si, int ei) {
    const std::string prose = "First move the robot, then finish the task.\n";
    const int kind = (si * 7 + ei) % 5;
    if (kind == 0) return prose;
    if (kind == 1) return std::string("Plan:\nTeleport(robot:robot)[0.5]\n");
    const auto plan = oracle_plan_text(env, obs, seed, max_steps);
    if (!plan) return prose;
    std::string first = plan->substr(0, plan->find('\n'));
    const auto open = first.find('('), close = first.find(')'), lb = first.find('[');
    if (kind == 2) {
      first = first.substr(0, lb) + "[fast]";
    } else if (kind == 3) {
      first.insert(close, ", robot:robot");
    } else {
      const auto colon = first.find(':', open);
      first.replace(open + 1, colon - open - 1, "ghost");
    }
    return "Plan:\n" + first + "\n" + plan->substr(plan->find('\n') + 1);
  };
}

std::vector<EpisodeResult> run_matrix(const std::vector<RunSpec>& specs, const PlannerOptions& opts, int workers,
                                      const std::function<std::unique_ptr<Clock>()>& clock) {
  struct Job {
    std::size_t spec;
    int seed, episode;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    specs[i].validate();
    for (int s = 0; s < specs[i].num_seeds; ++s) {
      for (int e = 0; e < specs[i].episodes_per_seed; ++e) jobs.push_back({i, s, e});
    }
  }
  // In-context examples are computed once per env rather than per episode.
  std::map<EnvId, PlannerOptions> per_env;
  for (const auto& sp : specs) {
    const EnvId env = parse_variant(sp.variant).env;
    auto& o = per_env.try_emplace(env, opts).first->second;
    if (sp.baseline == Baseline::LLMCon && o.llm.examples.empty()) o.llm.examples = default_examples(env, 2);
  }
  std::vector<EpisodeResult> out(jobs.size());
  const int n = static_cast<int>(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers)) if (workers > 1)
  for (int j = 0; j < n; ++j) {
    const auto& job = jobs[static_cast<std::size_t>(j)];
    const auto& spec = specs[job.spec];
    std::unique_ptr<Clock> c = clock ? clock() : std::make_unique<SteadyClock>();
    out[static_cast<std::size_t>(j)] =
        run_episode(spec, job.seed, job.episode, per_env.at(parse_variant(spec.variant).env), *c);
  }
  return out;
}

MetricRow compute_metrics(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw KinderError("compute_metrics needs at least one episode");
  MetricRow m;
  m.baseline = results.front().baseline;
  m.variant = results.front().variant;
  m.episodes = results.size();
  std::vector<double> succ, rwd, inf;
  std::map<int, std::vector<const EpisodeResult*>> by_seed;
  for (const auto& r : results) {
    succ.push_back(r.success ? 1.0 : 0.0);
    if (r.success) rwd.push_back(r.reward);
    inf.push_back(r.inf_time_s);
    by_seed[r.seed].push_back(&r);
  }
  m.sr = mean(succ);
  if (!rwd.empty()) m.rwd = mean(rwd);
  m.inf_time_s = mean(inf);
  std::vector<double> seed_sr, seed_rwd, seed_inf;
  for (const auto& [seed, rs] : by_seed) {
    std::vector<double> s, w, t;
    for (const auto* r : rs) {
      s.push_back(r->success ? 1.0 : 0.0);
      if (r->success) w.push_back(r->reward);
      t.push_back(r->inf_time_s);
    }
    seed_sr.push_back(mean(s));
    if (!w.empty()) seed_rwd.push_back(mean(w));
    seed_inf.push_back(mean(t));
  }
  m.sr_std = stddev(seed_sr);
  if (!seed_rwd.empty()) m.rwd_std = stddev(seed_rwd);
  m.inf_time_std = stddev(seed_inf);
  return m;
}

std::vector<MetricRow> metrics_by_group(const std::vector<EpisodeResult>& results) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<EpisodeResult>> groups;
  for (const auto& r : results) {
    const auto k = std::make_pair(r.baseline, r.variant);
    if (!groups.count(k)) keys.push_back(k);
    groups[k].push_back(r);
  }
  std::vector<MetricRow> out;
  for (const auto& k : keys) out.push_back(compute_metrics(groups[k]));
  return out;
}

// ---------------------------------------------------------------- files

std::string csv_header() { return "baseline,variant,seed,episode,success,steps,reward,inf_time_s,failure_kind"; }

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string to_csv(const std::vector<EpisodeResult>& results) {
  std::string out = csv_header() + "\n";
  for (const auto& r : results) {
    out += csv_field(r.baseline) + "," + csv_field(r.variant) + "," + std::to_string(r.seed) + "," +
           std::to_string(r.episode) + "," + (r.success ? "1" : "0") + "," + std::to_string(r.steps) + "," +
           fmt17(r.reward) + "," + fmt17(r.inf_time_s) + "," + csv_field(r.failure_kind) + "\n";
  }
  return out;
}

std::vector<EpisodeResult> parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw KinderError("results CSV: unexpected header");
  std::vector<EpisodeResult> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    // A quoted field may span lines.
    for (std::string more; std::count(line.begin(), line.end(), '"') % 2 == 1 && std::getline(in, more);) {
      line += "\n" + more;
    }
    const auto f = csv_split(line);
    if (f.size() != 9) throw KinderError("results CSV line " + std::to_string(lineno) + ": expected 9 fields");
    EpisodeResult r;
    r.baseline = f[0];
    r.variant = f[1];
    r.seed = std::stoi(f[2]);
    r.episode = std::stoi(f[3]);
    r.success = f[4] == "1";
    r.steps = std::stoi(f[5]);
    r.reward = std::stod(f[6]);
    r.inf_time_s = std::stod(f[7]);
    r.failure_kind = f[8];
    out.push_back(std::move(r));
  }
  return out;
}

std::string to_jsonl(const std::vector<EpisodeResult>& results) {
  std::string out;
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["baseline"] = r.baseline;
    j["variant"] = r.variant;
    j["seed"] = r.seed;
    j["episode"] = r.episode;
    j["success"] = r.success;
    j["steps"] = r.steps;
    j["reward"] = r.reward;
    j["inf_time_s"] = r.inf_time_s;
    j["failure_kind"] = r.failure_kind;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<EpisodeResult> parse_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<EpisodeResult> out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    EpisodeResult r;
    r.baseline = j.at("baseline").get<std::string>();
    r.variant = j.at("variant").get<std::string>();
    r.seed = j.at("seed").get<int>();
    r.episode = j.at("episode").get<int>();
    r.success = j.at("success").get<bool>();
    r.steps = j.at("steps").get<int>();
    r.reward = j.at("reward").get<double>();
    r.inf_time_s = j.at("inf_time_s").get<double>();
    r.failure_kind = j.at("failure_kind").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

std::string render_table(const std::vector<MetricRow>& rows) {
  std::vector<std::string> baselines, variants;
  for (const auto& r : rows) {
    if (std::find(baselines.begin(), baselines.end(), r.baseline) == baselines.end()) baselines.push_back(r.baseline);
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
  }
  auto cell = [](const char* fmt, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  constexpr std::size_t kLabel = 14, kCol = 10;
  std::string out;
  std::string head = std::string(kLabel, ' ');
  for (const auto& b : baselines) head += pad(b, kCol);
  out += head + "\n";
  for (const auto& v : variants) {
    out += v + "\n";
    std::string sr = "  SR", rwd = "  Rwd", inf = "  Inf-Time";
    sr.resize(kLabel, ' ');
    rwd.resize(kLabel, ' ');
    inf.resize(kLabel, ' ');
    for (const auto& b : baselines) {
      const auto it =
          std::find_if(rows.begin(), rows.end(), [&](const MetricRow& r) { return r.baseline == b && r.variant == v; });
      if (it == rows.end()) {
        sr += pad("", kCol);
        rwd += pad("", kCol);
        inf += pad("", kCol);
        continue;
      }
      sr += pad(cell("%.2f", it->sr), kCol);
      rwd += pad(it->rwd ? cell("%.1f", *it->rwd) : "--", kCol);
      inf += pad(cell("%.3f", it->inf_time_s), kCol);
    }
    out += sr + "\n" + rwd + "\n" + inf + "\n";
  }
  return out;
}

}  // namespace kinder::bench
