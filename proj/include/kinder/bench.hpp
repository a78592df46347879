#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kinder/baselines.hpp"
#include "kinder/envcore.hpp"
#include "kinder/rng.hpp"
#include "kinder/suite2d.hpp"

namespace kinder::bench {

enum class Baseline { BP, MPC, LLM, LLMCon };

std::string_view baseline_name(Baseline b);
std::optional<Baseline> baseline_from_name(std::string_view name);

// ---------------------------------------------------------------- noise

/// An env seen through noise. Observations perturb every continuous feature;
/// actions are perturbed before clamping. The wrapped env stays exact.
class NoisyEnv {
 public:
  NoisyEnv(EnvInstance env, double obs_sigma, double act_sigma, std::uint64_t noise_seed);

  const SceneState& reset(std::uint64_t seed);
  SceneState observe();
  StepOutcome step(const ActionDelta& a);

  EnvInstance& inner() { return env_; }
  const EnvInstance& inner() const { return env_; }
  double obs_sigma() const { return obs_sigma_; }
  double act_sigma() const { return act_sigma_; }

 private:
  EnvInstance env_;
  double obs_sigma_;
  double act_sigma_;
  Rng rng_;
};

NoisyEnv wrap_obs_noise(EnvInstance env, double sigma, std::uint64_t noise_seed = 0);
NoisyEnv wrap_act_noise(EnvInstance env, double sigma, std::uint64_t noise_seed = 0);

/// True for latch/flag features (vacuum_on, is_held, pressed, movable, flag).
bool is_boolean_feature(ObjType t, std::size_t index);

/// `s` with Gaussian(0, sigma) added to every continuous feature.
SceneState perturb_observation(const SceneState& s, double sigma, Rng& rng);

// ---------------------------------------------------------------- timing

/// Time source for inference timing.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
};

class SteadyClock : public Clock {
 public:
  double now() override;
};

/// Advances by `tick` seconds on every read.
class FakeClock : public Clock {
 public:
  explicit FakeClock(double tick = 1.0) : tick_(tick) {}
  double now() override { return t_ += tick_; }

 private:
  double tick_;
  double t_ = 0.0;
};

// ---------------------------------------------------------------- runs

struct RunSpec {
  Baseline baseline = Baseline::BP;
  std::string variant;
  int num_seeds = 5;
  int episodes_per_seed = 50;
  int max_steps = 500;
  double obs_sigma = 0.0;
  double act_sigma = 0.0;
  std::uint64_t base_seed = 0;

  void validate() const;
};

struct EpisodeResult {
  std::string baseline;
  std::string variant;
  int seed = 0;
  int episode = 0;
  bool success = false;
  int steps = 0;
  double reward = 0.0;
  double inf_time_s = 0.0;
  /// Empty on success; "no_plan", "max_steps", or "exception: ...".
  std::string failure_kind;

  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

struct MetricRow {
  std::string baseline;
  std::string variant;
  std::size_t episodes = 0;
  double sr = 0.0;
  std::optional<double> rwd;
  double inf_time_s = 0.0;
  double sr_std = 0.0;
  std::optional<double> rwd_std;
  double inf_time_std = 0.0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

/// Planner-facing knobs shared by every episode of a run.
struct PlannerOptions {
  BilevelConfig bilevel{};
  MpcConfig mpc{};
  LlmConfig llm{};
  /// Builds the LLM transport for one episode. Required for LLM baselines.
  std::function<std::unique_ptr<Transport>()> transport;
};

std::uint64_t episode_seed(std::uint64_t base_seed, int seed_index, int episode_index);

EpisodeResult run_episode(const RunSpec& spec, int seed_index, int episode_index, const PlannerOptions& opts,
                          Clock& clock);

/// Runs every (spec, seed, episode); results in spec, seed, episode order
/// regardless of the worker count.
std::vector<EpisodeResult> run_matrix(const std::vector<RunSpec>& specs, const PlannerOptions& opts = {},
                                      int workers = 1, const std::function<std::unique_ptr<Clock>()>& clock = {});

/// Reply text for one LLM episode, given the env and its observation.
using ReplyFn = std::function<std::string(const EnvInstance& env, const SceneState& obs, std::uint64_t planner_seed,
                                          int seed_index, int episode_index)>;

/// Appends one exchange per episode of an LLM spec to the cassette at `path`,
/// sending exactly the requests run_episode will send. Returns the count.
int record_cassette(const RunSpec& spec, const PlannerOptions& opts, const std::string& path, const ReplyFn& reply);

/// Replies with the bilevel planner's plan for the episode (prose when it
/// finds none).
ReplyFn oracle_reply(int max_steps = 500);
/// Replies with a broken plan, cycling through prose without a plan block,
/// an unknown skill, a non-numeric parameter, an extra object and an unknown
/// object.
ReplyFn malformed_reply(int max_steps = 500);

/// Metrics of one (baseline, variant) group. Throws on empty input.
MetricRow compute_metrics(const std::vector<EpisodeResult>& results);
/// One row per (baseline, variant), in first-appearance order.
std::vector<MetricRow> metrics_by_group(const std::vector<EpisodeResult>& results);

// ---------------------------------------------------------------- files

std::string csv_header();
std::string to_csv(const std::vector<EpisodeResult>& results);
std::vector<EpisodeResult> parse_csv(std::string_view text);
std::string to_jsonl(const std::vector<EpisodeResult>& results);
std::vector<EpisodeResult> parse_jsonl(std::string_view text);

/// Results grid: one block per variant with SR, Rwd, Inf-Time rows and a
/// column per baseline.
std::string render_table(const std::vector<MetricRow>& rows);

}  // namespace kinder::bench
