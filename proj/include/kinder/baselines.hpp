#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kinder/envcore.hpp"
#include "kinder/rng.hpp"
#include "kinder/suite2d.hpp"
#include "kinder/symbols.hpp"

namespace kinder {

// ---------------------------------------------------------------- bilevel

struct BilevelConfig {
  int max_abstract_plans = 10;
  double abstract_deadline_s = 60.0;
  int samples_per_step = 3;
  /// Wall-clock cap on the whole solve (search plus refinement).
  double total_deadline_s = 120.0;
  /// Per-option step cap during refinement; long enough for a cross-world
  /// drive (the episode limit).
  int option_step_cap = 500;
  /// Refinements longer than this many actions are rejected (0: no limit).
  /// The harness sets it to the episode step limit.
  int max_actions = 0;
};

struct PlanStep {
  std::string skill;
  ObjectArgs objects;
  Params params;
};

struct BilevelStats {
  std::size_t abstract_plans = 0;
  std::size_t samples = 0;
  /// Largest number of samples drawn at one visit of one refinement depth.
  int max_samples_per_visit = 0;
  double search_s = 0.0;
  double refine_s = 0.0;
  bool timed_out = false;
};

struct BilevelResult {
  std::optional<std::vector<ActionDelta>> actions;
  std::vector<PlanStep> plan;  // the refined skill sequence on success
  BilevelStats stats;
};

/// Search-then-sample: abstract plans from GBFS on hff, each refined by
/// depth-first backtracking over sampled parameters on clones of `env` set to
/// `state`.
BilevelResult bilevel_solve(const EnvInstance& env, const SceneState& state, const BilevelConfig& cfg,
                            std::uint64_t seed);

// ---------------------------------------------------------------- MPC

struct MpcConfig {
  int num_candidates = 10;
  int horizon = 100;
  int num_control_points = 10;
  /// Noise standard deviation as a fraction of each action range.
  double noise_sigma = 0.3;
  int replan_every = 1;
  int iters_per_step = 1;
  /// Multiply sigma by 0.8 whenever the incumbent improves. Off by default.
  bool anneal = false;
  /// Run candidate rollouts on OpenMP threads.
  bool parallel = true;
};

using ControlPoint = std::array<double, 5>;
using ControlPoints = std::vector<ControlPoint>;

/// Piecewise-linear interpolation of evenly spaced control points over
/// `horizon` steps (first point at step 0, last at step horizon - 1).
std::vector<ActionDelta> interpolate_controls(const ControlPoints& cps, int horizon);

/// Rollout score: success first, then earlier success.
struct RolloutScore {
  bool success = false;
  int steps = 0;  // steps to success, or the horizon
  double ret = 0.0;
  bool better_than(const RolloutScore& o) const { return ret > o.ret; }
};

RolloutScore score_rollout(const EnvInstance& model, const SceneState& s, const std::vector<ActionDelta>& actions);

struct MpcStep {
  ActionDelta action;
  ControlPoints warm;
  int best = 0;  // 0 is the unperturbed warm start
  RolloutScore score;
  double sigma = 0.0;
};

/// One predictive-sampling round (iters_per_step of them).
MpcStep mpc_act(const EnvInstance& model, const SceneState& s, const MpcConfig& cfg, const ControlPoints& warm,
                Rng& rng, double sigma);

ControlPoints zero_controls(const MpcConfig& cfg);

/// Time-shift by one env step (the last point repeated at the end).
ControlPoints shift_controls(const ControlPoints& cps, int horizon);

// ---------------------------------------------------------------- LLM

struct MissingPlaceholder : KinderError {
  using KinderError::KinderError;
};
struct NoPlanBlock : KinderError {
  using KinderError::KinderError;
};
struct LineParseError : KinderError {
  LineParseError(int line, std::string reason);
  int line;
  std::string reason;
};
struct TransportError : KinderError {
  TransportError(const std::string& what, std::string request, std::string response);
  std::string request;
  std::string response;
};

enum class PromptMode { ZeroShot, InContext };

/// Fills `{name}` placeholders in one pass; substituted text is not
/// rescanned. Throws MissingPlaceholder for a placeholder without a value.
std::string render_template(std::string_view tpl, const std::vector<std::pair<std::string, std::string>>& values);

std::string_view prompt_template(PromptMode mode);

/// Renders the prompt for `s`. In-context mode needs at least one example.
std::string build_prompt(EnvId env, const SceneState& s, PromptMode mode,
                         const std::vector<std::string>& examples = {});

/// Syntactic parse of the last `Plan:` block.
std::vector<PlanStep> parse_plan(std::string_view text);
/// Parse plus checks against a skill inventory (names and arities).
std::vector<PlanStep> parse_plan(std::string_view text, const std::vector<SkillDef>& skills);

struct ChatMessage {
  std::string role;
  std::string content;
};
struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;

  /// Canonical JSON payload.
  std::string to_json() const;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Returns the assistant's reply text. Throws TransportError.
  virtual std::string complete(const ChatRequest& req) = 0;
};

/// Scripted replies, handed out in order (the last one repeats).
class StubTransport : public Transport {
 public:
  explicit StubTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const ChatRequest& req) override;
  std::size_t calls() const { return calls_; }

 private:
  std::vector<std::string> replies_;
  std::size_t calls_ = 0;
};

/// JSONL file of {"request": <payload>, "response": "<text>"} lines. Replay
/// matches on the request payload; identical requests get their recorded
/// responses in file order, the last one repeating. Record mode forwards to
/// `inner` and appends every exchange.
class CassetteTransport : public Transport {
 public:
  static CassetteTransport replay(const std::string& path);
  static CassetteTransport record(const std::string& path, Transport& inner);
  std::string complete(const ChatRequest& req) override;

 private:
  struct Exchange {
    std::string request;
    std::string response;
    bool used = false;
  };
  std::string path_;
  Transport* inner_ = nullptr;
  std::vector<Exchange> tape_;
};

/// One transport shared by several owners (calls are serialized).
class SharedTransport : public Transport {
 public:
  explicit SharedTransport(std::shared_ptr<Transport> inner);
  std::string complete(const ChatRequest& req) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::shared_ptr<std::mutex> mu_;
};

/// Chat-completions endpoint. URL from KINDER_LLM_URL, key from
/// KINDER_LLM_API_KEY.
class HttpTransport : public Transport {
 public:
  HttpTransport();
  std::string complete(const ChatRequest& req) override;

 private:
  std::string url_;
  std::string key_;
};

struct LlmConfig {
  std::string model = "gpt-4o";
  double temperature = 0.0;
  PromptMode mode = PromptMode::ZeroShot;
  std::vector<std::string> examples;
  int option_step_cap = 500;
};

struct LlmResult {
  std::optional<std::vector<ActionDelta>> actions;
  std::vector<PlanStep> plan;
  std::string prompt;
  std::string response;
  /// Parse or execution diagnostics; empty on a clean run.
  std::vector<std::string> diagnostics;
};

/// One request, then the parsed skills run open-loop on a clone.
LlmResult llm_solve(const EnvInstance& env, const SceneState& state, Transport& transport, const LlmConfig& cfg,
                    std::uint64_t seed);

/// Plan lines in the response format, one per step, parameters with
/// `digits` significant digits.
std::string format_plan(EnvId env, const std::vector<PlanStep>& plan, int digits = 17);

/// Default in-context examples for an env (a solved task per example).
std::vector<std::string> default_examples(EnvId env, int n);

}  // namespace kinder
