#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kinder/envcore.hpp"
#include "kinder/errors.hpp"
#include "kinder/suite2d.hpp"

namespace kinder::demos {

inline constexpr int kSchemaVersion = 1;

struct VerificationMismatch : KinderError {
  using KinderError::KinderError;
};
struct UnknownSchema : KinderError {
  using KinderError::KinderError;
};

enum class Source { Teleop, Planner };

std::string_view source_name(Source s);

struct DemoHeader {
  int schema_version = kSchemaVersion;
  std::string env;
  std::string variant;
  std::uint64_t reset_seed = 0;
  Source source = Source::Planner;
  std::string created_at;  // UTC, ISO 8601

  friend bool operator==(const DemoHeader&, const DemoHeader&) = default;
};

/// Actions are stored post-clamp and pre-noise.
struct DemoRecord {
  DemoHeader header;
  std::vector<ActionDelta> steps;
  bool terminal_success = false;

  friend bool operator==(const DemoRecord&, const DemoRecord&) = default;
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_now();

/// Next action for a state; nullopt ends the episode.
using ActionSource = std::function<std::optional<ActionDelta>(const SceneState&)>;

/// Runs `next` from reset(seed) until it stops, the goal is reached, or
/// max_steps actions.
DemoRecord record(const VariantSpec& v, std::uint64_t seed, const ActionSource& next, Source source,
                  int max_steps = 500, std::string created_at = utc_now());

/// A record of a fixed action sequence (truncated after the goal is reached).
DemoRecord record_actions(const VariantSpec& v, std::uint64_t seed, const std::vector<ActionDelta>& actions,
                          Source source, std::string created_at = utc_now());

struct ReplayResult {
  SceneState final_state;
  bool success = false;
};

/// Re-executes the steps from reset. Throws UnknownSchema for an unsupported
/// version or variant, VerificationMismatch when the outcome disagrees with
/// terminal_success or the goal is reached before the last step.
ReplayResult replay(const DemoRecord& demo);

/// JSONL: header line, one line per step, trailer line.
std::string to_jsonl(const DemoRecord& demo);
/// Throws UnknownSchema for a foreign schema version and KinderError for
/// malformed text.
DemoRecord parse_jsonl(std::string_view text);

/// Atomic write (temp file in the same directory, then rename).
void write_demo(const std::string& path, const DemoRecord& demo);
DemoRecord read_demo(const std::string& path);

/// Reads and replays a demo file.
ReplayResult verify_file(const std::string& path);

/// Open-loop planner: actions for a state, or nullopt.
using Planner = std::function<std::optional<std::vector<ActionDelta>>(const EnvInstance& env, const SceneState& s,
                                                                      std::uint64_t seed)>;

/// Bilevel planner with default settings capped at `max_steps` actions.
Planner bilevel_planner(int max_steps = 500);

struct DatasetStats {
  int attempts = 0;
  int successes = 0;
};

struct Dataset {
  std::vector<DemoRecord> demos;
  DatasetStats stats;
};

/// Reset seed of dataset episode i.
std::uint64_t dataset_seed(std::uint64_t base_seed, int i);

/// Runs `planner` on n seeded episodes; every successful episode becomes a demo
/// (in episode order).
Dataset generate_dataset(const Planner& planner, const VariantSpec& v, int n, std::uint64_t base_seed,
                         int workers = 1, const std::string& created_at = utc_now());

/// `<variant>-<seed>.kd-demo.jsonl`
std::string demo_filename(const DemoRecord& demo);

/// Writes every demo into `dir` (created if needed); returns the paths.
std::vector<std::string> write_dataset(const std::string& dir, const Dataset& ds);

}  // namespace kinder::demos
