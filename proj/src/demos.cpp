#include "kinder/demos.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "kinder/baselines.hpp"
#include "kinder/rng.hpp"

namespace kinder::demos {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view source_name(Source s) { return s == Source::Teleop ? "teleop" : "planner"; }

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

DemoHeader make_header(const VariantSpec& v, std::uint64_t seed, Source source, std::string created_at) {
  DemoHeader h;
  h.env = std::string(env_name(v.env));
  h.variant = v.str();
  h.reset_seed = seed;
  h.source = source;
  h.created_at = std::move(created_at);
  return h;
}

}  // namespace

DemoRecord record(const VariantSpec& v, std::uint64_t seed, const ActionSource& next, Source source, int max_steps,
                  std::string created_at) {
  DemoRecord d;
  d.header = make_header(v, seed, source, std::move(created_at));
  EnvInstance env(v);
  env.reset(seed);
  d.terminal_success = env.check_goal();
  while (!d.terminal_success && static_cast<int>(d.steps.size()) < max_steps) {
    const auto a = next(env.state());
    if (!a) break;
    d.steps.push_back(*a);
    d.terminal_success = env.step(*a).terminated;
  }
  return d;
}

DemoRecord record_actions(const VariantSpec& v, std::uint64_t seed, const std::vector<ActionDelta>& actions,
                          Source source, std::string created_at) {
  std::size_t i = 0;
  return record(
      v, seed,
      [&](const SceneState&) -> std::optional<ActionDelta> {
        if (i >= actions.size()) return std::nullopt;
        return actions[i++];
      },
      source, static_cast<int>(actions.size()), std::move(created_at));
}

ReplayResult replay(const DemoRecord& demo) {
  if (demo.header.schema_version != kSchemaVersion) {
    throw UnknownSchema("demo schema version " + std::to_string(demo.header.schema_version) + " is not supported");
  }
  VariantSpec v;
  try {
    v = parse_variant(demo.header.variant);
  } catch (const BadVariant& e) {
    throw UnknownSchema(std::string("demo variant: ") + e.what());
  }
  if (env_name(v.env) != demo.header.env) {
    throw UnknownSchema("demo env " + demo.header.env + " does not match variant " + demo.header.variant);
  }
  EnvInstance env(v);
  env.reset(demo.header.reset_seed);
  ReplayResult r;
  r.success = env.check_goal();
  for (std::size_t i = 0; i < demo.steps.size(); ++i) {
    if (r.success) {
      throw VerificationMismatch("goal reached before step " + std::to_string(i + 1) + " of " +
                                 std::to_string(demo.steps.size()));
    }
    r.success = env.step(demo.steps[i]).terminated;
  }
  r.final_state = env.state();
  if (r.success != demo.terminal_success) {
    throw VerificationMismatch(std::string("replay ") + (r.success ? "reached" : "did not reach") +
                               " the goal but the demo records terminal_success=" +
                               (demo.terminal_success ? "true" : "false"));
  }
  return r;
}

// ---------------------------------------------------------------- files

std::string to_jsonl(const DemoRecord& demo) {
  const auto& h = demo.header;
  ordered_json head;
  head["schema_version"] = h.schema_version;
  head["env"] = h.env;
  head["variant"] = h.variant;
  head["reset_seed"] = h.reset_seed;
  head["source"] = source_name(h.source);
  head["created_at"] = h.created_at;
  std::string out = head.dump() + "\n";
  for (const auto& a : demo.steps) {
    // The shortest form that reads back to the same double.
    out += ordered_json(a.u).dump() + "\n";
  }
  ordered_json tail;
  tail["terminal_success"] = demo.terminal_success;
  tail["num_steps"] = demo.steps.size();
  return out + tail.dump() + "\n";
}

DemoRecord parse_jsonl(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  for (std::string l; std::getline(in, l);) {
    if (!l.empty()) lines.push_back(std::move(l));
  }
  if (lines.size() < 2) throw KinderError("demo needs a header and a trailer line");
  DemoRecord d;
  try {
    const auto head = ordered_json::parse(lines.front());
    d.header.schema_version = head.at("schema_version").get<int>();
    if (d.header.schema_version != kSchemaVersion) {
      throw UnknownSchema("demo schema version " + std::to_string(d.header.schema_version) + " is not supported");
    }
    d.header.env = head.at("env").get<std::string>();
    d.header.variant = head.at("variant").get<std::string>();
    d.header.reset_seed = head.at("reset_seed").get<std::uint64_t>();
    const auto src = head.at("source").get<std::string>();
    if (src != "teleop" && src != "planner") throw KinderError("demo source must be teleop or planner");
    d.header.source = src == "teleop" ? Source::Teleop : Source::Planner;
    d.header.created_at = head.at("created_at").get<std::string>();
    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
      const auto j = ordered_json::parse(lines[i]);
      if (!j.is_array() || j.size() != 5) throw KinderError("demo line " + std::to_string(i + 1) + ": expected 5 numbers");
      std::array<double, 5> u{};
      for (std::size_t k = 0; k < 5; ++k) u[k] = j[k].get<double>();
      d.steps.emplace_back(u);
    }
    const auto tail = ordered_json::parse(lines.back());
    d.terminal_success = tail.at("terminal_success").get<bool>();
    if (tail.at("num_steps").get<std::size_t>() != d.steps.size()) {
      throw KinderError("demo trailer step count does not match the step lines");
    }
  } catch (const ordered_json::exception& e) {
    throw KinderError(std::string("malformed demo: ") + e.what());
  }
  return d;
}

void write_demo(const std::string& path, const DemoRecord& demo) {
  const fs::path p(path);
  const fs::path tmp = p.parent_path() / ("." + p.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw KinderError("cannot write " + tmp.string());
    out << to_jsonl(demo);
    if (!out.flush()) throw KinderError("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

DemoRecord read_demo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw KinderError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

ReplayResult verify_file(const std::string& path) { return replay(read_demo(path)); }

// ---------------------------------------------------------------- datasets

Planner bilevel_planner(int max_steps) {
  return [max_steps](const EnvInstance& env, const SceneState& s, std::uint64_t seed) {
    BilevelConfig cfg;
    cfg.max_actions = max_steps;
    return bilevel_solve(env, s, cfg, seed).actions;
  };
}

std::uint64_t dataset_seed(std::uint64_t base_seed, int i) {
  return fnv64({base_seed, 0x64656d6f, static_cast<std::uint64_t>(i)});
}

Dataset generate_dataset(const Planner& planner, const VariantSpec& v, int n, std::uint64_t base_seed, int workers,
                         const std::string& created_at) {
  if (n < 1) throw KinderError("dataset size must be at least 1");
  std::vector<std::optional<DemoRecord>> slots(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers)) if (workers > 1)
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = dataset_seed(base_seed, i);
    EnvInstance env(v);
    const auto& s = env.reset(seed);
    std::optional<std::vector<ActionDelta>> plan;
    try {
      plan = planner(env, s, seed);
    } catch (const std::exception&) {
      plan.reset();
    }
    if (!plan) continue;
    auto d = record_actions(v, seed, *plan, Source::Planner, created_at);
    if (d.terminal_success) slots[static_cast<std::size_t>(i)] = std::move(d);
  }
  Dataset ds;
  ds.stats.attempts = n;
  for (auto& d : slots) {
    if (!d) continue;
    ds.demos.push_back(std::move(*d));
    ++ds.stats.successes;
  }
  return ds;
}

std::string demo_filename(const DemoRecord& demo) {
  return demo.header.variant + "-" + std::to_string(demo.header.reset_seed) + ".kd-demo.jsonl";
}

std::vector<std::string> write_dataset(const std::string& dir, const Dataset& ds) {
  fs::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto& d : ds.demos) {
    paths.push_back((fs::path(dir) / demo_filename(d)).string());
    write_demo(paths.back(), d);
  }
  return paths;
}

}  // namespace kinder::demos
