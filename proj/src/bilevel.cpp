#include <algorithm>
#include <chrono>

#include "kinder/baselines.hpp"
#include "kinder/errors.hpp"

namespace kinder {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Refiner {
  const EnvInstance& env;
  const std::vector<SkillDef>& skills;
  const plan::GroundProblem& gp;
  const std::vector<int>& ops;
  const BilevelConfig& cfg;
  std::uint64_t seed;
  std::uint64_t plan_index;
  Clock::time_point deadline;
  BilevelStats& stats;
  std::vector<PlanStep> steps;
  std::vector<ActionDelta> actions;
  std::uint64_t visits = 0;

  bool expected_effects(const SceneState& s, const plan::GroundOperator& g) const {
    const auto atoms = abstract(s, predicates_for(env.variant().env));
    for (int a : g.add) {
      if (!atoms.count(gp.atoms[static_cast<std::size_t>(a)])) return false;
    }
    for (int d : g.del) {
      if (atoms.count(gp.atoms[static_cast<std::size_t>(d)])) return false;
    }
    return true;
  }

  bool refine(std::size_t depth, const SceneState& s) {
    if (depth == ops.size()) return env.check_goal(s);
    if (Clock::now() > deadline) {
      stats.timed_out = true;
      return false;
    }
    const auto& g = gp.ops[static_cast<std::size_t>(ops[depth])];
    const SkillDef& sk = skills[g.schema];
    const std::uint64_t visit = visits++;
    int drawn = 0;
    for (int k = 0; k < cfg.samples_per_step; ++k) {
      if (Clock::now() > deadline) {
        stats.timed_out = true;
        return false;
      }
      Rng rng(fnv64({seed, plan_index, depth, visit, static_cast<std::uint64_t>(k)}));
      const Params p = sk.sampler(s, g.args, rng);
      ++drawn;
      ++stats.samples;
      stats.max_samples_per_visit = std::max(stats.max_samples_per_visit, drawn);
      EnvInstance sim = env.clone();
      sim.set_state(s);
      int cap = cfg.option_step_cap;
      if (cfg.max_actions > 0) cap = std::min(cap, cfg.max_actions - static_cast<int>(actions.size()));
      if (cap <= 0) return false;
      OptionResult r;
      try {
        r = execute_option(sim, sk, g.args, p, cap, rng.next_u64());
      } catch (const InitiationFailed&) {
        return false;  // initiability depends on the state only
      }
      if (!r.success || !expected_effects(r.states.back(), g)) continue;
      const std::size_t mark = actions.size();
      actions.insert(actions.end(), r.actions.begin(), r.actions.end());
      steps.push_back({sk.name, g.args, p});
      if (refine(depth + 1, r.states.back())) return true;
      actions.resize(mark);
      steps.pop_back();
    }
    return false;
  }
};

}  // namespace

BilevelResult bilevel_solve(const EnvInstance& env, const SceneState& state, const BilevelConfig& cfg,
                            std::uint64_t seed) {
  BilevelResult out;
  const auto t0 = Clock::now();
  const EnvId id = env.variant().env;
  if (env.check_goal(state)) {
    out.actions = std::vector<ActionDelta>{};
    return out;
  }
  const SkillEnv se{id, env.robot_spec(), env.variant().world};
  const auto skills = skill_registry(se);
  const auto domain = domain_for(id);
  const auto problem = problem_for(id, state);
  const auto gp = plan::ground(domain, problem);
  const auto total_deadline = t0 + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(cfg.total_deadline_s));

  plan::PlanStream stream(gp, static_cast<std::size_t>(cfg.max_abstract_plans),
                          std::chrono::duration<double>(cfg.abstract_deadline_s));
  for (int i = 0; i < cfg.max_abstract_plans; ++i) {
    const auto ts = Clock::now();
    auto ap = stream.next();
    out.stats.search_s += seconds_since(ts);
    if (!ap) break;
    ++out.stats.abstract_plans;
    if (ap->ops.empty()) continue;  // abstract goal held but the env goal did not
    const auto tr = Clock::now();
    Refiner r{env, skills, gp, ap->ops, cfg, seed, static_cast<std::uint64_t>(i), total_deadline, out.stats, {}, {}};
    const bool ok = r.refine(0, state);
    out.stats.refine_s += seconds_since(tr);
    if (ok) {
      out.actions = std::move(r.actions);
      out.plan = std::move(r.steps);
      return out;
    }
    if (out.stats.timed_out) break;
  }
  out.stats.timed_out = out.stats.timed_out || stream.stats().timed_out;
  return out;
}

}  // namespace kinder
