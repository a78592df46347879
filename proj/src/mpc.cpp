#include <algorithm>
#include <cmath>

#include "kinder/baselines.hpp"

namespace kinder {

namespace {

ControlPoint lerp(const ControlPoint& a, const ControlPoint& b, double t) {
  ControlPoint out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + (b[i] - a[i]) * t;
  return out;
}

ControlPoint sample_at(const ControlPoints& cps, int horizon, double step) {
  if (cps.size() == 1 || horizon <= 1) return cps.front();
  const double u = std::clamp(step, 0.0, static_cast<double>(horizon - 1)) * static_cast<double>(cps.size() - 1) /
                   static_cast<double>(horizon - 1);
  const auto j = std::min(static_cast<std::size_t>(u), cps.size() - 2);
  return lerp(cps[j], cps[j + 1], u - static_cast<double>(j));
}

}  // namespace

std::vector<ActionDelta> interpolate_controls(const ControlPoints& cps, int horizon) {
  std::vector<ActionDelta> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) out.emplace_back(sample_at(cps, horizon, t));
  return out;
}

ControlPoints zero_controls(const MpcConfig& cfg) {
  return ControlPoints(static_cast<std::size_t>(cfg.num_control_points), ControlPoint{});
}

ControlPoints shift_controls(const ControlPoints& cps, int horizon) {
  ControlPoints out(cps.size());
  const double spacing = cps.size() > 1 ? static_cast<double>(horizon - 1) / static_cast<double>(cps.size() - 1) : 0;
  for (std::size_t j = 0; j < cps.size(); ++j) out[j] = sample_at(cps, horizon, spacing * static_cast<double>(j) + 1.0);
  return out;
}

RolloutScore score_rollout(const EnvInstance& model, const SceneState& s, const std::vector<ActionDelta>& actions) {
  EnvInstance sim = model.clone();
  sim.set_state(s);
  RolloutScore r;
  if (sim.check_goal()) {
    r.success = true;
    return r;
  }
  for (const auto& a : actions) {
    const auto out = sim.step(a);
    ++r.steps;
    r.ret += out.reward;
    if (out.terminated) {
      r.success = true;
      break;
    }
  }
  return r;
}

MpcStep mpc_act(const EnvInstance& model, const SceneState& s, const MpcConfig& cfg, const ControlPoints& warm,
                Rng& rng, double sigma) {
  MpcStep out;
  out.warm = warm;
  out.sigma = sigma;
  const int n = cfg.num_candidates;
  for (int it = 0; it < cfg.iters_per_step; ++it) {
    // Noise is drawn serially so the result does not depend on threads.
    std::vector<ControlPoints> cands(static_cast<std::size_t>(n), out.warm);
    for (int c = 1; c < n; ++c) {
      for (auto& cp : cands[static_cast<std::size_t>(c)]) {
        for (double& v : cp) v = std::clamp(v + rng.normal(0.0, 2.0 * out.sigma), -1.0, 1.0);
      }
    }
    std::vector<RolloutScore> scores(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
    for (int c = 0; c < n; ++c) {
      const auto i = static_cast<std::size_t>(c);
      scores[i] = score_rollout(model, s, interpolate_controls(cands[i], cfg.horizon));
    }
    int best = 0;
    for (int c = 1; c < n; ++c) {
      if (scores[static_cast<std::size_t>(c)].better_than(scores[static_cast<std::size_t>(best)])) best = c;
    }
    if (it == 0 || scores[static_cast<std::size_t>(best)].better_than(out.score)) {
      if (best != 0 && cfg.anneal) out.sigma *= 0.8;
      out.best = best;
      out.score = scores[static_cast<std::size_t>(best)];
      out.warm = cands[static_cast<std::size_t>(best)];
    }
  }
  out.action = ActionDelta(sample_at(out.warm, cfg.horizon, 0.0));
  out.warm = shift_controls(out.warm, cfg.horizon);
  return out;
}

}  // namespace kinder
