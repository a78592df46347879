#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kinder/envcore.hpp"
#include "kinder/rng.hpp"

namespace kinder {

/// Waypoints from the start config (first) to a goal config (last). Every
/// consecutive pair differs by at most max_deltas per component.
struct MotionPlan {
  std::vector<RobotConfig> waypoints;
};

/// A goal set in configuration space.
struct ConfigGoal {
  std::function<bool(const RobotConfig&)> contains;
  std::function<RobotConfig(Rng&)> sample;
  /// Tried first for a direct connection.
  std::optional<RobotConfig> preferred;

  /// Single-config goal (within 1e-9 per component).
  static ConfigGoal exact(const RobotConfig& q);
};

struct MotionOptions {
  std::span<const std::string> extra_obstacles{};
  int budget = 5000;
  double goal_bias = 0.2;
  /// Stricter than the env's revert tolerance so that replays never revert.
  double tol = 1e-7;
  /// Normalised Chebyshev length of one tree extension.
  double extend_steps = 10.0;
  bool smooth = true;
};

/// configuration_valid specialised for a fixed scene: obstacles and held
/// objects are precomputed once, then queried per robot config.
class CollisionWorld {
 public:
  CollisionWorld(const SceneState& s, const WorldBounds& world, std::span<const std::string> extra_obstacles,
                 double tol);

  bool valid(const RobotConfig& q) const;
  std::size_t n_checks() const { return checks_; }

 private:
  struct Obstacle {
    geom::PlacedConvex part;
    geom::Aabb box;
    bool blocks_rest;
  };
  WorldBounds world_;
  double tol_;
  double radius_;
  double vac_hw_;
  double vac_hh_;
  std::vector<Obstacle> obstacles_;
  std::vector<geom::CompoundPart> held_;  // relative to the end effector
  mutable std::size_t checks_ = 0;
};

/// Per-component normalised Chebyshev distance (theta wrap-aware).
double config_distance(const RobotConfig& a, const RobotConfig& b, const RobotSpec& spec);

/// ceil(distance) evenly spaced configs after `a`, ending exactly at `b`.
std::vector<RobotConfig> interpolate(const RobotConfig& a, const RobotConfig& b, const RobotSpec& spec);

/// Normalised action moving `cur` to `target` (clamped to one step).
ActionDelta action_toward(const RobotConfig& cur, const RobotConfig& target, const RobotSpec& spec);

/// Bidirectional tree search (RRT-Connect) then greedy shortcutting. Returns
/// a single waypoint when the start already satisfies the goal and nullopt
/// when the budget runs out.
std::optional<MotionPlan> plan_motion(const SceneState& s, const ConfigGoal& goal, std::uint64_t seed,
                                      const RobotSpec& spec, const WorldBounds& world,
                                      const MotionOptions& opts = {});

/// Straight-line plan to `target` if every step is valid.
std::optional<MotionPlan> straight_plan(const SceneState& s, const RobotConfig& target, const RobotSpec& spec,
                                        const WorldBounds& world, const MotionOptions& opts = {});

}  // namespace kinder
