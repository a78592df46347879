#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kinder/envcore.hpp"

namespace kinder {

enum class EnvId : std::uint8_t {
  Motion2D,
  Obstruction2D,
  ClutteredRetrieval2D,
  ClutteredStorage2D,
  PushPullHook2D,
  StickButton2D,
};

const std::vector<EnvId>& all_envs();
std::string_view env_name(EnvId id);
std::optional<EnvId> env_from_name(std::string_view name);
/// Count letter used in variant strings: p (passages), o (obstructions), b (blocks/buttons).
char variant_letter(EnvId id);

struct VariantSpec {
  EnvId env = EnvId::Motion2D;
  int count = 0;
  WorldBounds world{};

  char letter() const { return variant_letter(env); }
  std::string str() const;
  friend bool operator==(const VariantSpec& a, const VariantSpec& b) {
    return a.env == b.env && a.count == b.count && a.world.width == b.world.width && a.world.height == b.world.height;
  }
};

/// Parses `<EnvName>-<letter><count>` case-sensitively. Throws BadVariant with
/// a diagnostic listing the valid letters.
VariantSpec parse_variant(std::string_view text);

inline constexpr int kGenerationAttempts = 10000;

/// Seeded rejection sampling of an initial state. Throws GenerationFailed when
/// the attempt budget is exhausted.
SceneState generate(const VariantSpec& v, std::uint64_t seed, const RobotSpec& spec = {});

/// Environment-specific constructive solvability checks.
bool certify_feasible(const SceneState& s, const VariantSpec& v);

GoalSpec make_goal(const VariantSpec& v);

/// Post-motion contact effects (button pressing, hook pushing). nullopt means
/// the whole step must be reverted.
std::optional<SceneState> resolve_contact_rules(EnvId env, const SceneState& before, const SceneState& after,
                                                const WorldBounds& world = {});
ContactRule contact_rule(EnvId env, const WorldBounds& world = {});

/// Object order of the constant-object flattening for a variant.
FlatLayout flat_layout(const VariantSpec& v);

// Geometry constants shared with the skill layer.
inline constexpr double kPressTol = 1e-9;
inline constexpr double kOnGapTol = 1e-4;
inline constexpr double kTableBottom = 6.0;     // StickButton2D and PushPullHook2D
inline constexpr double kFloorTop = 1.0;        // Obstruction2D (side view)
inline constexpr double kTouchSlack = 1e-9;

/// One environment instance: variant, robot, goal, and the current state.
/// Copyable; a copy is an independent clone.
class EnvInstance {
 public:
  explicit EnvInstance(VariantSpec v, RobotSpec spec = {});

  const SceneState& reset(std::uint64_t seed);
  StepOutcome step(const ActionDelta& a);

  const SceneState& state() const { return state_; }
  void set_state(SceneState s) { state_ = std::move(s); }

  bool check_goal() const { return goal_.predicate(state_); }
  bool check_goal(const SceneState& s) const { return goal_.predicate(s); }

  const VariantSpec& variant() const { return variant_; }
  const RobotSpec& robot_spec() const { return spec_; }
  const GoalSpec& goal() const { return goal_; }
  const ContactRule& rule() const { return rule_; }
  std::uint64_t seed() const { return seed_; }
  EnvInstance clone() const { return *this; }

 private:
  VariantSpec variant_;
  RobotSpec spec_;
  GoalSpec goal_;
  ContactRule rule_;
  std::uint64_t seed_ = 0;
  SceneState state_;
};

}  // namespace kinder
