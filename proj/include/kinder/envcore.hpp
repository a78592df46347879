#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kinder/errors.hpp"
#include "kinder/geom2d.hpp"

namespace kinder {

enum class ObjType : std::uint8_t { Robot, Block, Stick, Hook, Button, Wall, Surface, Table, Holder, Region };

/// How an object takes part in the collision-revert rule.
enum class CollisionClass : std::uint8_t {
  Robot,
  Static,    // blocks everything
  Movable,   // graspable; blocks the robot and other movables while unheld
  BaseOnly,  // blocks only the robot base (arm, vacuum and held objects pass over)
  Passive,   // never blocks (regions, buttons)
};

inline constexpr std::size_t kMaxFeatures = 10;

struct ObjectTypeDef {
  ObjType id;
  std::string_view name;
  std::string_view parent;
  std::vector<std::string_view> features;
  CollisionClass collision;
  bool can_be_held;
};

const ObjectTypeDef& type_def(ObjType t);
std::optional<ObjType> type_from_name(std::string_view name);
const std::vector<ObjectTypeDef>& all_types();

// Feature indices. Every schema starts with x, y, theta.
namespace rf {
enum : std::size_t { kX, kY, kTheta, kExt, kVacuumOn, kBaseRadius, kArmMin, kArmMax, kVacHalfW, kVacHalfH };
}
// Rectangular objects: blocks, sticks, walls, surfaces, tables, holders, regions.
namespace bf {
enum : std::size_t { kX, kY, kTheta, kHalfW, kHalfH, kHeld, kR, kG, kB, kFlag };
}
namespace btn {
enum : std::size_t { kX, kY, kTheta, kRadius, kR, kG, kB, kPressed, kMovable };
}
namespace hk {
enum : std::size_t { kX, kY, kTheta, kShaft, kLeg, kThick, kHeld, kR, kG, kB };
}

struct ObjectState {
  std::string name;
  ObjType type = ObjType::Block;
  std::array<double, kMaxFeatures> f{};

  std::size_t dim() const { return type_def(type).features.size(); }
  std::span<const double> features() const { return {f.data(), dim()}; }
  geom::Pose2 pose() const { return {f[0], f[1], f[2]}; }
  void set_pose(const geom::Pose2& p) {
    f[0] = p.x;
    f[1] = p.y;
    f[2] = p.theta;
  }
  CollisionClass collision() const { return type_def(type).collision; }

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

/// Object-centric scene: insertion-ordered objects (robot first) plus the set
/// of objects rigidly attached to the vacuum.
class SceneState {
 public:
  ObjectState& add(std::string name, ObjType type, std::span<const double> features);

  const ObjectState* find(std::string_view name) const;
  ObjectState* find(std::string_view name);
  const ObjectState& at(std::string_view name) const;
  ObjectState& at(std::string_view name);

  const std::vector<ObjectState>& objects() const { return objects_; }
  std::vector<ObjectState>& objects() { return objects_; }

  const ObjectState& robot() const { return at("robot"); }
  ObjectState& robot() { return at("robot"); }

  const std::vector<std::string>& held() const { return held_; }
  bool is_held(std::string_view name) const;
  /// Replaces the held set and syncs the is_held feature of every holdable
  /// object.
  void set_held(std::vector<std::string> names);

  std::vector<std::string> names_of(ObjType t) const;

  friend bool operator==(const SceneState&, const SceneState&) = default;

 private:
  std::vector<ObjectState> objects_;
  std::vector<std::string> held_;
};

struct RobotSpec {
  double base_radius = 0.3;
  double arm_min = 0.3;
  double arm_max = 1.0;
  double vacuum_half_w = 0.15;  // across the arm
  double vacuum_half_h = 0.05;  // along the arm
  std::array<double, 4> max_deltas{0.05, 0.05, 0.1, 0.05};

  /// Throws KinderError when an invariant is violated.
  void validate() const;
  std::array<double, 10> features(const geom::Pose2& pose, double ext, bool vacuum_on) const;
};

inline constexpr double kArmHalfThickness = 0.02;
inline constexpr double kAttachEps = 1e-2;

struct RobotConfig {
  geom::Pose2 pose;
  double ext = 0.0;
  bool vacuum_on = false;
  friend bool operator==(const RobotConfig&, const RobotConfig&) = default;
};

RobotConfig robot_config(const SceneState& s);

struct RobotParts {
  geom::PlacedConvex base;
  geom::PlacedConvex arm;
  geom::PlacedConvex vacuum;
};

RobotParts robot_parts(const ObjectState& robot);
/// Convex parts of an object in world frame (two for a hook). No allocation.
std::size_t object_parts(const ObjectState& o, std::array<geom::PlacedConvex, 2>& out);
/// Vacuum center, oriented with the robot heading.
geom::Pose2 ee_pose(const ObjectState& robot);
geom::PlacedShape object_shape(const ObjectState& obj);

/// Five-component normalized action: dx, dy, dtheta, dext, vacuum.
struct ActionDelta {
  std::array<double, 5> u{};

  ActionDelta() = default;
  /// Clamps each component to [-1, 1]; NaN becomes 0.
  explicit ActionDelta(std::array<double, 5> raw);

  friend bool operator==(const ActionDelta&, const ActionDelta&) = default;
};

struct WorldBounds {
  double width = 10.0;
  double height = 10.0;
};

struct StepInfo {
  bool reverted = false;
  std::vector<std::string> newly_attached;
  std::vector<std::string> released;
};

struct StepOutcome {
  SceneState state;
  double reward = -1.0;
  bool terminated = false;
  StepInfo info;
};

struct GoalSpec {
  std::function<bool(const SceneState&)> predicate;
  std::string description;
};

inline bool check_goal(const SceneState& s, const GoalSpec& g) { return g.predicate(s); }

/// Post-motion hook for environment contact rules. Returns the adjusted state,
/// or nullopt to revert the whole motion.
using ContactRule = std::function<std::optional<SceneState>(const SceneState& before, const SceneState& after)>;

struct ValidityOptions {
  /// Passive objects to treat as static obstacles (used by planners that must
  /// not disturb them).
  std::span<const std::string> extra_obstacles{};
  double tol = geom::kDefaultTol;
};

/// The collision-revert predicate: robot body and held objects are inside the
/// world and penetrate nothing they are blocked by.
bool configuration_valid(const SceneState& s, const WorldBounds& world, const ValidityOptions& opts = {});

/// Moves the robot to `cfg` (pose and ext only) and carries held objects
/// rigidly. No validity check.
SceneState with_config(const SceneState& s, const RobotConfig& cfg);

/// Movable, unheld objects within kAttachEps of the vacuum.
std::vector<std::string> attach_scan(const SceneState& s);

StepOutcome kinematic_step(const SceneState& s, const ActionDelta& a, const RobotSpec& spec,
                           const WorldBounds& world, const ContactRule& rule, const GoalSpec& goal);

/// Flat layout for a constant-object variant: the robot first, then these.
struct FlatLayout {
  std::vector<std::pair<std::string, ObjType>> objects;
};

std::vector<double> flatten(const SceneState& s, const FlatLayout& layout);
SceneState unflatten(std::span<const double> v, const FlatLayout& layout);

/// Canonical JSON: {"objects":[{"name","type","features"}],"held":[...]},
/// doubles with 17 significant digits.
std::string to_json(const SceneState& s);
SceneState state_from_json(std::string_view text);
std::string format_double(double v);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::array<std::uint8_t, 3> pixel(int x, int y) const {
    const auto i = static_cast<std::size_t>(3 * (y * width + x));
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

inline constexpr std::array<std::uint8_t, 3> kBackground{245, 245, 240};

/// Orthographic rasterization, world y up, pixel row 0 at the top.
Image render(const SceneState& s, int width, int height, const WorldBounds& world = {});
void write_ppm(const Image& img, std::ostream& out);

}  // namespace kinder
