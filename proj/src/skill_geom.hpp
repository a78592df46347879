#pragma once

// Grasp and placement geometry shared by predicates and skills.

#include <optional>
#include <vector>

#include "kinder/envcore.hpp"
#include "kinder/motion.hpp"

namespace kinder::detail {

inline constexpr double kGraspGap = 0.005;
inline constexpr double kPregraspBackoff = 0.3;

struct FacePoint {
  geom::Vec2 point;   // world
  geom::Vec2 normal;  // outward, world
};

/// Point on a rectangle's boundary; g in [0, 1) walks bottom, right, top,
/// left faces counter-clockwise. Stays 0.02 away from corners.
FacePoint rect_perimeter_point(const ObjectState& o, double g);

/// Face point on a local face: local point and local outward normal.
FacePoint face_point(const geom::Pose2& pose, geom::Vec2 local_point, geom::Vec2 local_normal);

/// Robot config whose vacuum faces `fp` at distance `gap`, arm at `ext`.
RobotConfig approach_config(const ObjectState& robot, const FacePoint& fp, double ext, double gap);

/// Arm extensions tried for a target pose, mid first.
std::vector<double> ext_candidates(const ObjectState& robot);

struct Grasp {
  RobotConfig pre;
  RobotConfig grasp;
};

/// First extension whose pre-grasp, grasp, and the straight segment between
/// them are valid in `cw`.
std::optional<Grasp> feasible_grasp(const CollisionWorld& cw, const ObjectState& robot, const FacePoint& fp,
                                    const RobotSpec& spec);

/// Pose of a held object relative to the end effector.
geom::Pose2 held_relative(const SceneState& s, const std::string& obj);

/// Base pose putting the held object (relative pose `rel`) at `target`.
RobotConfig config_for_object_pose(const geom::Pose2& target, const geom::Pose2& rel, double ext, double vac_half_h);

bool segment_valid(const CollisionWorld& cw, const RobotConfig& a, const RobotConfig& b, const RobotSpec& spec);

geom::Aabb object_box(const ObjectState& o);

}  // namespace kinder::detail
