#include "kinder/motion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kinder {

using geom::Pose2;
using geom::PlacedConvex;

namespace {

bool in_bounds(const geom::Aabb& b, const WorldBounds& w) {
  constexpr double kSlack = 1e-9;
  return b.min_x >= -kSlack && b.min_y >= -kSlack && b.max_x <= w.width + kSlack && b.max_y <= w.height + kSlack;
}

bool blocks_rest(CollisionClass c) { return c == CollisionClass::Static || c == CollisionClass::Movable; }

}  // namespace

ConfigGoal ConfigGoal::exact(const RobotConfig& q) {
  ConfigGoal g;
  g.contains = [q](const RobotConfig& c) {
    return std::abs(c.pose.x - q.pose.x) <= 1e-9 && std::abs(c.pose.y - q.pose.y) <= 1e-9 &&
           std::abs(geom::angle_diff(c.pose.theta, q.pose.theta)) <= 1e-9 && std::abs(c.ext - q.ext) <= 1e-9;
  };
  g.sample = [q](Rng&) { return q; };
  g.preferred = q;
  return g;
}

// ---------------------------------------------------------------- CollisionWorld

CollisionWorld::CollisionWorld(const SceneState& s, const WorldBounds& world,
                               std::span<const std::string> extra_obstacles, double tol)
    : world_(world), tol_(tol) {
  const auto& robot = s.robot();
  radius_ = robot.f[rf::kBaseRadius];
  vac_hw_ = robot.f[rf::kVacHalfW];
  vac_hh_ = robot.f[rf::kVacHalfH];
  const Pose2 ee_inv = geom::inverse(ee_pose(robot));
  for (const auto& obj : s.objects()) {
    if (obj.type == ObjType::Robot) continue;
    std::array<PlacedConvex, 2> parts;
    const std::size_t n = object_parts(obj, parts);
    if (s.is_held(obj.name)) {
      for (std::size_t i = 0; i < n; ++i) held_.push_back({parts[i].shape, geom::transform(ee_inv, parts[i].pose)});
      continue;
    }
    const bool extra = std::find(extra_obstacles.begin(), extra_obstacles.end(), obj.name) != extra_obstacles.end();
    const CollisionClass cls = obj.collision();
    if (!extra && cls == CollisionClass::Passive) continue;
    for (std::size_t i = 0; i < n; ++i) {
      obstacles_.push_back({parts[i], geom::aabb(parts[i]), extra || blocks_rest(cls)});
    }
  }
}

bool CollisionWorld::valid(const RobotConfig& q) const {
  ++checks_;
  const Pose2 base{q.pose.x, q.pose.y, geom::wrap_angle(q.pose.theta)};
  const PlacedConvex base_part{geom::Circle{radius_}, base};
  const geom::Aabb base_box{base.x - radius_, base.y - radius_, base.x + radius_, base.y + radius_};
  if (!in_bounds(base_box, world_)) return false;

  std::array<PlacedConvex, 8> carried;
  std::array<geom::Aabb, 8> boxes;
  std::size_t n = 0;
  carried[n++] = {geom::Rect{q.ext / 2, kArmHalfThickness}, geom::transform(base, {q.ext / 2, 0.0, 0.0})};
  const Pose2 ee = geom::transform(base, {q.ext + vac_hh_, 0.0, 0.0});
  carried[n++] = {geom::Rect{vac_hh_, vac_hw_}, ee};
  for (const auto& h : held_) {
    if (n == carried.size()) break;
    carried[n++] = {h.shape, geom::transform(ee, h.local)};
  }
  for (std::size_t k = 0; k < n; ++k) {
    boxes[k] = geom::aabb(carried[k]);
    if (!in_bounds(boxes[k], world_)) return false;
  }

  for (const auto& ob : obstacles_) {
    if (ob.box.overlaps(base_box) && geom::collides(base_part, ob.part, tol_)) return false;
    if (!ob.blocks_rest) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (ob.box.overlaps(boxes[k]) && geom::collides(carried[k], ob.part, tol_)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- steering

double config_distance(const RobotConfig& a, const RobotConfig& b, const RobotSpec& spec) {
  const auto& md = spec.max_deltas;
  return std::max({std::abs(b.pose.x - a.pose.x) / md[0], std::abs(b.pose.y - a.pose.y) / md[1],
                   std::abs(geom::angle_diff(a.pose.theta, b.pose.theta)) / md[2], std::abs(b.ext - a.ext) / md[3]});
}

namespace {

RobotConfig lerp(const RobotConfig& a, const RobotConfig& b, double t) {
  RobotConfig c = a;
  c.pose.x = a.pose.x + t * (b.pose.x - a.pose.x);
  c.pose.y = a.pose.y + t * (b.pose.y - a.pose.y);
  c.pose.theta = geom::wrap_angle(a.pose.theta + t * geom::angle_diff(a.pose.theta, b.pose.theta));
  c.ext = a.ext + t * (b.ext - a.ext);
  return c;
}

}  // namespace

std::vector<RobotConfig> interpolate(const RobotConfig& a, const RobotConfig& b, const RobotSpec& spec) {
  const int n = std::max(1, static_cast<int>(std::ceil(config_distance(a, b, spec))));
  std::vector<RobotConfig> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k < n; ++k) out.push_back(lerp(a, b, static_cast<double>(k) / n));
  RobotConfig last = b;
  last.pose.theta = geom::wrap_angle(b.pose.theta);
  last.vacuum_on = a.vacuum_on;
  out.push_back(last);
  return out;
}

ActionDelta action_toward(const RobotConfig& cur, const RobotConfig& target, const RobotSpec& spec) {
  const auto& md = spec.max_deltas;
  return ActionDelta({(target.pose.x - cur.pose.x) / md[0], (target.pose.y - cur.pose.y) / md[1],
                      geom::angle_diff(cur.pose.theta, target.pose.theta) / md[2], (target.ext - cur.ext) / md[3],
                      0.0});
}

// ---------------------------------------------------------------- planner

namespace {

struct Tree {
  std::vector<RobotConfig> q;
  std::vector<int> parent;

  int add(const RobotConfig& c, int p) {
    q.push_back(c);
    parent.push_back(p);
    return static_cast<int>(q.size()) - 1;
  }
};

class Planner {
 public:
  Planner(const CollisionWorld& cw, const RobotSpec& spec, const MotionOptions& opts)
      : cw_(cw), spec_(spec), opts_(opts) {}

  bool edge_valid(const RobotConfig& a, const RobotConfig& b) const {
    for (const auto& c : interpolate(a, b, spec_)) {
      if (!cw_.valid(c)) return false;
    }
    return true;
  }

  int nearest(const Tree& t, const RobotConfig& c) const {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.q.size(); ++i) {
      const double d = config_distance(t.q[i], c, spec_);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  enum class Ext { Trapped, Advanced, Reached };

  // One bounded step from the nearest node toward `target`.
  Ext extend(Tree& t, const RobotConfig& target, int& out) {
    const int near = nearest(t, target);
    const RobotConfig& from = t.q[static_cast<std::size_t>(near)];
    const double d = config_distance(from, target, spec_);
    const bool reach = d <= opts_.extend_steps;
    const RobotConfig to = reach ? target : lerp(from, target, opts_.extend_steps / d);
    if (!edge_valid(from, to)) return Ext::Trapped;
    out = t.add(to, near);
    return reach ? Ext::Reached : Ext::Advanced;
  }

  Ext connect(Tree& t, const RobotConfig& target, int& out) {
    Ext e = Ext::Advanced;
    while (e == Ext::Advanced) e = extend(t, target, out);
    return e;
  }

  std::vector<RobotConfig> shortcut(const std::vector<RobotConfig>& pts) const {
    std::vector<RobotConfig> out{pts.front()};
    std::size_t i = 0;
    while (i + 1 < pts.size()) {
      std::size_t j = pts.size() - 1;
      while (j > i + 1 && !edge_valid(pts[i], pts[j])) --j;
      out.push_back(pts[j]);
      i = j;
    }
    return out;
  }

  int expansions = 0;

 private:
  const CollisionWorld& cw_;
  const RobotSpec& spec_;
  const MotionOptions& opts_;
};

std::vector<RobotConfig> path_to_root(const Tree& t, int i) {
  std::vector<RobotConfig> out;
  for (; i >= 0; i = t.parent[static_cast<std::size_t>(i)]) out.push_back(t.q[static_cast<std::size_t>(i)]);
  return out;
}

MotionPlan discretize(const std::vector<RobotConfig>& pts, const RobotSpec& spec) {
  MotionPlan plan{{pts.front()}};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto seg = interpolate(pts[i], pts[i + 1], spec);
    plan.waypoints.insert(plan.waypoints.end(), seg.begin(), seg.end());
  }
  return plan;
}

}  // namespace

std::optional<MotionPlan> plan_motion(const SceneState& s, const ConfigGoal& goal, std::uint64_t seed,
                                      const RobotSpec& spec, const WorldBounds& world, const MotionOptions& opts) {
  const RobotConfig start = robot_config(s);
  if (goal.contains(start)) return MotionPlan{{start}};

  const CollisionWorld cw(s, world, opts.extra_obstacles, opts.tol);
  Planner pl(cw, spec, opts);
  auto finish = [&](std::vector<RobotConfig> pts) {
    for (auto& p : pts) p.vacuum_on = start.vacuum_on;
    if (opts.smooth) pts = pl.shortcut(pts);
    return discretize(pts, spec);
  };

  if (goal.preferred && goal.contains(*goal.preferred) && cw.valid(*goal.preferred) &&
      pl.edge_valid(start, *goal.preferred)) {
    return finish({start, *goal.preferred});
  }

  Rng rng(seed);
  const auto& robot = s.robot();
  const double r = robot.f[rf::kBaseRadius];
  const double amin = robot.f[rf::kArmMin], amax = robot.f[rf::kArmMax];
  auto uniform_config = [&] {
    RobotConfig c;
    c.pose.x = rng.uniform(r, world.width - r);
    c.pose.y = rng.uniform(r, world.height - r);
    c.pose.theta = rng.uniform(-geom::kPi, geom::kPi);
    // Retracted arms pass narrow gaps; favour them.
    c.ext = rng.uniform() < 0.5 ? amin : rng.uniform(amin, amax);
    return c;
  };
  // Bridge test: a free midpoint between two nearby colliding configs lies
  // in a narrow passage.
  auto random_config = [&] {
    if (rng.uniform() < 0.5) {
      for (int k = 0; k < 20; ++k) {
        const RobotConfig a = uniform_config();
        if (cw.valid(a)) continue;
        RobotConfig b = a;
        b.pose.x += rng.normal(0.0, 2 * r);
        b.pose.y += rng.normal(0.0, 2 * r);
        if (cw.valid(b)) continue;
        RobotConfig m = a;
        m.pose.x = (a.pose.x + b.pose.x) / 2;
        m.pose.y = (a.pose.y + b.pose.y) / 2;
        if (cw.valid(m)) return m;
      }
    }
    return uniform_config();
  };

  Tree ts, tg;
  ts.add(start, -1);
  auto add_goal_root = [&](const RobotConfig& g) {
    if (!goal.contains(g) || !cw.valid(g)) return -1;
    for (const auto& q : tg.q) {
      if (config_distance(q, g, spec) < 1e-9) return -1;
    }
    return tg.add(g, -1);
  };
  if (goal.preferred) add_goal_root(*goal.preferred);
  for (int k = 0; k < 20 && tg.q.empty(); ++k) add_goal_root(goal.sample(rng));

  auto joined = [&](int is, int ig) {
    auto a = path_to_root(ts, is);
    std::reverse(a.begin(), a.end());
    auto b = path_to_root(tg, ig);
    a.insert(a.end(), b.begin() + 1, b.end());
    return a;
  };

  bool from_start = true;
  while (pl.expansions < opts.budget) {
    if (tg.q.empty() || rng.uniform() < opts.goal_bias) {
      ++pl.expansions;
      const int root = add_goal_root(goal.sample(rng));
      if (root < 0) continue;
      int is = -1;
      if (pl.connect(ts, tg.q[static_cast<std::size_t>(root)], is) == Planner::Ext::Reached) {
        auto pts = path_to_root(ts, is);
        std::reverse(pts.begin(), pts.end());
        return finish(pts);
      }
      continue;
    }
    ++pl.expansions;
    const RobotConfig q = random_config();
    Tree& ta = from_start ? ts : tg;
    Tree& tb = from_start ? tg : ts;
    int ia = -1, ib = -1;
    if (pl.extend(ta, q, ia) != Planner::Ext::Trapped) {
      if (pl.connect(tb, ta.q[static_cast<std::size_t>(ia)], ib) == Planner::Ext::Reached) {
        return finish(from_start ? joined(ia, ib) : joined(ib, ia));
      }
    }
    from_start = !from_start;
  }
  return std::nullopt;
}

std::optional<MotionPlan> straight_plan(const SceneState& s, const RobotConfig& target, const RobotSpec& spec,
                                        const WorldBounds& world, const MotionOptions& opts) {
  const CollisionWorld cw(s, world, opts.extra_obstacles, opts.tol);
  const RobotConfig start = robot_config(s);
  MotionPlan plan{{start}};
  for (auto c : interpolate(start, target, spec)) {
    c.vacuum_on = start.vacuum_on;
    if (!cw.valid(c)) return std::nullopt;
    plan.waypoints.push_back(c);
  }
  return plan;
}

}  // namespace kinder
