#include <algorithm>
#include <cmath>
#include <memory>

#include "kinder/symbols.hpp"
#include "skill_geom.hpp"

namespace kinder {

using geom::kPi;
using geom::Pose2;
using geom::Vec2;

namespace {

using namespace detail;

// ---------------------------------------------------------------- scripts

/// Waypoints after the current config, or nullopt on failure.
using Compile = std::function<std::optional<std::vector<RobotConfig>>(const SceneState&, std::uint64_t)>;

struct Segment {
  Compile compile;
  double vacuum = 0.0;  // nonzero: a single vacuum command
};

bool reached(const RobotConfig& a, const RobotConfig& b) {
  return std::abs(a.pose.x - b.pose.x) <= 1e-6 && std::abs(a.pose.y - b.pose.y) <= 1e-6 &&
         std::abs(geom::angle_diff(a.pose.theta, b.pose.theta)) <= 1e-6 && std::abs(a.ext - b.ext) <= 1e-6;
}

/// Follows segments in order, compiling each from the state it starts in.
/// A step that does not arrive where commanded (a revert) fails the option.
class ScriptPolicy : public OptionPolicy {
 public:
  ScriptPolicy(std::vector<Segment> segs, RobotSpec spec, std::uint64_t seed)
      : segs_(std::move(segs)), spec_(spec), seed_(seed) {}

  OptionStep next(const SceneState& s) override {
    const RobotConfig cur = robot_config(s);
    while (true) {
      if (seg_ == segs_.size()) return OptionDone{};
      const Segment& sg = segs_[seg_];
      if (!compiled_) {
        if (sg.vacuum != 0.0) {
          ++seg_;
          return ActionDelta({0.0, 0.0, 0.0, 0.0, sg.vacuum});
        }
        auto w = sg.compile(s, seed_ + 7919 * seg_);
        if (!w) return OptionFailed{"segment " + std::to_string(seg_) + " has no feasible target"};
        wps_ = std::move(*w);
        i_ = 0;
        compiled_ = true;
      }
      if (i_ > 0 && !reached(cur, wps_[i_ - 1])) return OptionFailed{"motion blocked"};
      if (i_ == wps_.size()) {
        ++seg_;
        compiled_ = false;
        continue;
      }
      return action_toward(cur, wps_[i_++], spec_);
    }
  }

 private:
  std::vector<Segment> segs_;
  RobotSpec spec_;
  std::uint64_t seed_;
  std::size_t seg_ = 0;
  bool compiled_ = false;
  std::vector<RobotConfig> wps_;
  std::size_t i_ = 0;
};

class FailedPolicy : public OptionPolicy {
 public:
  explicit FailedPolicy(std::string why) : why_(std::move(why)) {}
  OptionStep next(const SceneState&) override { return OptionFailed{why_}; }

 private:
  std::string why_;
};

/// Shared between the segments of one option execution.
struct Memory {
  RobotConfig pre, final;
  bool ok = false;
};

struct Ctx {
  SkillEnv env;

  std::vector<RobotConfig> drop_first(MotionPlan p) const {
    p.waypoints.erase(p.waypoints.begin());
    return std::move(p.waypoints);
  }

  Segment plan_to(std::function<std::optional<ConfigGoal>(const SceneState&)> goal,
                  std::vector<std::string> extra = {}) const {
    auto self = *this;
    return {[self, goal, extra](const SceneState& s, std::uint64_t seed) -> std::optional<std::vector<RobotConfig>> {
      auto g = goal(s);
      if (!g) return std::nullopt;
      MotionOptions o;
      o.extra_obstacles = extra;
      auto p = plan_motion(s, *g, seed, self.env.spec, self.env.world, o);
      if (!p) return std::nullopt;
      return self.drop_first(std::move(*p));
    }};
  }

  Segment plan_to_config(std::shared_ptr<Memory> m, bool to_pre, std::vector<std::string> extra = {}) const {
    return plan_to(
        [m, to_pre](const SceneState&) -> std::optional<ConfigGoal> {
          if (!m->ok) return std::nullopt;
          return ConfigGoal::exact(to_pre ? m->pre : m->final);
        },
        std::move(extra));
  }

  Segment straight_to(std::function<std::optional<RobotConfig>(const SceneState&)> target,
                      std::vector<std::string> extra = {}) const {
    auto self = *this;
    return {[self, target, extra](const SceneState& s, std::uint64_t) -> std::optional<std::vector<RobotConfig>> {
      auto t = target(s);
      if (!t) return std::nullopt;
      MotionOptions o;
      o.extra_obstacles = extra;
      auto p = straight_plan(s, *t, self.env.spec, self.env.world, o);
      if (!p) return std::nullopt;
      return self.drop_first(std::move(*p));
    }};
  }

  Segment straight_to_final(std::shared_ptr<Memory> m, std::vector<std::string> extra = {}) const {
    return straight_to([m](const SceneState&) -> std::optional<RobotConfig> {
      if (!m->ok) return std::nullopt;
      return m->final;
    }, std::move(extra));
  }

  /// Runs `prepare` at segment start to fill memory, then plans to m->pre.
  Segment prepare_then_plan(std::shared_ptr<Memory> m, std::function<bool(const SceneState&, Memory&)> prepare,
                            std::vector<std::string> extra = {}) const {
    auto plan = plan_to_config(m, true, extra);
    return {[m, prepare, plan](const SceneState& s, std::uint64_t seed) -> std::optional<std::vector<RobotConfig>> {
      m->ok = prepare(s, *m);
      if (!m->ok) return std::nullopt;
      return plan.compile(s, seed);
    }};
  }

  CollisionWorld world_of(const SceneState& s, std::span<const std::string> extra = {}) const {
    return CollisionWorld(s, env.world, extra, 1e-7);
  }

  std::unique_ptr<OptionPolicy> script(std::vector<Segment> segs, std::uint64_t seed) const {
    return std::make_unique<ScriptPolicy>(std::move(segs), env.spec, seed);
  }
};

// ---------------------------------------------------------------- operators

plan::Atom atom(std::string p, std::vector<std::string> args) { return {std::move(p), std::move(args)}; }

plan::OperatorSchema op(std::string name, std::vector<plan::TypedName> params, std::vector<plan::Atom> pre,
                        std::vector<plan::Atom> add, std::vector<plan::Atom> del) {
  return {std::move(name), std::move(params), std::move(pre), std::move(add), std::move(del)};
}

/// Binds an operator's parameters to `objs` and checks the preconditions
/// against the abstraction of `s`.
bool preconditions_hold(EnvId env, const plan::OperatorSchema& o, const SceneState& s, const ObjectArgs& objs) {
  if (objs.size() != o.params.size()) return false;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const auto* obj = s.find(objs[i]);
    if (!obj) return false;
    const auto& d = type_def(obj->type);
    if (o.params[i].type != "object" && d.name != o.params[i].type && d.parent != o.params[i].type) return false;
  }
  if (o.pre.empty()) return true;
  std::vector<PredicateDef> needed;
  for (const auto& p : predicates_for(env)) {
    if (std::any_of(o.pre.begin(), o.pre.end(), [&](const plan::Atom& a) { return a.pred == p.name; })) {
      needed.push_back(p);
    }
  }
  for (const auto& a : o.pre) {
    ObjectArgs args;
    for (const auto& x : a.args) {
      std::string v = x;
      for (std::size_t i = 0; i < objs.size(); ++i) {
        if (o.params[i].name == x) v = objs[i];
      }
      args.push_back(v);
    }
    const auto it = std::find_if(needed.begin(), needed.end(), [&](const auto& p) { return p.name == a.pred; });
    if (it == needed.end() || !it->classifier(s, args)) return false;
  }
  return true;
}

bool holds(EnvId env, const std::string& pred, const SceneState& s, const ObjectArgs& args) {
  for (const auto& p : predicates_for(env)) {
    if (p.name == pred) return p.classifier(s, args);
  }
  return false;
}

void finish(SkillDef& sk, EnvId env) {
  auto o = sk.op;
  sk.initiable = [env, o](const SceneState& s, const ObjectArgs& a) { return preconditions_hold(env, o, s, a); };
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

template <class Feasible>
Params rejection(Rng& rng, const ParamBox& box, int tries, Feasible feasible,
                 std::function<Params(Rng&)> draw = {}) {
  Params p;
  for (int k = 0; k < tries; ++k) {
    if (draw) {
      p = draw(rng);
    } else {
      p.assign(box.lo.size(), 0.0);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(box.lo[i], box.hi[i]);
    }
    if (feasible(p)) return p;
  }
  return p;
}

// ---------------------------------------------------------------- MoveTo

SkillDef move_to(const Ctx& c) {
  SkillDef sk;
  sk.name = "MoveTo";
  sk.objects = {{"?r", "robot"}, {"?g", "region"}};
  sk.param_names = {"theta_offset"};
  sk.box = {{-kPi}, {kPi}};
  sk.description = "Drive the robot base into region ?g; the heading changes by theta_offset on the way.";
  sk.op = op("MoveTo", sk.objects, {}, {atom("InRegion", {"?r", "?g"})}, {});
  sk.sampler = [](const SceneState&, const ObjectArgs&, Rng& rng) { return Params{rng.uniform(-kPi / 4, kPi / 4)}; };
  sk.terminal = [](const SceneState& s, const ObjectArgs& a) { return holds(EnvId::Motion2D, "InRegion", s, a); };
  sk.early_stop = true;
  sk.policy = [c](const SceneState& s0, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    const RobotConfig start = robot_config(s0);
    const auto& reg = s0.at(a[1]);
    const Pose2 rp = reg.pose();
    const double hw = std::max(reg.f[bf::kHalfW] - 0.1, reg.f[bf::kHalfW] / 2);
    const double hh = std::max(reg.f[bf::kHalfH] - 0.1, reg.f[bf::kHalfH] / 2);
    const double th = geom::wrap_angle(start.pose.theta + (p.empty() ? 0.0 : p[0]));
    ConfigGoal g;
    g.contains = [rp, hw, hh, th, start](const RobotConfig& q) {
      const Vec2 l = rp.to_local(q.pose.position());
      return std::abs(l.x) <= hw && std::abs(l.y) <= hh && std::abs(geom::angle_diff(q.pose.theta, th)) <= 1e-9 &&
             std::abs(q.ext - start.ext) <= 1e-9;
    };
    g.sample = [rp, hw, hh, th, start](Rng& rng) {
      RobotConfig q = start;
      const Vec2 w = rp.apply({rng.uniform(-hw, hw), rng.uniform(-hh, hh)});
      q.pose = {w.x, w.y, th};
      return q;
    };
    const Vec2 l = rp.to_local(start.pose.position());
    const Vec2 w = rp.apply({std::clamp(l.x, -hw, hw), std::clamp(l.y, -hh, hh)});
    RobotConfig pref = start;
    pref.pose = {w.x, w.y, th};
    g.preferred = pref;
    return c.script({c.plan_to([g](const SceneState&) { return std::optional<ConfigGoal>(g); })}, seed);
  };
  finish(sk, EnvId::Motion2D);
  return sk;
}

// ---------------------------------------------------------------- Pick

/// Pick script for a face point computed from the initial state.
std::unique_ptr<OptionPolicy> pick_script(const Ctx& c, const SceneState& s0, const FacePoint& fp,
                                          std::uint64_t seed) {
  const auto cw = c.world_of(s0);
  const auto g = feasible_grasp(cw, s0.robot(), fp, c.env.spec);
  if (!g) return std::make_unique<FailedPolicy>("no collision-free grasp");
  auto m = std::make_shared<Memory>(Memory{g->pre, g->grasp, true});
  return c.script({c.plan_to_config(m, true), c.straight_to_final(m), Segment{{}, 1.0}}, seed);
}

bool grasp_ok(const Ctx& c, const SceneState& s, const FacePoint& fp) {
  const auto cw = c.world_of(s);
  return feasible_grasp(cw, s.robot(), fp, c.env.spec).has_value();
}

SkillDef pick(const Ctx& c, EnvId env, bool need_graspable) {
  SkillDef sk;
  sk.name = "Pick";
  sk.objects = {{"?r", "robot"}, {"?b", "block"}};
  sk.param_names = {"grasp"};
  sk.box = {{0.0}, {1.0}};
  sk.description = "Grasp block ?b with the vacuum at fraction `grasp` along its perimeter (approach along the face normal).";
  std::vector<plan::Atom> pre{atom("HandEmpty", {"?r"})};
  if (need_graspable) pre.push_back(atom("Graspable", {"?b"}));
  sk.op = op("Pick", sk.objects, pre, {atom("Holding", {"?r", "?b"})}, {atom("HandEmpty", {"?r"})});
  sk.sampler = [c](const SceneState& s, const ObjectArgs& a, Rng& rng) {
    return rejection(rng, {{0.0}, {1.0}}, 48, [&](const Params& p) {
      return grasp_ok(c, s, rect_perimeter_point(s.at(a[1]), p[0]));
    });
  };
  sk.terminal = [](const SceneState& s, const ObjectArgs& a) { return s.is_held(a[1]); };
  sk.policy = [c](const SceneState& s0, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    return pick_script(c, s0, rect_perimeter_point(s0.at(a[1]), p.empty() ? 0.0 : p[0]), seed);
  };
  finish(sk, env);
  return sk;
}

// ---------------------------------------------------------------- Place

/// Candidate base configs placing the held object at `target`; the first
/// valid one by extension.
std::optional<RobotConfig> placing_config(const CollisionWorld& cw, const SceneState& s, const std::string& obj,
                                          const Pose2& target) {
  const Pose2 rel = held_relative(s, obj);
  const auto& r = s.robot();
  std::vector<double> exts{r.f[rf::kExt]};
  for (double e : ext_candidates(r)) exts.push_back(e);
  for (double e : exts) {
    const auto q = config_for_object_pose(target, rel, e, r.f[rf::kVacHalfH]);
    if (cw.valid(q)) return q;
  }
  return std::nullopt;
}

RobotConfig shifted(RobotConfig q, double dx, double dy) {
  q.pose.x += dx;
  q.pose.y += dy;
  return q;
}

struct Placement {
  Pose2 target;
  Vec2 approach{0, 0};  // pre-config offset
};

/// x of the object's centre from p in [0, 1], over the union of intervals.
std::optional<double> pick_in_intervals(const std::vector<std::pair<double, double>>& iv, double p) {
  double total = 0;
  for (const auto& [lo, hi] : iv) total += hi - lo;
  if (total <= 0) return std::nullopt;
  double t = clamp01(p) * total;
  for (const auto& [lo, hi] : iv) {
    if (t <= hi - lo) return lo + t;
    t -= hi - lo;
  }
  return iv.back().second;
}

/// Free x-intervals for an object of half-width `ehw` resting on `surface`,
/// away from other unheld blocks and from `avoid` surfaces.
std::vector<std::pair<double, double>> free_intervals(const SceneState& s, const std::string& obj,
                                                      const std::string& surface, double ehw,
                                                      const std::vector<std::string>& avoid) {
  const auto sb = object_box(s.at(surface));
  std::vector<std::pair<double, double>> iv{{sb.min_x + ehw + 0.02, sb.max_x - ehw - 0.02}};
  auto cut = [&](double lo, double hi) {
    std::vector<std::pair<double, double>> out;
    for (const auto& [a, b] : iv) {
      if (hi <= a || lo >= b) {
        out.push_back({a, b});
        continue;
      }
      if (lo > a) out.push_back({a, lo});
      if (hi < b) out.push_back({hi, b});
    }
    iv = std::move(out);
  };
  for (const auto& o : s.objects()) {
    if (o.type != ObjType::Block || o.name == obj || s.is_held(o.name)) continue;
    const auto b = object_box(o);
    cut(b.min_x - ehw - 0.05, b.max_x + ehw + 0.05);
  }
  for (const auto& a : avoid) {
    const auto b = object_box(s.at(a));
    cut(b.min_x - ehw - 0.03, b.max_x + ehw + 0.03);
  }
  std::erase_if(iv, [](const auto& x) { return x.second - x.first <= 1e-9; });
  return iv;
}

constexpr double kRestGap = 5e-5;
constexpr double kShelfSlotPitch = 0.5;

std::optional<Placement> surface_placement(const SceneState& s, const std::string& obj, const std::string& surface,
                                           double p, const std::vector<std::string>& avoid, bool within) {
  const auto& o = s.at(obj);
  const auto bb = object_box(o);
  const double ehw = (bb.max_x - bb.min_x) / 2, ehh = (bb.max_y - bb.min_y) / 2;
  const auto sb = object_box(s.at(surface));
  std::vector<std::pair<double, double>> iv;
  if (within) {
    iv = free_intervals(s, obj, surface, ehw, avoid);
    // Must lie within the surface, so use its interval only.
    std::erase_if(iv, [&](const auto& x) { return x.first < sb.min_x + ehw - 1e-9 || x.second > sb.max_x - ehw + 1e-9; });
  } else {
    iv = free_intervals(s, obj, surface, ehw, avoid);
  }
  const auto x = pick_in_intervals(iv, p);
  if (!x) return std::nullopt;
  const Vec2 centre_offset = o.pose().position() - Vec2{(bb.min_x + bb.max_x) / 2, (bb.min_y + bb.max_y) / 2};
  Pose2 t{*x + centre_offset.x, sb.max_y + ehh + kRestGap + centre_offset.y, o.pose().theta};
  return Placement{t, {0.0, 0.3}};
}

std::optional<Placement> shelf_placement(const SceneState& s, const std::string& obj, const std::string& shelf,
                                         double p) {
  const auto& o = s.at(obj);
  const auto& sh = s.at(shelf);
  const double left = sh.f[bf::kX] - sh.f[bf::kHalfW];
  const double back = sh.f[bf::kY] + sh.f[bf::kHalfH];
  const int slots = static_cast<int>(std::floor((2 * sh.f[bf::kHalfW] - 0.4) / kShelfSlotPitch + 1e-9));
  std::vector<double> free;
  for (int i = 0; i < slots; ++i) {
    const double x = left + 0.45 + kShelfSlotPitch * i;
    bool taken = false;
    for (const auto& b : s.objects()) {
      if (b.type != ObjType::Block || b.name == obj || s.is_held(b.name)) continue;
      const auto bb = object_box(b);
      taken = taken || (bb.min_x < x + 0.25 && bb.max_x > x - 0.25 && bb.max_y > sh.f[bf::kY] - sh.f[bf::kHalfH]);
    }
    if (!taken) free.push_back(x);
  }
  if (free.empty()) return std::nullopt;
  const auto k = std::min(free.size() - 1, static_cast<std::size_t>(clamp01(p) * static_cast<double>(free.size())));
  // Heading +y; the object keeps its grasp-relative angle.
  const Pose2 rel = held_relative(s, obj);
  const double th = geom::wrap_angle(kPi / 2 + rel.theta);
  Pose2 t{free[k], 0.0, th};
  const double c = std::abs(std::cos(th)), sn = std::abs(std::sin(th));
  const double ehh = c * o.f[bf::kHalfH] + sn * o.f[bf::kHalfW];
  t.y = back - 0.01 - ehh;
  return Placement{t, {0.0, -0.9}};
}

std::optional<Placement> region_placement(const SceneState& s, const std::string& obj, const std::string& region,
                                          const Params& p) {
  const auto& o = s.at(obj);
  const auto& rg = s.at(region);
  const double circ = std::hypot(o.f[bf::kHalfW], o.f[bf::kHalfH]) + 0.01;
  const double hx = rg.f[bf::kHalfW] - circ, hy = rg.f[bf::kHalfH] - circ;
  if (hx < 0 || hy < 0) return std::nullopt;
  const Vec2 w = rg.pose().apply({(2 * clamp01(p[0]) - 1) * hx, (2 * clamp01(p[1]) - 1) * hy});
  return Placement{{w.x, w.y, geom::wrap_angle(o.pose().theta + p[2])}, {0, 0}};
}

bool prepare_placement(const Ctx& c, const SceneState& s, const std::string& obj, const std::optional<Placement>& pl,
                       Memory& m) {
  if (!pl || !s.is_held(obj)) return false;
  const auto cw = c.world_of(s);
  const auto q = placing_config(cw, s, obj, pl->target);
  if (!q) return false;
  m.final = *q;
  m.final.vacuum_on = true;
  m.pre = shifted(*q, pl->approach.x, pl->approach.y);
  return segment_valid(cw, m.pre, m.final, c.env.spec);
}

enum class DestKind { Surface, Shelf, Region };

DestKind dest_kind(EnvId env, const std::string& dest) {
  if (env == EnvId::Obstruction2D) return DestKind::Surface;
  if (env == EnvId::ClutteredStorage2D && dest == "shelf") return DestKind::Shelf;
  return DestKind::Region;
}

std::optional<Placement> placement_for(EnvId env, const SceneState& s, const std::string& obj, const std::string& dest,
                                       const Params& p) {
  switch (dest_kind(env, dest)) {
    case DestKind::Surface: return surface_placement(s, obj, dest, p[0], {}, true);
    case DestKind::Shelf: return shelf_placement(s, obj, dest, p[0]);
    case DestKind::Region: return region_placement(s, obj, dest, p);
  }
  return std::nullopt;
}

std::vector<Segment> place_segments(const Ctx& c, std::string obj, std::function<std::optional<Placement>(const SceneState&)> where) {
  auto m = std::make_shared<Memory>();
  return {c.prepare_then_plan(m, [c, obj, where](const SceneState& s, Memory& mem) {
            return prepare_placement(c, s, obj, where(s), mem);
          }),
          c.straight_to_final(m), Segment{{}, -1.0}};
}

SkillDef place(const Ctx& c, EnvId env, const std::string& dest_type) {
  SkillDef sk;
  sk.name = "Place";
  sk.objects = {{"?r", "robot"}, {"?b", "block"}, {"?d", dest_type}};
  sk.param_names = {"p1", "p2", "dtheta"};
  sk.box = {{0.0, 0.0, -kPi}, {1.0, 1.0, kPi}};
  sk.description =
      dest_type == "surface"
          ? "Set held block ?b down on surface ?d at fraction p1 along it and release (p2, dtheta unused)."
          : "Put held block ?b into region ?d at fractional position (p1, p2) rotated by dtheta and release; for a "
            "shelf p1 selects a free slot.";
  const std::string add_pred = dest_type == "surface" ? "On" : "Inside";
  sk.op = op("Place", sk.objects, {atom("Holding", {"?r", "?b"})},
             {atom(add_pred, {"?b", "?d"}), atom("HandEmpty", {"?r"})}, {atom("Holding", {"?r", "?b"})});
  sk.sampler = [c, env](const SceneState& s, const ObjectArgs& a, Rng& rng) {
    return rejection(rng, {{0.0, 0.0, -kPi}, {1.0, 1.0, kPi}}, 32, [&](const Params& p) {
      Memory m;
      return prepare_placement(c, s, a[1], placement_for(env, s, a[1], a[2], p), m);
    }, [](Rng& r) { return Params{r.uniform(), r.uniform(), r.uniform(-0.3, 0.3)}; });
  };
  sk.terminal = [env, add_pred](const SceneState& s, const ObjectArgs& a) {
    return !s.is_held(a[1]) && holds(env, add_pred, s, {a[1], a[2]});
  };
  sk.policy = [c, env](const SceneState&, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    const std::string obj = a[1], dest = a[2];
    Params pp = p;
    pp.resize(3, 0.0);
    return c.script(place_segments(c, obj, [env, obj, dest, pp](const SceneState& s) {
      return placement_for(env, s, obj, dest, pp);
    }), seed);
  };
  finish(sk, env);
  return sk;
}

// ---------------------------------------------------------------- PickAway

std::optional<Placement> away_placement(EnvId env, const SceneState& s, const std::string& obj,
                                        const std::string& other, const Params& p) {
  if (env == EnvId::Obstruction2D) return surface_placement(s, obj, "table", p[1], {other}, false);
  // Retrieval: anywhere on the floor clear of blocks and the target region.
  const auto& o = s.at(obj);
  const double circ = std::hypot(o.f[bf::kHalfW], o.f[bf::kHalfH]);
  const double W = 10.0, H = 10.0;
  const Pose2 t{circ + 0.1 + clamp01(p[1]) * (W - 2 * circ - 0.2), circ + 0.1 + clamp01(p[2]) * (H - 2 * circ - 0.2),
                o.pose().theta};
  ObjectState probe = o;
  probe.set_pose(t);
  const auto sh = object_shape(probe);
  for (const auto& b : s.objects()) {
    if (b.name == obj) continue;
    if (b.type == ObjType::Block || b.name == "target_region") {
      if (geom::distance(sh, object_shape(b)) < 0.35) return std::nullopt;
    }
  }
  return Placement{t, {0, 0}};
}

SkillDef pick_away(const Ctx& c, EnvId env) {
  SkillDef sk;
  sk.name = "PickAway";
  const bool obstruction = env == EnvId::Obstruction2D;
  sk.objects = {{"?r", "robot"}, {"?o", "block"}, {obstruction ? "?s" : "?t", obstruction ? "surface" : "block"}};
  sk.param_names = {"grasp", "p1", "p2"};
  sk.box = {{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  if (obstruction) {
    sk.description = "Grasp block ?o at fraction `grasp` of its perimeter and set it down on the table clear of "
                     "surface ?s, at free position p1 (p2 unused).";
    sk.op = op("PickAway", sk.objects, {atom("HandEmpty", {"?r"}), atom("Obstructing", {"?o", "?s"})},
               {atom("Clear", {"?o", "?s"})}, {atom("Obstructing", {"?o", "?s"})});
  } else {
    sk.description = "Grasp block ?o at fraction `grasp` of its perimeter, move it to the free floor spot (p1, p2) "
                     "away from block ?t, and release.";
    sk.op = op("PickAway", sk.objects, {atom("HandEmpty", {"?r"}), atom("Blocking", {"?o", "?t"})},
               {atom("Graspable", {"?t"})}, {atom("Blocking", {"?o", "?t"})});
  }
  sk.sampler = [c, env](const SceneState& s, const ObjectArgs& a, Rng& rng) {
    return rejection(rng, {{0, 0, 0}, {1, 1, 1}}, 64, [&](const Params& p) {
      if (!grasp_ok(c, s, rect_perimeter_point(s.at(a[1]), p[0]))) return false;
      if (env == EnvId::Obstruction2D) return true;
      return away_placement(env, s, a[1], a[2], p).has_value();
    });
  };
  sk.terminal = [env](const SceneState& s, const ObjectArgs& a) {
    if (!s.held().empty()) return false;
    if (env == EnvId::Obstruction2D) return holds(env, "Clear", s, {a[1], a[2]});
    return !holds(env, "Blocking", s, {a[1], a[2]}) && holds(env, "Graspable", s, {a[2]});
  };
  sk.policy = [c, env](const SceneState& s0, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    Params pp = p;
    pp.resize(3, 0.0);
    const auto cw = c.world_of(s0);
    const auto g = feasible_grasp(cw, s0.robot(), rect_perimeter_point(s0.at(a[1]), pp[0]), c.env.spec);
    if (!g) return std::unique_ptr<OptionPolicy>(std::make_unique<FailedPolicy>("no collision-free grasp"));
    auto m = std::make_shared<Memory>(Memory{g->pre, g->grasp, true});
    std::vector<Segment> segs{c.plan_to_config(m, true), c.straight_to_final(m), Segment{{}, 1.0}};
    const std::string obj = a[1], other = a[2];
    // Lift back out before carrying (side view: straight up).
    segs.push_back(c.straight_to([m](const SceneState&) -> std::optional<RobotConfig> {
      RobotConfig q = m->pre;
      q.vacuum_on = true;
      return q;
    }));
    for (auto& sg : place_segments(c, obj, [env, obj, other, pp](const SceneState& s) {
           return away_placement(env, s, obj, other, pp);
         })) {
      segs.push_back(std::move(sg));
    }
    return c.script(std::move(segs), seed);
  };
  finish(sk, env);
  return sk;
}

// ---------------------------------------------------------------- StickButton2D

double table_base_limit(const SceneState& s) {
  const auto& r = s.robot();
  return object_box(s.at("table")).min_y - r.f[rf::kBaseRadius] - 1e-3;
}

SkillDef press_button(const Ctx& c) {
  SkillDef sk;
  sk.name = "PressButton";
  sk.objects = {{"?r", "robot"}, {"?b", "button"}};
  sk.param_names = {"offset"};
  sk.box = {{0.0}, {1.0}};
  sk.description = "Drive below button ?b (lateral offset from `offset`), face +y, and extend the arm until the "
                   "vacuum touches it.";
  sk.op = op("PressButton", sk.objects, {atom("HandEmpty", {"?r"}), atom("Reachable", {"?b"})},
             {atom("Pressed", {"?b"})}, {});
  sk.sampler = [](const SceneState&, const ObjectArgs&, Rng& rng) { return Params{rng.uniform()}; };
  sk.terminal = [](const SceneState& s, const ObjectArgs& a) { return s.at(a[1]).f[btn::kPressed] > 0.5; };
  sk.early_stop = true;
  sk.policy = [c](const SceneState& s0, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    const auto& b = s0.at(a[1]);
    const auto& r = s0.robot();
    const double rad = r.f[rf::kBaseRadius];
    RobotConfig base;
    base.pose = {std::clamp(b.f[btn::kX] + (2 * clamp01(p.empty() ? 0.5 : p[0]) - 1) * 0.1, rad + 1e-3,
                            c.env.world.width - rad - 1e-3),
                 table_base_limit(s0), kPi / 2};
    base.ext = r.f[rf::kArmMin];
    const double need = b.f[btn::kY] - b.f[btn::kRadius] - base.pose.y - 2 * r.f[rf::kVacHalfH] + 0.02;
    if (need > r.f[rf::kArmMax] + 1e-9) {
      return std::unique_ptr<OptionPolicy>(std::make_unique<FailedPolicy>("button out of arm reach"));
    }
    RobotConfig press = base;
    press.ext = std::max(need, r.f[rf::kArmMin]);
    return c.script({c.plan_to([base](const SceneState&) { return std::optional<ConfigGoal>(ConfigGoal::exact(base)); }),
                     c.straight_to([press](const SceneState&) { return std::optional<RobotConfig>(press); })},
                    seed);
  };
  finish(sk, EnvId::StickButton2D);
  return sk;
}

/// Face of a long thin object facing world -y, at fraction s along it.
FacePoint lower_face_point(const ObjectState& o, double s) {
  const Pose2 pose = o.pose();
  const double hw = o.f[bf::kHalfW], hh = o.f[bf::kHalfH];
  const double ny = pose.rotate({0, -1}).y < 0 ? -1.0 : 1.0;
  return face_point(pose, {(2 * clamp01(s) - 1) * (hw - 0.05), ny * hh}, {0, ny});
}

SkillDef pick_stick(const Ctx& c) {
  SkillDef sk;
  sk.name = "PickStick";
  sk.objects = {{"?r", "robot"}, {"?s", "stick"}};
  sk.param_names = {"s"};
  sk.box = {{0.0}, {1.0}};
  sk.description = "Grasp stick ?s on its lower face at fraction s along its length (0 and 1 are the ends).";
  sk.op = op("PickStick", sk.objects, {atom("HandEmpty", {"?r"})}, {atom("Holding", {"?r", "?s"})},
             {atom("HandEmpty", {"?r"})});
  sk.sampler = [c](const SceneState& s, const ObjectArgs& a, Rng& rng) {
    return rejection(rng, {{0.0}, {1.0}}, 32, [&](const Params& p) {
      return grasp_ok(c, s, lower_face_point(s.at(a[1]), p[0]));
    }, [](Rng& r) {
      // Grasping near an end leaves the most stick to reach with.
      const double u = r.uniform();
      return Params{u < 0.5 ? u * 0.2 : 0.8 + (u - 0.5) * 0.4};
    });
  };
  sk.terminal = [](const SceneState& s, const ObjectArgs& a) { return s.is_held(a[1]); };
  sk.policy = [c](const SceneState& s0, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    return pick_script(c, s0, lower_face_point(s0.at(a[1]), p.empty() ? 0.0 : p[0]), seed);
  };
  finish(sk, EnvId::StickButton2D);
  return sk;
}

/// Far end of a held stick (pulled in by 0.05), in the end-effector frame.
Vec2 stick_tip_in_ee(const SceneState& s, const std::string& stick) {
  const Pose2 rel = held_relative(s, stick);
  const double hw = s.at(stick).f[bf::kHalfW] - 0.05;
  const Vec2 a = rel.apply({hw, 0}), b = rel.apply({-hw, 0});
  return a.norm() >= b.norm() ? a : b;
}

bool stick_press_configs(const Ctx& c, const SceneState& s, const ObjectArgs& a, double alpha, Memory& m) {
  if (!s.is_held(a[1])) return false;
  const Vec2 tip = stick_tip_in_ee(s, a[1]);
  const auto& b = s.at(a[2]);
  const auto& r = s.robot();
  const Pose2 ee_dir{0, 0, alpha};
  const Vec2 ee = Vec2{b.f[btn::kX], b.f[btn::kY]} - ee_dir.rotate(tip);
  const auto cw = c.world_of(s);
  for (double e : ext_candidates(r)) {
    const Vec2 base = ee - (e + r.f[rf::kVacHalfH]) * geom::unit(alpha);
    RobotConfig q{{base.x, base.y, geom::wrap_angle(alpha)}, e, true};
    RobotConfig pre = shifted(q, 0.0, -0.35);
    if (cw.valid(q) && segment_valid(cw, pre, q, c.env.spec)) {
      m.pre = pre;
      m.final = q;
      return true;
    }
  }
  return false;
}

SkillDef press_with_stick(const Ctx& c) {
  SkillDef sk;
  sk.name = "PressWithStick";
  sk.objects = {{"?r", "robot"}, {"?s", "stick"}, {"?b", "button"}};
  sk.param_names = {"alpha"};
  sk.box = {{-kPi}, {kPi}};
  sk.description = "With stick ?s held, take robot heading alpha and push the far stick end up onto button ?b.";
  sk.op = op("PressWithStick", sk.objects, {atom("Holding", {"?r", "?s"})}, {atom("Pressed", {"?b"})}, {});
  sk.sampler = [c](const SceneState& s, const ObjectArgs& a, Rng& rng) {
    if (!s.is_held(a[1])) return Params{rng.uniform(-kPi, kPi)};
    const Vec2 tip = stick_tip_in_ee(s, a[1]);
    const double alpha0 = kPi / 2 - std::atan2(tip.y, tip.x);
    return rejection(rng, {{-kPi}, {kPi}}, 48, [&](const Params& p) {
      Memory m;
      return stick_press_configs(c, s, a, p[0], m);
    }, [alpha0](Rng& r) { return Params{geom::wrap_angle(alpha0 + r.uniform(-0.7, 0.7))}; });
  };
  sk.terminal = [](const SceneState& s, const ObjectArgs& a) { return s.at(a[2]).f[btn::kPressed] > 0.5; };
  sk.early_stop = true;
  sk.policy = [c](const SceneState&, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    const double alpha = p.empty() ? kPi / 2 : p[0];
    auto m = std::make_shared<Memory>();
    return c.script({c.prepare_then_plan(m, [c, a, alpha](const SceneState& s, Memory& mem) {
                       return stick_press_configs(c, s, a, alpha, mem);
                     }),
                     c.straight_to_final(m)},
                    seed);
  };
  finish(sk, EnvId::StickButton2D);
  return sk;
}

// ---------------------------------------------------------------- PushPullHook2D

FacePoint hook_face_point(const ObjectState& h, double s) {
  return face_point(h.pose(), {s, h.f[hk::kThick] / 2}, {0, 1});
}

constexpr double kHookSMin = -1.35, kHookSMax = 1.2;
constexpr double kLegClearance = 0.03;

SkillDef pick_hook(const Ctx& c) {
  SkillDef sk;
  sk.name = "PickHook";
  sk.objects = {{"?r", "robot"}, {"?h", "hook"}};
  sk.param_names = {"s"};
  sk.box = {{kHookSMin}, {kHookSMax}};
  sk.description = "Grasp hook ?h on the leg side of its shaft at offset s from the shaft centre.";
  sk.op = op("PickHook", sk.objects, {atom("HandEmpty", {"?r"})}, {atom("Holding", {"?r", "?h"})},
             {atom("HandEmpty", {"?r"})});
  sk.sampler = [c](const SceneState& s, const ObjectArgs& a, Rng& rng) {
    const auto& h = s.at(a[1]);
    // Low grasps leave room to hold the hook upright above the buttons.
    double hi = kHookSMax;
    if (const auto* mb = s.find("movable_button")) {
      const double hy = mb->f[btn::kY] + mb->f[btn::kRadius] + kLegClearance - (h.f[hk::kShaft] / 2 - h.f[hk::kThick]);
      hi = std::clamp(table_base_limit(s) - 0.01 - hy, kHookSMin, kHookSMax);
    }
    return rejection(rng, {{kHookSMin}, {kHookSMax}}, 32, [&](const Params& p) {
      return grasp_ok(c, s, hook_face_point(h, p[0]));
    }, [hi](Rng& r) { return Params{r.uniform(kHookSMin, hi)}; });
  };
  sk.terminal = [](const SceneState& s, const ObjectArgs& a) { return s.is_held(a[1]); };
  sk.policy = [c](const SceneState& s0, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    return pick_script(c, s0, hook_face_point(s0.at(a[1]), p.empty() ? kHookSMin : p[0]), seed);
  };
  finish(sk, EnvId::PushPullHook2D);
  return sk;
}

SkillDef push_with_hook(const Ctx& c) {
  SkillDef sk;
  sk.name = "PushButtonWithHook";
  sk.objects = {{"?r", "robot"}, {"?h", "hook"}, {"?a", "button"}, {"?b", "button"}};
  sk.param_names = {"contact"};
  sk.box = {{0.0}, {1.0}};
  sk.description = "Hold hook ?h upright with its leg above button ?a (shaft offset from `contact`) and pull down "
                   "until ?a touches button ?b.";
  sk.op = op("PushButtonWithHook", sk.objects, {atom("Holding", {"?r", "?h"})}, {atom("Touching", {"?a", "?b"})}, {});
  sk.sampler = [](const SceneState&, const ObjectArgs&, Rng& rng) { return Params{rng.uniform()}; };
  sk.terminal = [](const SceneState& s, const ObjectArgs& a) { return holds(EnvId::PushPullHook2D, "Touching", s, {a[2], a[3]}); };
  sk.early_stop = true;
  sk.policy = [c](const SceneState&, const ObjectArgs& a, const Params& p, std::uint64_t seed) {
    const std::string hook = a[1], mb = a[2], tb = a[3];
    const double off = 0.3 + 0.2 * clamp01(p.empty() ? 0.5 : p[0]);
    auto m = std::make_shared<Memory>();
    const std::vector<std::string> avoid{mb};
    auto prepare = [c, hook, mb, off, avoid](const SceneState& s, Memory& mem) {
      if (!s.is_held(hook)) return false;
      const auto& h = s.at(hook);
      const auto& b = s.at(mb);
      const double hy = b.f[btn::kY] + b.f[btn::kRadius] + kLegClearance - (h.f[hk::kShaft] / 2 - h.f[hk::kThick]);
      const Pose2 above{b.f[btn::kX] + off + 0.8, hy, kPi / 2};
      const auto cw = c.world_of(s, avoid);
      const auto q = placing_config(cw, s, hook, above);
      if (!q) return false;
      mem.pre = *q;
      mem.final = shifted(*q, -0.8, 0.0);
      return segment_valid(cw, mem.pre, mem.final, c.env.spec);
    };
    auto pull = [mb, tb](const SceneState& s) -> std::optional<RobotConfig> {
      const auto& b = s.at(mb);
      const auto& t = s.at(tb);
      const double rr = b.f[btn::kRadius] + t.f[btn::kRadius];
      const double dx = b.f[btn::kX] - t.f[btn::kX];
      const double drop = kLegClearance + (b.f[btn::kY] - t.f[btn::kY]) - std::sqrt(std::max(0.0, rr * rr - dx * dx)) + 0.02;
      if (drop <= 0) return std::nullopt;
      return shifted(robot_config(s), 0.0, -drop);
    };
    return c.script({c.prepare_then_plan(m, prepare, avoid), c.straight_to_final(m, avoid), c.straight_to(pull)},
                    seed);
  };
  finish(sk, EnvId::PushPullHook2D);
  return sk;
}

}  // namespace

std::vector<SkillDef> skill_registry(const SkillEnv& e) {
  const Ctx c{e};
  switch (e.env) {
    case EnvId::Motion2D: return {move_to(c)};
    case EnvId::Obstruction2D:
      return {pick_away(c, e.env), pick(c, e.env, false), place(c, e.env, "surface")};
    case EnvId::ClutteredRetrieval2D:
      return {pick_away(c, e.env), pick(c, e.env, true), place(c, e.env, "region")};
    case EnvId::ClutteredStorage2D: return {pick(c, e.env, false), place(c, e.env, "region")};
    case EnvId::PushPullHook2D: return {pick_hook(c), push_with_hook(c)};
    case EnvId::StickButton2D: return {press_button(c), pick_stick(c), press_with_stick(c)};
  }
  return {};
}

}  // namespace kinder
