#include "kinder/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "skill_geom.hpp"

namespace kinder {

using geom::Pose2;
using geom::Vec2;

// ---------------------------------------------------------------- geometry

namespace detail {

FacePoint face_point(const Pose2& pose, Vec2 local_point, Vec2 local_normal) {
  return {pose.apply(local_point), pose.rotate(local_normal)};
}

FacePoint rect_perimeter_point(const ObjectState& o, double g) {
  const double hw = o.f[bf::kHalfW], hh = o.f[bf::kHalfH];
  const double per = 4 * (hw + hh);
  double t = std::clamp(g - std::floor(g), 0.0, 1.0) * per;
  auto along = [](double v, double half) { return std::clamp(v, -half + 0.02, half - 0.02); };
  Vec2 p, n;
  if (t < 2 * hw) {
    p = {along(-hw + t, hw), -hh};
    n = {0, -1};
  } else if ((t -= 2 * hw) < 2 * hh) {
    p = {hw, along(-hh + t, hh)};
    n = {1, 0};
  } else if ((t -= 2 * hh) < 2 * hw) {
    p = {along(hw - t, hw), hh};
    n = {0, 1};
  } else {
    t -= 2 * hw;
    p = {-hw, along(hh - t, hh)};
    n = {-1, 0};
  }
  return face_point(o.pose(), p, n);
}

RobotConfig approach_config(const ObjectState& robot, const FacePoint& fp, double ext, double gap) {
  const double vh = robot.f[rf::kVacHalfH];
  const double heading = std::atan2(-fp.normal.y, -fp.normal.x);
  const Vec2 ee = fp.point + (gap + vh) * fp.normal;
  const Vec2 base = ee - (ext + vh) * geom::unit(heading);
  return {{base.x, base.y, geom::wrap_angle(heading)}, ext, robot.f[rf::kVacuumOn] > 0.5};
}

std::vector<double> ext_candidates(const ObjectState& robot) {
  const double lo = robot.f[rf::kArmMin], hi = robot.f[rf::kArmMax];
  return {(lo + hi) / 2, hi, lo};
}

bool segment_valid(const CollisionWorld& cw, const RobotConfig& a, const RobotConfig& b, const RobotSpec& spec) {
  if (!cw.valid(a)) return false;
  for (const auto& c : interpolate(a, b, spec)) {
    if (!cw.valid(c)) return false;
  }
  return true;
}

std::optional<Grasp> feasible_grasp(const CollisionWorld& cw, const ObjectState& robot, const FacePoint& fp,
                                    const RobotSpec& spec) {
  for (double ext : ext_candidates(robot)) {
    Grasp g{approach_config(robot, fp, ext, kGraspGap + kPregraspBackoff), approach_config(robot, fp, ext, kGraspGap)};
    if (segment_valid(cw, g.pre, g.grasp, spec)) return g;
  }
  return std::nullopt;
}

Pose2 held_relative(const SceneState& s, const std::string& obj) {
  return geom::transform(geom::inverse(ee_pose(s.robot())), s.at(obj).pose());
}

RobotConfig config_for_object_pose(const Pose2& target, const Pose2& rel, double ext, double vac_half_h) {
  const Pose2 ee = geom::transform(target, geom::inverse(rel));
  const Pose2 base = geom::transform(ee, {-(ext + vac_half_h), 0.0, 0.0});
  return {{base.x, base.y, geom::wrap_angle(base.theta)}, ext, true};
}

geom::Aabb object_box(const ObjectState& o) { return geom::aabb(object_shape(o)); }

}  // namespace detail

// ---------------------------------------------------------------- predicates

plan::PredicateSig PredicateDef::signature() const {
  plan::PredicateSig sig{name, {}};
  for (std::size_t i = 0; i < types.size(); ++i) sig.params.push_back({"?" + std::string(1, char('a' + i)), types[i]});
  return sig;
}

namespace {

using detail::object_box;

bool x_overlap(const geom::Aabb& a, const geom::Aabb& b) { return a.min_x < b.max_x && b.min_x < a.max_x; }

bool rests_on(const SceneState& s, const std::string& b, const std::string& surf, bool within) {
  if (s.is_held(b)) return false;
  const auto bb = object_box(s.at(b)), sb = object_box(s.at(surf));
  const double gap = bb.min_y - sb.max_y;
  if (gap < -1e-6 || gap > kOnGapTol) return false;
  if (within) return bb.min_x >= sb.min_x - 1e-9 && bb.max_x <= sb.max_x + 1e-9;
  return x_overlap(bb, sb);
}

bool graspable(const SceneState& s, const std::string& name) {
  if (s.is_held(name)) return false;
  const auto& o = s.at(name);
  if (o.type != ObjType::Block && o.type != ObjType::Stick) return false;
  const CollisionWorld cw(s, {}, {}, 1e-7);
  RobotSpec spec;
  for (int k = 0; k < 32; ++k) {
    const auto fp = detail::rect_perimeter_point(o, (k + 0.5) / 32.0);
    if (detail::feasible_grasp(cw, s.robot(), fp, spec)) return true;
  }
  return false;
}

bool pressed(const SceneState& s, const std::string& b) { return s.at(b).f[btn::kPressed] > 0.5; }

bool reachable(const SceneState& s, const std::string& b) {
  const auto* table = s.find("table");
  if (!table) return true;
  const auto& r = s.robot();
  const auto& o = s.at(b);
  const double base_top = object_box(*table).min_y - r.f[rf::kBaseRadius];
  const double need = o.f[btn::kY] - o.f[btn::kRadius] - base_top;
  return need <= r.f[rf::kArmMax] + 2 * r.f[rf::kVacHalfH] - 0.05;
}

bool touching(const SceneState& s, const std::string& a, const std::string& b) {
  if (a == b) return false;
  const auto& x = s.at(a);
  const auto& y = s.at(b);
  const double d = std::hypot(x.f[btn::kX] - y.f[btn::kX], x.f[btn::kY] - y.f[btn::kY]);
  return d <= x.f[btn::kRadius] + y.f[btn::kRadius] + kTouchSlack;
}

PredicateDef pred(std::string name, std::vector<std::string> types,
                  std::function<bool(const SceneState&, const ObjectArgs&)> f) {
  return {std::move(name), std::move(types), std::move(f)};
}

std::vector<PredicateDef> make_predicates(EnvId env) {
  std::vector<PredicateDef> out{
      pred("HandEmpty", {"robot"}, [](const SceneState& s, const ObjectArgs&) { return s.held().empty(); }),
      pred("Holding", {"robot", "movable"}, [](const SceneState& s, const ObjectArgs& a) { return s.is_held(a[1]); }),
  };
  switch (env) {
    case EnvId::Motion2D:
      out.push_back(pred("InRegion", {"robot", "region"}, [](const SceneState& s, const ObjectArgs& a) {
        const auto& r = s.robot();
        return geom::contains_point(object_shape(s.at(a[1])), {r.f[rf::kX], r.f[rf::kY]});
      }));
      break;
    case EnvId::Obstruction2D:
      out.push_back(pred("On", {"block", "surface"},
                         [](const SceneState& s, const ObjectArgs& a) { return rests_on(s, a[0], a[1], true); }));
      out.push_back(pred("Obstructing", {"block", "surface"},
                         [](const SceneState& s, const ObjectArgs& a) { return rests_on(s, a[0], a[1], false); }));
      out.push_back(pred("Clear", {"block", "surface"}, [](const SceneState& s, const ObjectArgs& a) {
        return !s.is_held(a[0]) && !x_overlap(object_box(s.at(a[0])), object_box(s.at(a[1])));
      }));
      break;
    case EnvId::ClutteredRetrieval2D:
      out.push_back(pred("Inside", {"block", "region"}, [](const SceneState& s, const ObjectArgs& a) {
        return geom::contains(object_shape(s.at(a[1])), object_shape(s.at(a[0])));
      }));
      out.push_back(pred("Graspable", {"block"}, [](const SceneState& s, const ObjectArgs& a) { return graspable(s, a[0]); }));
      out.push_back(pred("Blocking", {"block", "block"}, [](const SceneState& s, const ObjectArgs& a) {
        if (a[0] == a[1] || s.is_held(a[0]) || s.is_held(a[1])) return false;
        return geom::distance(object_shape(s.at(a[0])), object_shape(s.at(a[1]))) <= 0.1;
      }));
      break;
    case EnvId::ClutteredStorage2D:
      out.push_back(pred("Inside", {"block", "region"}, [](const SceneState& s, const ObjectArgs& a) {
        return geom::contains(object_shape(s.at(a[1])), object_shape(s.at(a[0])));
      }));
      break;
    case EnvId::PushPullHook2D:
      out.push_back(pred("Touching", {"button", "button"},
                         [](const SceneState& s, const ObjectArgs& a) { return touching(s, a[0], a[1]); }));
      break;
    case EnvId::StickButton2D:
      out.push_back(pred("Pressed", {"button"}, [](const SceneState& s, const ObjectArgs& a) { return pressed(s, a[0]); }));
      out.push_back(
          pred("Reachable", {"button"}, [](const SceneState& s, const ObjectArgs& a) { return reachable(s, a[0]); }));
      break;
  }
  return out;
}

bool type_matches(ObjType t, const std::string& want) {
  if (want == "object") return true;
  const auto& d = type_def(t);
  return d.name == want || d.parent == want;
}

}  // namespace

const std::vector<PredicateDef>& predicates_for(EnvId env) {
  static const std::map<EnvId, std::vector<PredicateDef>> table = [] {
    std::map<EnvId, std::vector<PredicateDef>> m;
    for (EnvId e : all_envs()) m[e] = make_predicates(e);
    return m;
  }();
  return table.at(env);
}

std::set<plan::Atom> abstract(const SceneState& s, const std::vector<PredicateDef>& preds) {
  std::set<plan::Atom> out;
  for (const auto& p : preds) {
    std::vector<std::vector<std::string>> choices;
    for (const auto& t : p.types) {
      std::vector<std::string> names;
      for (const auto& o : s.objects()) {
        if (type_matches(o.type, t)) names.push_back(o.name);
      }
      choices.push_back(std::move(names));
    }
    std::vector<std::size_t> idx(choices.size(), 0);
    bool any = std::all_of(choices.begin(), choices.end(), [](const auto& c) { return !c.empty(); });
    while (any) {
      ObjectArgs args;
      for (std::size_t i = 0; i < idx.size(); ++i) args.push_back(choices[i][idx[i]]);
      if (p.classifier(s, args)) out.insert({p.name, args});
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == choices[k].size()) idx[k++] = 0;
      any = k < idx.size();
    }
  }
  return out;
}

std::vector<plan::Atom> goal_atoms(EnvId env, const SceneState& s) {
  std::vector<plan::Atom> g;
  switch (env) {
    case EnvId::Motion2D:
      g.push_back({"InRegion", {"robot", "target_region"}});
      break;
    case EnvId::Obstruction2D:
      g.push_back({"On", {"target_block", "target_surface"}});
      for (const auto& o : s.objects()) {
        if (o.name.rfind("obstruction", 0) == 0) g.push_back({"Clear", {o.name, "target_surface"}});
      }
      g.push_back({"HandEmpty", {"robot"}});
      break;
    case EnvId::ClutteredRetrieval2D:
      g.push_back({"Inside", {"target_block", "target_region"}});
      g.push_back({"HandEmpty", {"robot"}});
      break;
    case EnvId::ClutteredStorage2D:
      for (const auto& o : s.objects()) {
        if (o.type == ObjType::Block) g.push_back({"Inside", {o.name, "shelf"}});
      }
      g.push_back({"HandEmpty", {"robot"}});
      break;
    case EnvId::PushPullHook2D:
      g.push_back({"Touching", {"movable_button", "target_button"}});
      break;
    case EnvId::StickButton2D:
      for (const auto& o : s.objects()) {
        if (o.type == ObjType::Button) g.push_back({"Pressed", {o.name}});
      }
      break;
  }
  return g;
}

bool ParamBox::contains(const Params& p) const {
  if (p.size() != lo.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= lo[i] && p[i] <= hi[i])) return false;
  }
  return true;
}

const SkillDef* find_skill(const std::vector<SkillDef>& skills, std::string_view name) {
  for (const auto& s : skills) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

// ---------------------------------------------------------------- execution

OptionResult execute_option(EnvInstance& env, const SkillDef& skill, const ObjectArgs& objects, const Params& params,
                            int cap, std::uint64_t seed) {
  if (!skill.initiable(env.state(), objects)) {
    std::string call = skill.name + "(";
    for (std::size_t i = 0; i < objects.size(); ++i) call += (i ? ", " : "") + objects[i];
    throw InitiationFailed(call + ") is not initiable");
  }
  OptionResult res;
  res.states.push_back(env.state());
  auto policy = skill.policy(env.state(), objects, params, seed);
  for (int step = 0;; ++step) {
    if (skill.early_stop && skill.terminal(env.state(), objects)) {
      res.success = true;
      return res;
    }
    const OptionStep next = policy->next(env.state());
    if (std::holds_alternative<OptionDone>(next)) {
      res.success = skill.terminal(env.state(), objects);
      if (!res.success) res.failure = "terminal condition not reached";
      return res;
    }
    if (const auto* f = std::get_if<OptionFailed>(&next)) {
      res.failure = f->reason;
      return res;
    }
    if (step == cap) {
      res.failure = "step cap reached";
      return res;
    }
    const auto& a = std::get<ActionDelta>(next);
    env.step(a);
    res.actions.push_back(a);
    res.states.push_back(env.state());
  }
}

// ---------------------------------------------------------------- export

namespace {

std::vector<plan::TypeDecl> env_types(EnvId env) {
  std::vector<std::string> names{"robot"};
  for (const auto& [n, t] : flat_layout(VariantSpec{env, 1, {}}).objects) {
    const std::string tn(type_def(t).name);
    if (std::find(names.begin(), names.end(), tn) == names.end()) names.push_back(tn);
  }
  std::vector<plan::TypeDecl> out;
  std::vector<std::string> parents;
  for (const auto& tn : names) {
    const std::string parent(type_def(*type_from_name(tn)).parent);
    if (parent != "object" && std::find(parents.begin(), parents.end(), parent) == parents.end()) {
      parents.push_back(parent);
    }
  }
  for (const auto& p : parents) out.push_back({p, "object"});
  for (const auto& tn : names) out.push_back({tn, std::string(type_def(*type_from_name(tn)).parent)});
  return out;
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  std::string s(buf);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

plan::Domain domain_for(EnvId env) {
  plan::Domain d;
  d.name = std::string(env_name(env));
  d.types = env_types(env);
  d.constants = {{"robot", "robot"}};
  for (const auto& p : predicates_for(env)) d.predicates.push_back(p.signature());
  for (const auto& sk : skill_registry(env)) d.operators.push_back(sk.op);
  return d;
}

plan::Problem problem_for(EnvId env, const SceneState& s) {
  plan::Problem p;
  p.name = std::string(env_name(env)) + "-task";
  p.domain = std::string(env_name(env));
  for (const auto& o : s.objects()) {
    if (o.type != ObjType::Robot) p.objects.push_back({o.name, std::string(type_def(o.type).name)});
  }
  std::sort(p.objects.begin(), p.objects.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  const auto atoms = abstract(s, predicates_for(env));
  p.init.assign(atoms.begin(), atoms.end());
  p.goal = goal_atoms(env, s);
  return p;
}

std::string controllers_block(EnvId env) {
  std::string out;
  for (const auto& sk : skill_registry(env)) {
    std::string types, lo, hi;
    for (std::size_t i = 0; i < sk.objects.size(); ++i) types += (i ? ", " : "") + sk.objects[i].type;
    for (std::size_t i = 0; i < sk.box.lo.size(); ++i) {
      lo += (i ? ", " : "") + fmt_num(sk.box.lo[i]);
      hi += (i ? ", " : "") + fmt_num(sk.box.hi[i]);
    }
    out += "ParameterizedController(name=" + sk.name + ", types=[" + types + "], params_space=Box([" + lo + "], [" +
           hi + "], (" + std::to_string(sk.box.lo.size()) + ",), float32))\n";
    out += "    " + sk.description + "\n";
  }
  return out;
}

std::string type_hierarchy_block(EnvId env) {
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
  for (const auto& t : env_types(env)) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == t.parent; });
    if (it == groups.end()) {
      groups.push_back({t.parent, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(t.name);
  }
  std::string out;
  for (const auto& [parent, kids] : groups) {
    for (const auto& k : kids) out += k + " ";
    out += "- " + parent + "\n";
  }
  return out;
}

std::string typed_objects_block(const SceneState& s) {
  std::string out;
  for (const auto& o : s.objects()) out += o.name + ": " + std::string(type_def(o.type).name) + "\n";
  return out;
}

std::string atoms_block(const std::vector<plan::Atom>& atoms) {
  std::string out;
  for (const auto& a : atoms) out += a.str() + "\n";
  return out;
}

}  // namespace kinder
