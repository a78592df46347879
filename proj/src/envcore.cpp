#include "kinder/envcore.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace kinder {

using geom::PlacedConvex;
using geom::Pose2;

namespace {

const std::vector<std::string_view> kRobotFeatures{"x",       "y",       "theta",         "ext",          "vacuum_on",
                                                    "base_radius", "arm_min", "arm_max", "vacuum_half_w", "vacuum_half_h"};
const std::vector<std::string_view> kRectFeatures{"x", "y", "theta", "half_w", "half_h", "is_held", "r", "g", "b", "flag"};
const std::vector<std::string_view> kButtonFeatures{"x", "y", "theta", "radius", "r", "g", "b", "pressed", "movable"};
const std::vector<std::string_view> kHookFeatures{"x",         "y",       "theta", "shaft_len", "leg_len",
                                                  "thickness", "is_held", "r",     "g",         "b"};

std::vector<ObjectTypeDef> make_types() {
  using C = CollisionClass;
  return {
      {ObjType::Robot, "robot", "object", kRobotFeatures, C::Robot, false},
      {ObjType::Block, "block", "movable", kRectFeatures, C::Movable, true},
      {ObjType::Stick, "stick", "movable", kRectFeatures, C::Movable, true},
      {ObjType::Hook, "hook", "movable", kHookFeatures, C::Movable, true},
      {ObjType::Button, "button", "object", kButtonFeatures, C::Passive, false},
      {ObjType::Wall, "wall", "static", kRectFeatures, C::Static, false},
      {ObjType::Surface, "surface", "static", kRectFeatures, C::Static, false},
      {ObjType::Table, "table", "static", kRectFeatures, C::BaseOnly, false},
      {ObjType::Holder, "holder", "static", kRectFeatures, C::BaseOnly, false},
      {ObjType::Region, "region", "object", kRectFeatures, C::Passive, false},
  };
}

std::size_t held_index(ObjType t) { return t == ObjType::Hook ? std::size_t{hk::kHeld} : std::size_t{bf::kHeld}; }

}  // namespace

std::size_t object_parts(const ObjectState& o, std::array<PlacedConvex, 2>& out) {
  const Pose2 pose = o.pose();
  switch (o.type) {
    case ObjType::Button:
      out[0] = {geom::Circle{o.f[btn::kRadius]}, pose};
      return 1;
    case ObjType::Hook: {
      const double shaft = o.f[hk::kShaft], leg = o.f[hk::kLeg], t = o.f[hk::kThick];
      out[0] = {geom::Rect{shaft / 2, t / 2}, pose};
      out[1] = {geom::Rect{t / 2, leg / 2}, geom::transform(pose, {shaft / 2 - t / 2, t / 2 + leg / 2, 0.0})};
      return 2;
    }
    case ObjType::Robot:
      out[0] = {geom::Circle{o.f[rf::kBaseRadius]}, pose};
      return 1;
    default:
      out[0] = {geom::Rect{o.f[bf::kHalfW], o.f[bf::kHalfH]}, pose};
      return 1;
  }
}

namespace {

bool in_bounds(const PlacedConvex& s, const WorldBounds& w) {
  constexpr double kSlack = 1e-9;
  const geom::Aabb b = geom::aabb(s);
  return b.min_x >= -kSlack && b.min_y >= -kSlack && b.max_x <= w.width + kSlack && b.max_y <= w.height + kSlack;
}

}  // namespace

const std::vector<ObjectTypeDef>& all_types() {
  static const std::vector<ObjectTypeDef> types = make_types();
  return types;
}

const ObjectTypeDef& type_def(ObjType t) { return all_types()[static_cast<std::size_t>(t)]; }

std::optional<ObjType> type_from_name(std::string_view name) {
  for (const auto& t : all_types()) {
    if (t.name == name) return t.id;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- SceneState

ObjectState& SceneState::add(std::string name, ObjType type, std::span<const double> features) {
  if (find(name)) throw KinderError("duplicate object name: " + name);
  const auto& def = type_def(type);
  if (features.size() != def.features.size()) {
    throw KinderError("feature count mismatch for " + name + " of type " + std::string(def.name));
  }
  ObjectState o;
  o.name = std::move(name);
  o.type = type;
  std::copy(features.begin(), features.end(), o.f.begin());
  objects_.push_back(std::move(o));
  return objects_.back();
}

const ObjectState* SceneState::find(std::string_view name) const {
  for (const auto& o : objects_) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

ObjectState* SceneState::find(std::string_view name) {
  for (auto& o : objects_) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

const ObjectState& SceneState::at(std::string_view name) const {
  if (const auto* o = find(name)) return *o;
  throw KinderError("no object named " + std::string(name));
}

ObjectState& SceneState::at(std::string_view name) {
  if (auto* o = find(name)) return *o;
  throw KinderError("no object named " + std::string(name));
}

bool SceneState::is_held(std::string_view name) const {
  return std::find(held_.begin(), held_.end(), name) != held_.end();
}

void SceneState::set_held(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  for (const auto& n : names) {
    if (!type_def(at(n).type).can_be_held) throw KinderError("object cannot be held: " + n);
  }
  held_ = std::move(names);
  for (auto& o : objects_) {
    if (type_def(o.type).can_be_held) o.f[held_index(o.type)] = is_held(o.name) ? 1.0 : 0.0;
  }
}

std::vector<std::string> SceneState::names_of(ObjType t) const {
  std::vector<std::string> out;
  for (const auto& o : objects_) {
    if (o.type == t) out.push_back(o.name);
  }
  return out;
}

// ---------------------------------------------------------------- robot

void RobotSpec::validate() const {
  if (!(base_radius > 0.0)) throw KinderError("base_radius must be positive");
  if (!(arm_min >= base_radius)) throw KinderError("arm_min must be >= base_radius");
  if (!(arm_max > arm_min)) throw KinderError("arm_max must exceed arm_min");
  if (!(vacuum_half_w > 0.0 && vacuum_half_h > 0.0)) throw KinderError("vacuum dimensions must be positive");
  for (double d : max_deltas) {
    if (!(d > 0.0)) throw KinderError("max_deltas must be positive");
  }
}

std::array<double, 10> RobotSpec::features(const Pose2& pose, double ext, bool vacuum_on) const {
  return {pose.x,        pose.y,        geom::wrap_angle(pose.theta), ext, vacuum_on ? 1.0 : 0.0, base_radius,
          arm_min,       arm_max,       vacuum_half_w,                vacuum_half_h};
}

RobotConfig robot_config(const SceneState& s) {
  const auto& r = s.robot();
  return {r.pose(), r.f[rf::kExt], r.f[rf::kVacuumOn] > 0.5};
}

RobotParts robot_parts(const ObjectState& robot) {
  const Pose2 base = robot.pose();
  const double ext = robot.f[rf::kExt];
  const double vh = robot.f[rf::kVacHalfH];
  return {
      {geom::Circle{robot.f[rf::kBaseRadius]}, base},
      {geom::Rect{ext / 2, kArmHalfThickness}, geom::transform(base, {ext / 2, 0.0, 0.0})},
      {geom::Rect{vh, robot.f[rf::kVacHalfW]}, geom::transform(base, {ext + vh, 0.0, 0.0})},
  };
}

Pose2 ee_pose(const ObjectState& robot) {
  return geom::transform(robot.pose(), {robot.f[rf::kExt] + robot.f[rf::kVacHalfH], 0.0, 0.0});
}

geom::PlacedShape object_shape(const ObjectState& obj) {
  std::array<PlacedConvex, 2> parts;
  const std::size_t n = object_parts(obj, parts);
  if (n == 1) {
    return std::visit([&](const auto& s) { return geom::PlacedShape{s, parts[0].pose}; }, parts[0].shape);
  }
  geom::Compound c;
  const Pose2 inv = geom::inverse(obj.pose());
  for (std::size_t i = 0; i < n; ++i) c.parts.push_back({parts[i].shape, geom::transform(inv, parts[i].pose)});
  return {c, obj.pose()};
}

ActionDelta::ActionDelta(std::array<double, 5> raw) {
  for (std::size_t i = 0; i < 5; ++i) u[i] = std::isnan(raw[i]) ? 0.0 : std::clamp(raw[i], -1.0, 1.0);
}

// ---------------------------------------------------------------- transition

bool configuration_valid(const SceneState& s, const WorldBounds& world, const ValidityOptions& opts) {
  const auto& robot = s.robot();
  const RobotParts rp = robot_parts(robot);

  std::array<PlacedConvex, 8> carried;
  std::size_t n_carried = 0;
  carried[n_carried++] = rp.arm;
  carried[n_carried++] = rp.vacuum;
  for (const auto& name : s.held()) {
    std::array<PlacedConvex, 2> parts;
    const std::size_t n = object_parts(s.at(name), parts);
    for (std::size_t i = 0; i < n && n_carried < carried.size(); ++i) carried[n_carried++] = parts[i];
  }

  if (!in_bounds(rp.base, world)) return false;
  for (std::size_t i = 0; i < n_carried; ++i) {
    if (!in_bounds(carried[i], world)) return false;
  }

  const geom::Aabb base_box = geom::aabb(rp.base);
  for (const auto& obj : s.objects()) {
    if (obj.type == ObjType::Robot || s.is_held(obj.name)) continue;
    const bool extra =
        std::find(opts.extra_obstacles.begin(), opts.extra_obstacles.end(), obj.name) != opts.extra_obstacles.end();
    const CollisionClass cls = obj.collision();
    const bool blocks_base = extra || cls != CollisionClass::Passive;
    const bool blocks_rest = extra || cls == CollisionClass::Static || cls == CollisionClass::Movable;
    if (!blocks_base) continue;

    std::array<PlacedConvex, 2> parts;
    const std::size_t n = object_parts(obj, parts);
    for (std::size_t i = 0; i < n; ++i) {
      const geom::Aabb box = geom::aabb(parts[i]);
      if (box.overlaps(base_box) && geom::collides(rp.base, parts[i], opts.tol)) return false;
      if (!blocks_rest) continue;
      for (std::size_t k = 0; k < n_carried; ++k) {
        if (geom::collides(carried[k], parts[i], opts.tol)) return false;
      }
    }
  }
  return true;
}

SceneState with_config(const SceneState& s, const RobotConfig& cfg) {
  SceneState out = s;
  auto& robot = out.robot();
  const Pose2 ee_old = ee_pose(robot);
  robot.set_pose({cfg.pose.x, cfg.pose.y, geom::wrap_angle(cfg.pose.theta)});
  robot.f[rf::kExt] = cfg.ext;
  if (out.held().empty()) return out;
  const Pose2 ee_new = ee_pose(robot);
  const Pose2 ee_old_inv = geom::inverse(ee_old);
  for (const auto& name : s.held()) {
    auto& obj = out.at(name);
    obj.set_pose(geom::transform(ee_new, geom::transform(ee_old_inv, obj.pose())));
  }
  return out;
}

std::vector<std::string> attach_scan(const SceneState& s) {
  std::vector<std::string> out;
  const RobotParts rp = robot_parts(s.robot());
  for (const auto& obj : s.objects()) {
    if (obj.collision() != CollisionClass::Movable || s.is_held(obj.name)) continue;
    std::array<PlacedConvex, 2> parts;
    const std::size_t n = object_parts(obj, parts);
    for (std::size_t i = 0; i < n; ++i) {
      if (geom::distance(rp.vacuum, parts[i]) <= kAttachEps) {
        out.push_back(obj.name);
        break;
      }
    }
  }
  return out;
}

StepOutcome kinematic_step(const SceneState& s, const ActionDelta& a, const RobotSpec& spec,
                           const WorldBounds& world, const ContactRule& rule, const GoalSpec& goal) {
  StepOutcome out;
  const RobotConfig cfg = robot_config(s);
  const auto& robot = s.robot();

  RobotConfig next = cfg;
  next.pose.x += a.u[0] * spec.max_deltas[0];
  next.pose.y += a.u[1] * spec.max_deltas[1];
  next.pose.theta = geom::wrap_angle(cfg.pose.theta + a.u[2] * spec.max_deltas[2]);
  next.ext = std::clamp(cfg.ext + a.u[3] * spec.max_deltas[3], robot.f[rf::kArmMin], robot.f[rf::kArmMax]);

  SceneState moved = with_config(s, next);
  if (!configuration_valid(moved, world)) {
    moved = s;
    out.info.reverted = true;
  }
  if (rule) {
    if (auto adjusted = rule(s, moved)) {
      moved = std::move(*adjusted);
    } else {
      moved = s;
      out.info.reverted = true;
    }
  }

  const bool vac_before = moved.robot().f[rf::kVacuumOn] > 0.5;
  const bool vac_after = a.u[4] > 0.0 ? true : (a.u[4] < 0.0 ? false : vac_before);
  moved.robot().f[rf::kVacuumOn] = vac_after ? 1.0 : 0.0;
  if (!vac_after && !moved.held().empty()) {
    out.info.released = moved.held();
    moved.set_held({});
  }
  if (vac_after && moved.held().empty()) {
    auto attached = attach_scan(moved);
    if (!attached.empty()) {
      out.info.newly_attached = attached;
      moved.set_held(std::move(attached));
    }
  }

  out.reward = -1.0;
  out.terminated = goal.predicate ? goal.predicate(moved) : false;
  out.state = std::move(moved);
  return out;
}

// ---------------------------------------------------------------- flatten

std::vector<double> flatten(const SceneState& s, const FlatLayout& layout) {
  if (s.objects().size() != layout.objects.size() + 1) {
    throw LayoutMismatch("state has " + std::to_string(s.objects().size() - 1) + " non-robot objects, layout has " +
                         std::to_string(layout.objects.size()));
  }
  std::vector<double> v;
  const auto rf = s.robot().features();
  v.insert(v.end(), rf.begin(), rf.end());
  for (const auto& [name, type] : layout.objects) {
    const auto* o = s.find(name);
    if (!o) throw LayoutMismatch("missing object " + name);
    if (o->type != type) throw LayoutMismatch("object " + name + " has type " + std::string(type_def(o->type).name));
    const auto f = o->features();
    v.insert(v.end(), f.begin(), f.end());
  }
  return v;
}

SceneState unflatten(std::span<const double> v, const FlatLayout& layout) {
  std::size_t expected = type_def(ObjType::Robot).features.size();
  for (const auto& entry : layout.objects) expected += type_def(entry.second).features.size();
  if (v.size() != expected) throw LayoutMismatch("flat vector length does not match layout");

  SceneState s;
  std::size_t off = 0;
  auto take = [&](std::string name, ObjType t) {
    const std::size_t n = type_def(t).features.size();
    s.add(std::move(name), t, v.subspan(off, n));
    off += n;
  };
  take("robot", ObjType::Robot);
  std::vector<std::string> held;
  for (const auto& [name, type] : layout.objects) {
    take(name, type);
    if (type_def(type).can_be_held && s.at(name).f[held_index(type)] > 0.5) held.push_back(name);
  }
  s.set_held(std::move(held));
  return s;
}

// ---------------------------------------------------------------- json

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_json(const SceneState& s) {
  std::string out = "{\"objects\":[";
  bool first = true;
  for (const auto& o : s.objects()) {
    if (!first) out += ',';
    first = false;
    out += "{\"name\":" + nlohmann::json(o.name).dump() + ",\"type\":\"" + std::string(type_def(o.type).name) +
           "\",\"features\":[";
    const auto f = o.features();
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) out += ',';
      out += format_double(f[i]);
    }
    out += "]}";
  }
  out += "],\"held\":[";
  for (std::size_t i = 0; i < s.held().size(); ++i) {
    if (i) out += ',';
    out += nlohmann::json(s.held()[i]).dump();
  }
  out += "]}";
  return out;
}

SceneState state_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw KinderError(std::string("invalid scene json: ") + e.what());
  }
  SceneState s;
  for (const auto& o : j.at("objects")) {
    const auto type = type_from_name(o.at("type").get<std::string>());
    if (!type) throw KinderError("unknown object type " + o.at("type").dump());
    const auto features = o.at("features").get<std::vector<double>>();
    s.add(o.at("name").get<std::string>(), *type, features);
  }
  s.set_held(j.at("held").get<std::vector<std::string>>());
  return s;
}

// ---------------------------------------------------------------- render

namespace {

int draw_layer(const ObjectState& o) {
  switch (o.type) {
    case ObjType::Region: return 0;
    case ObjType::Table:
    case ObjType::Holder: return 1;
    case ObjType::Wall:
    case ObjType::Surface: return 2;
    case ObjType::Button: return 3;
    default: return 4;
  }
}

std::array<std::uint8_t, 3> object_color(const ObjectState& o) {
  std::size_t r = bf::kR;
  if (o.type == ObjType::Button) r = btn::kR;
  if (o.type == ObjType::Hook) r = hk::kR;
  auto to8 = [](double c) { return static_cast<std::uint8_t>(std::clamp(c, 0.0, 1.0) * 255.0 + 0.5); };
  return {to8(o.f[r]), to8(o.f[r + 1]), to8(o.f[r + 2])};
}

void fill(Image& img, const WorldBounds& w, const PlacedConvex& part, std::array<std::uint8_t, 3> color) {
  const geom::Aabb b = geom::aabb(part);
  const double sx = img.width / w.width, sy = img.height / w.height;
  const int x0 = std::max(0, static_cast<int>(std::floor(b.min_x * sx)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(b.max_x * sx)));
  const int y0 = std::max(0, static_cast<int>(std::floor((w.height - b.max_y) * sy)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil((w.height - b.min_y) * sy)));
  for (int py = y0; py <= y1; ++py) {
    for (int px = x0; px <= x1; ++px) {
      const geom::Vec2 p{(px + 0.5) / sx, w.height - (py + 0.5) / sy};
      if (!geom::contains_point(part, p)) continue;
      const auto i = static_cast<std::size_t>(3 * (py * img.width + px));
      img.rgb[i] = color[0];
      img.rgb[i + 1] = color[1];
      img.rgb[i + 2] = color[2];
    }
  }
}

}  // namespace

Image render(const SceneState& s, int width, int height, const WorldBounds& world) {
  if (width <= 0 || height <= 0) throw KinderError("render size must be positive");
  Image img{width, height, {}};
  img.rgb.resize(static_cast<std::size_t>(3 * width * height));
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = kBackground[0];
    img.rgb[i + 1] = kBackground[1];
    img.rgb[i + 2] = kBackground[2];
  }
  for (int layer = 0; layer <= 4; ++layer) {
    for (const auto& o : s.objects()) {
      if (o.type == ObjType::Robot || draw_layer(o) != layer) continue;
      std::array<PlacedConvex, 2> parts;
      const std::size_t n = object_parts(o, parts);
      for (std::size_t i = 0; i < n; ++i) fill(img, world, parts[i], object_color(o));
    }
  }
  if (const auto* robot = s.find("robot")) {
    const RobotParts rp = robot_parts(*robot);
    fill(img, world, rp.base, {70, 90, 200});
    fill(img, world, rp.arm, {60, 60, 60});
    const bool on = robot->f[rf::kVacuumOn] > 0.5;
    fill(img, world, rp.vacuum, on ? std::array<std::uint8_t, 3>{210, 60, 60} : std::array<std::uint8_t, 3>{140, 140, 140});
  }
  return img;
}

void write_ppm(const Image& img, std::ostream& out) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

}  // namespace kinder
