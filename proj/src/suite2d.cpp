#include "kinder/suite2d.hpp"

#include <algorithm>
#include <cmath>

#include "kinder/rng.hpp"

namespace kinder {

using geom::kPi;
using geom::PlacedShape;

namespace {

struct Color {
  double r, g, b;
};

constexpr Color kRegionColor{0.55, 0.85, 0.55};
constexpr Color kFloorColor{0.93, 0.93, 0.9};
constexpr Color kWallColor{0.2, 0.2, 0.22};
constexpr Color kSurfaceColor{0.55, 0.45, 0.35};
constexpr Color kTargetSurfaceColor{0.3, 0.7, 0.35};
constexpr Color kTableColor{0.82, 0.74, 0.6};
constexpr Color kHolderColor{0.5, 0.5, 0.5};
constexpr Color kTargetColor{0.2, 0.55, 0.9};
constexpr Color kObstructionColor{0.8, 0.3, 0.3};
constexpr Color kBlockColor{0.6, 0.4, 0.8};
constexpr Color kStickColor{0.6, 0.42, 0.2};
constexpr Color kHookColor{0.35, 0.25, 0.15};
constexpr Color kButtonColor{0.9, 0.15, 0.15};
constexpr Color kTargetButtonColor{0.15, 0.65, 0.25};

void add_rect(SceneState& s, std::string name, ObjType t, double x, double y, double th, double hw, double hh, Color c,
              double flag = 0.0) {
  const std::array<double, 10> f{x, y, geom::wrap_angle(th), hw, hh, 0.0, c.r, c.g, c.b, flag};
  s.add(std::move(name), t, f);
}

void add_button(SceneState& s, std::string name, double x, double y, double r, Color c, bool movable) {
  const std::array<double, 9> f{x, y, 0.0, r, c.r, c.g, c.b, 0.0, movable ? 1.0 : 0.0};
  s.add(std::move(name), ObjType::Button, f);
}

void add_robot(SceneState& s, const RobotSpec& spec, double x, double y, double th) {
  s.add("robot", ObjType::Robot, spec.features({x, y, geom::wrap_angle(th)}, spec.arm_min, false));
}

PlacedShape shape_of(const SceneState& s, std::string_view name) { return object_shape(s.at(name)); }

bool inside_world(const PlacedShape& sh, const WorldBounds& w) {
  const auto b = geom::aabb(sh);
  return b.min_x >= -1e-9 && b.min_y >= -1e-9 && b.max_x <= w.width + 1e-9 && b.max_y <= w.height + 1e-9;
}

// No penetration anywhere: robot against its blockers, and movables against
// statics and each other. Movables resting on base-only supports are fine.
bool initial_state_valid(const SceneState& s, const WorldBounds& w) {
  if (!configuration_valid(s, w)) return false;
  std::vector<PlacedShape> movables, statics;
  for (const auto& o : s.objects()) {
    if (o.type == ObjType::Robot) continue;
    const std::size_t d0 = o.type == ObjType::Button ? std::size_t{btn::kRadius} : std::size_t{bf::kHalfW};
    const std::size_t d1 = o.type == ObjType::Button ? d0 : d0 + 1;
    if (!(o.f[d0] > 0.0 && o.f[d1] > 0.0) || !inside_world(object_shape(o), w)) return false;
    const auto cls = o.collision();
    if (cls == CollisionClass::Movable) {
      movables.push_back(object_shape(o));
      if (!inside_world(movables.back(), w)) return false;
    } else if (cls == CollisionClass::Static) {
      statics.push_back(object_shape(o));
    }
  }
  for (std::size_t i = 0; i < movables.size(); ++i) {
    for (const auto& st : statics) {
      if (geom::collides(movables[i], st)) return false;
    }
    for (std::size_t j = i + 1; j < movables.size(); ++j) {
      if (geom::collides(movables[i], movables[j])) return false;
    }
  }
  return true;
}

double x_lo(const ObjectState& o) { return geom::aabb(object_shape(o)).min_x; }
double x_hi(const ObjectState& o) { return geom::aabb(object_shape(o)).max_x; }
double y_lo(const ObjectState& o) { return geom::aabb(object_shape(o)).min_y; }
double y_hi(const ObjectState& o) { return geom::aabb(object_shape(o)).max_y; }

std::string indexed(std::string_view stem, int i) { return std::string(stem) + std::to_string(i); }

// ---------------------------------------------------------------- generators

std::optional<SceneState> gen_motion(const VariantSpec& v, const RobotSpec& spec, Rng& rng) {
  const double W = v.world.width, H = v.world.height;
  const int K = v.count;
  SceneState s;
  const double hw = rng.uniform(0.4, 0.6), hh = rng.uniform(0.4, 0.6);
  double rx, ry, tx, ty;
  if (K == 0) {
    rx = rng.uniform(0.5, W - 0.5);
    ry = rng.uniform(0.5, H - 0.5);
    const double d = rng.uniform(1.5, 3.5), phi = rng.uniform(-kPi, kPi);
    tx = rx + d * std::cos(phi);
    ty = ry + d * std::sin(phi);
    if (tx < hw || tx > W - hw || ty < hh || ty > H - hh) return std::nullopt;
  } else {
    const double first = W / (K + 1), last = W * K / (K + 1);
    rx = rng.uniform(0.4, first - 0.5);
    ry = rng.uniform(0.5, H - 0.5);
    tx = rng.uniform(last + 0.1 + hw + 0.05, W - hw - 0.05);
    ty = rng.uniform(hh + 0.05, H - hh - 0.05);
  }
  add_robot(s, spec, rx, ry, rng.uniform(-kPi, kPi));
  add_rect(s, "target_region", ObjType::Region, tx, ty, 0.0, hw, hh, kRegionColor);
  for (int i = 0; i < K; ++i) {
    const double xw = W * (i + 1) / (K + 1);
    const double gap = rng.uniform(2 * spec.base_radius + 0.02, 2 * spec.base_radius + 0.6);
    const double c = rng.uniform(gap / 2 + 0.5, H - gap / 2 - 0.5);
    const double lo_top = c - gap / 2, hi_bot = c + gap / 2;
    add_rect(s, indexed("wall", i) + "_lo", ObjType::Wall, xw, lo_top / 2, 0.0, 0.1, lo_top / 2, kWallColor);
    add_rect(s, indexed("wall", i) + "_hi", ObjType::Wall, xw, (hi_bot + H) / 2, 0.0, 0.1, (H - hi_bot) / 2, kWallColor);
  }
  if (geom::contains_point(shape_of(s, "target_region"), {rx, ry})) return std::nullopt;
  return s;
}

std::optional<SceneState> gen_obstruction(const VariantSpec& v, const RobotSpec& spec, Rng& rng) {
  const double W = v.world.width;
  SceneState s;
  add_robot(s, spec, rng.uniform(0.5, W - 0.5), rng.uniform(2.6, 8.5), rng.uniform(-kPi, kPi));
  add_rect(s, "table", ObjType::Surface, W / 2, kFloorTop / 2, 0.0, W / 2, kFloorTop / 2, kSurfaceColor);

  const double bw = rng.uniform(0.2, 0.35), bh = rng.uniform(0.2, 0.35);
  const double sw = bw + rng.uniform(0.1, 0.25);
  const double sx = rng.uniform(sw + 0.5, W - sw - 0.5);
  add_rect(s, "target_surface", ObjType::Surface, sx, kFloorTop - 0.05, 0.0, sw, 0.05, kTargetSurfaceColor);

  // Target block on the table, clear of the target surface.
  double bx = 0.0;
  bool placed = false;
  for (int t = 0; t < 50 && !placed; ++t) {
    bx = rng.uniform(bw + 0.1, W - bw - 0.1);
    placed = bx + bw < sx - sw - 0.05 || bx - bw > sx + sw + 0.05;
  }
  if (!placed) return std::nullopt;
  add_rect(s, "target_block", ObjType::Block, bx, kFloorTop + bh, 0.0, bw, bh, kTargetColor);

  for (int i = 0; i < v.count; ++i) {
    const double ow = rng.uniform(0.15, 0.3), oh = rng.uniform(0.15, 0.45);
    const double ox = rng.uniform() < 0.75 ? rng.uniform(sx - sw, sx + sw) : rng.uniform(ow + 0.1, W - ow - 0.1);
    add_rect(s, indexed("obstruction", i), ObjType::Block, ox, kFloorTop + oh, 0.0, ow, oh, kObstructionColor);
    const auto& o = s.at(indexed("obstruction", i));
    if (x_lo(o) < 0.05 || x_hi(o) > W - 0.05) return std::nullopt;
    // Leave room between blocks so neighbours stay individually graspable.
    for (const auto& other : s.objects()) {
      if (other.type != ObjType::Block || other.name == o.name) continue;
      if (x_lo(o) < x_hi(other) + 0.03 && x_lo(other) < x_hi(o) + 0.03) return std::nullopt;
    }
  }
  return s;
}

std::optional<SceneState> gen_retrieval(const VariantSpec& v, const RobotSpec& spec, Rng& rng) {
  const double W = v.world.width, H = v.world.height;
  SceneState s;
  add_robot(s, spec, rng.uniform(0.5, W - 0.5), rng.uniform(0.5, H - 0.5), rng.uniform(-kPi, kPi));
  add_rect(s, "floor", ObjType::Region, W / 2, H / 2, 0.0, W / 2, H / 2, kFloorColor);
  const double rh = rng.uniform(0.55, 0.75);
  add_rect(s, "target_region", ObjType::Region, rng.uniform(rh + 0.2, W - rh - 0.2), rng.uniform(rh + 0.2, H - rh - 0.2),
           0.0, rh, rh, kRegionColor);

  const double bw = rng.uniform(0.2, 0.3), bh = rng.uniform(0.2, 0.3);
  const geom::Pose2 bp{rng.uniform(2.0, W - 2.0), rng.uniform(2.0, H - 2.0), rng.uniform(-kPi, kPi)};
  add_rect(s, "target_block", ObjType::Block, bp.x, bp.y, bp.theta, bw, bh, kTargetColor);
  if (geom::distance(shape_of(s, "target_block"), shape_of(s, "target_region")) < 0.8) return std::nullopt;

  // Sides in the block frame: +x, -x, +y, -y. The y-side pieces are long and
  // cover the corners; the x-side pieces fit between them.
  std::array<int, 4> sides{0, 1, 2, 3};
  for (int i = 3; i > 0; --i) std::swap(sides[i], sides[rng.uniform_int(0, i)]);
  constexpr double t = 0.12;
  const int surround = std::min(v.count, 4);
  for (int i = 0; i < v.count; ++i) {
    const std::string name = indexed("obstruction", i);
    if (i < surround) {
      const double gap = rng.uniform(0.02, 0.08);
      geom::Pose2 local;
      double hw, hh;
      switch (sides[i]) {
        case 0: local = {bw + gap + t, 0, 0}; hw = t; hh = bh + gap - 0.005; break;
        case 1: local = {-(bw + gap + t), 0, 0}; hw = t; hh = bh + gap - 0.005; break;
        case 2: local = {0, bh + gap + t, 0}; hw = bw + 0.3; hh = t; break;
        default: local = {0, -(bh + gap + t), 0}; hw = bw + 0.3; hh = t; break;
      }
      const geom::Pose2 p = geom::transform(bp, local);
      add_rect(s, name, ObjType::Block, p.x, p.y, p.theta, hw, hh, kObstructionColor);
    } else {
      add_rect(s, name, ObjType::Block, rng.uniform(0.6, W - 0.6), rng.uniform(0.6, H - 0.6), rng.uniform(-kPi, kPi),
               rng.uniform(0.15, 0.3), rng.uniform(0.1, 0.2), kObstructionColor);
      const auto sh = shape_of(s, name);
      for (const auto& o : s.objects()) {
        if (o.name == name || (o.type != ObjType::Block && o.name != "target_region")) continue;
        if (geom::distance(sh, object_shape(o)) < 0.4) return std::nullopt;
      }
    }
    if (geom::distance(shape_of(s, name), shape_of(s, "target_region")) < 0.2) return std::nullopt;
  }
  return s;
}

struct ShelfGeom {
  double cx, width;
  double left() const { return cx - width / 2; }
  double right() const { return cx + width / 2; }
};
constexpr double kShelfBack = 9.7;
constexpr double kShelfDepth = 0.8;
constexpr double kStorageBlockHalf = 0.2;

std::optional<SceneState> gen_storage(const VariantSpec& v, const RobotSpec& spec, Rng& rng) {
  const double W = v.world.width, H = v.world.height;
  const int K = v.count;
  SceneState s;
  add_robot(s, spec, rng.uniform(0.5, W - 0.5), rng.uniform(0.5, 7.0), rng.uniform(-kPi, kPi));
  add_rect(s, "floor", ObjType::Region, W / 2, H / 2, 0.0, W / 2, H / 2, kFloorColor);

  const ShelfGeom shelf{0.0, 0.5 * K + 0.4};
  const double cx = rng.uniform(shelf.width / 2 + 0.3, W - shelf.width / 2 - 0.3);
  const ShelfGeom sg{cx, shelf.width};
  const double cy = kShelfBack - kShelfDepth / 2;
  add_rect(s, "shelf", ObjType::Region, cx, cy, 0.0, sg.width / 2, kShelfDepth / 2, kRegionColor);
  add_rect(s, "shelf_back", ObjType::Wall, cx, kShelfBack + 0.1, 0.0, sg.width / 2 + 0.2, 0.1, kWallColor);
  add_rect(s, "shelf_left", ObjType::Wall, sg.left() - 0.1, cy, 0.0, 0.1, kShelfDepth / 2, kWallColor);
  add_rect(s, "shelf_right", ObjType::Wall, sg.right() + 0.1, cy, 0.0, 0.1, kShelfDepth / 2, kWallColor);

  // Some blocks start in shelf slots; the rest are scattered below.
  const int inside = K / 2;
  std::vector<int> slots(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) slots[static_cast<std::size_t>(i)] = i;
  for (int i = K - 1; i > 0; --i) std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(rng.uniform_int(0, i))]);
  const double h = kStorageBlockHalf;
  for (int i = 0; i < K; ++i) {
    const std::string name = indexed("block", i);
    if (i < inside) {
      const double x = sg.left() + 0.2 + 0.25 + 0.5 * slots[static_cast<std::size_t>(i)] + rng.uniform(-0.03, 0.03);
      add_rect(s, name, ObjType::Block, x, kShelfBack - 0.01 - h, 0.0, h, h, kBlockColor);
    } else {
      add_rect(s, name, ObjType::Block, rng.uniform(0.6, W - 0.6), rng.uniform(0.6, 7.5), rng.uniform(-kPi, kPi), h, h,
               kBlockColor);
      const auto sh = shape_of(s, name);
      for (const auto& o : s.objects()) {
        if (o.name == name || o.type != ObjType::Block) continue;
        if (geom::distance(sh, object_shape(o)) < 0.35) return std::nullopt;
      }
    }
  }
  return s;
}

constexpr double kButtonRadius = 0.2;

std::optional<SceneState> gen_pushpull(const VariantSpec& v, const RobotSpec& spec, Rng& rng) {
  const double W = v.world.width, H = v.world.height;
  SceneState s;
  add_robot(s, spec, rng.uniform(0.5, W - 0.5), rng.uniform(0.5, 5.4), rng.uniform(-kPi, kPi));
  add_rect(s, "table", ObjType::Table, W / 2, (kTableBottom + H) / 2, 0.0, W / 2, (H - kTableBottom) / 2, kTableColor);
  const std::array<double, 10> hook{rng.uniform(1.0, W - 1.0), rng.uniform(1.0, 4.5), rng.uniform(-kPi, kPi), 3.0, 0.6,
                                    0.1, 0.0, kHookColor.r, kHookColor.g, kHookColor.b};
  s.add("hook", ObjType::Hook, hook);
  const double mx = rng.uniform(1.5, W - 1.5), my = rng.uniform(7.6, 8.1);
  add_button(s, "movable_button", mx, my, kButtonRadius, kButtonColor, true);
  add_button(s, "target_button", mx + rng.uniform(-0.25, 0.25), rng.uniform(6.3, 7.0), kButtonRadius, kTargetButtonColor,
             false);
  return s;
}

std::optional<SceneState> gen_stickbutton(const VariantSpec& v, const RobotSpec& spec, Rng& rng) {
  const double W = v.world.width, H = v.world.height;
  const int K = v.count;
  SceneState s;
  add_robot(s, spec, rng.uniform(0.5, W - 0.5), rng.uniform(0.5, 5.4), rng.uniform(-kPi, kPi));
  add_rect(s, "table", ObjType::Table, W / 2, (kTableBottom + H) / 2, 0.0, W / 2, (H - kTableBottom) / 2, kTableColor);
  const double hx = rng.uniform(2.5, W - 2.5), hy = rng.uniform(1.5, 3.5);
  add_rect(s, "holder", ObjType::Holder, hx, hy, 0.0, 1.0, 0.25, kHolderColor);
  add_rect(s, "stick", ObjType::Stick, hx + rng.uniform(-0.2, 0.2), hy, rng.uniform(-kPi / 4, kPi / 4), 1.2, 0.05,
           kStickColor);

  const int unreachable = (K + 1) / 2;
  std::vector<bool> far(static_cast<std::size_t>(K));
  for (int i = 0; i < unreachable; ++i) far[static_cast<std::size_t>(i)] = true;
  for (int i = K - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
    const bool tmp = far[static_cast<std::size_t>(i)];
    far[static_cast<std::size_t>(i)] = far[j];
    far[j] = tmp;
  }
  std::vector<geom::Vec2> centres;
  for (int i = 0; i < K; ++i) {
    const double x = rng.uniform(0.6, W - 0.6);
    const double y = far[static_cast<std::size_t>(i)] ? rng.uniform(7.15, 7.9) : rng.uniform(6.25, 6.5);
    for (const auto& c : centres) {
      if ((c - geom::Vec2{x, y}).norm() < 0.6) return std::nullopt;
    }
    centres.push_back({x, y});
    add_button(s, indexed("button", i), x, y, kButtonRadius, kButtonColor, false);
  }
  return s;
}

// ---------------------------------------------------------------- goals

bool robot_in_region(const SceneState& s, std::string_view region) {
  const auto& r = s.robot();
  return geom::contains_point(shape_of(s, region), {r.f[rf::kX], r.f[rf::kY]});
}

bool rests_within(const SceneState& s, std::string_view block, std::string_view surface) {
  const auto& b = s.at(block);
  const auto& sf = s.at(surface);
  const double gap = y_lo(b) - y_hi(sf);
  return gap >= -1e-6 && gap <= kOnGapTol && x_lo(b) >= x_lo(sf) - 1e-9 && x_hi(b) <= x_hi(sf) + 1e-9;
}

bool buttons_touch(const SceneState& s, std::string_view a, std::string_view b) {
  const auto& x = s.at(a);
  const auto& y = s.at(b);
  const double d = std::hypot(x.f[btn::kX] - y.f[btn::kX], x.f[btn::kY] - y.f[btn::kY]);
  return d <= x.f[btn::kRadius] + y.f[btn::kRadius] + kTouchSlack;
}

// ---------------------------------------------------------------- contact rules

SceneState press_touched(const SceneState& after) {
  SceneState out = after;
  const auto& robot = after.robot();
  const RobotParts rp = robot_parts(robot);
  std::vector<PlacedShape> toucher{PlacedShape{std::get<geom::Circle>(rp.base.shape), rp.base.pose},
                                   PlacedShape{std::get<geom::Rect>(rp.arm.shape), rp.arm.pose},
                                   PlacedShape{std::get<geom::Rect>(rp.vacuum.shape), rp.vacuum.pose}};
  for (const auto& h : after.held()) toucher.push_back(object_shape(after.at(h)));
  for (auto& o : out.objects()) {
    if (o.type != ObjType::Button || o.f[btn::kPressed] > 0.5) continue;
    const auto sh = object_shape(o);
    for (const auto& t : toucher) {
      if (geom::distance(sh, t) <= kPressTol) {
        o.f[btn::kPressed] = 1.0;
        break;
      }
    }
  }
  return out;
}

std::optional<SceneState> push_with_hook(const SceneState& after, const WorldBounds& world) {
  std::vector<std::string> hooks;
  for (const auto& h : after.held()) {
    if (after.at(h).type == ObjType::Hook) hooks.push_back(h);
  }
  if (hooks.empty()) return after;
  SceneState out = after;
  for (auto& o : out.objects()) {
    if (o.type != ObjType::Button || o.f[btn::kMovable] < 0.5) continue;
    for (const auto& h : hooks) {
      const auto hook_shape = object_shape(out.at(h));
      if (!geom::collides(hook_shape, object_shape(o))) continue;
      const auto mtv = geom::min_translation(hook_shape, object_shape(o));
      if (!mtv) continue;
      o.f[btn::kX] += mtv->x;
      o.f[btn::kY] += mtv->y;
      const auto moved = object_shape(o);
      if (!inside_world(moved, world)) return std::nullopt;
      for (const auto& st : out.objects()) {
        if (st.collision() == CollisionClass::Static && geom::collides(moved, object_shape(st))) return std::nullopt;
      }
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- public

const std::vector<EnvId>& all_envs() {
  static const std::vector<EnvId> envs{EnvId::Motion2D,           EnvId::Obstruction2D,  EnvId::ClutteredRetrieval2D,
                                       EnvId::ClutteredStorage2D, EnvId::PushPullHook2D, EnvId::StickButton2D};
  return envs;
}

std::string_view env_name(EnvId id) {
  switch (id) {
    case EnvId::Motion2D: return "Motion2D";
    case EnvId::Obstruction2D: return "Obstruction2D";
    case EnvId::ClutteredRetrieval2D: return "ClutteredRetrieval2D";
    case EnvId::ClutteredStorage2D: return "ClutteredStorage2D";
    case EnvId::PushPullHook2D: return "PushPullHook2D";
    case EnvId::StickButton2D: return "StickButton2D";
  }
  return "?";
}

std::optional<EnvId> env_from_name(std::string_view name) {
  for (EnvId id : all_envs()) {
    if (env_name(id) == name) return id;
  }
  return std::nullopt;
}

char variant_letter(EnvId id) {
  switch (id) {
    case EnvId::Motion2D: return 'p';
    case EnvId::Obstruction2D:
    case EnvId::ClutteredRetrieval2D: return 'o';
    default: return 'b';
  }
}

std::string VariantSpec::str() const { return std::string(env_name(env)) + "-" + letter() + std::to_string(count); }

VariantSpec parse_variant(std::string_view text) {
  auto valid_letters = [] {
    std::string out;
    for (EnvId id : all_envs()) {
      out += "\n  " + std::string(env_name(id)) + ": " + variant_letter(id);
      if (id == EnvId::PushPullHook2D) out += " (count 1 only)";
    }
    return out;
  };
  const auto dash = text.rfind('-');
  if (dash == std::string_view::npos) {
    throw BadVariant("variant '" + std::string(text) + "' is not of the form <EnvName>-<letter><count>; valid letters:" +
                     valid_letters());
  }
  const auto env = env_from_name(text.substr(0, dash));
  if (!env) throw BadVariant("unknown environment in '" + std::string(text) + "'; valid letters:" + valid_letters());
  const std::string_view rest = text.substr(dash + 1);
  if (rest.size() < 2 || rest[0] != variant_letter(*env)) {
    throw BadVariant("bad variant code in '" + std::string(text) + "'; " + std::string(env_name(*env)) + " uses '" +
                     variant_letter(*env) + "'; valid letters:" + valid_letters());
  }
  int count = 0;
  for (char c : rest.substr(1)) {
    if (c < '0' || c > '9') throw BadVariant("bad count in '" + std::string(text) + "'");
    count = count * 10 + (c - '0');
    if (count > 1000) throw BadVariant("count too large in '" + std::string(text) + "'");
  }
  if (*env == EnvId::PushPullHook2D && count != 1) {
    throw BadVariant("PushPullHook2D has a single variant, b1");
  }
  return {*env, count, {}};
}

SceneState generate(const VariantSpec& v, std::uint64_t seed, const RobotSpec& spec) {
  spec.validate();
  Rng rng(fnv64({seed, static_cast<std::uint64_t>(v.env), static_cast<std::uint64_t>(v.count)}));
  for (int attempt = 0; attempt < kGenerationAttempts; ++attempt) {
    std::optional<SceneState> s;
    switch (v.env) {
      case EnvId::Motion2D: s = gen_motion(v, spec, rng); break;
      case EnvId::Obstruction2D: s = gen_obstruction(v, spec, rng); break;
      case EnvId::ClutteredRetrieval2D: s = gen_retrieval(v, spec, rng); break;
      case EnvId::ClutteredStorage2D: s = gen_storage(v, spec, rng); break;
      case EnvId::PushPullHook2D: s = gen_pushpull(v, spec, rng); break;
      case EnvId::StickButton2D: s = gen_stickbutton(v, spec, rng); break;
    }
    if (!s || !initial_state_valid(*s, v.world)) continue;
    if (make_goal(v).predicate(*s) && v.count > 0) continue;
    if (!certify_feasible(*s, v)) continue;
    return std::move(*s);
  }
  throw GenerationFailed("no valid " + v.str() + " state after " + std::to_string(kGenerationAttempts) + " attempts");
}

bool certify_feasible(const SceneState& s, const VariantSpec& v) {
  if (!s.find("robot") || !initial_state_valid(s, v.world)) return false;
  const auto& robot = s.robot();
  const double r = robot.f[rf::kBaseRadius];
  const double reach = robot.f[rf::kArmMax] + 2 * robot.f[rf::kVacHalfH];
  switch (v.env) {
    case EnvId::Motion2D: {
      int passages = 0;
      for (int i = 0;; ++i) {
        const auto* lo = s.find(indexed("wall", i) + "_lo");
        const auto* hi = s.find(indexed("wall", i) + "_hi");
        if (!lo || !hi) break;
        if (y_lo(*hi) - y_hi(*lo) < 2 * r + 0.02) return false;
        ++passages;
      }
      return passages == v.count && s.find("target_region") != nullptr;
    }
    case EnvId::Obstruction2D: {
      const auto* surf = s.find("target_surface");
      const auto* blk = s.find("target_block");
      if (!surf || !blk) return false;
      // Once cleared, the surface must fit the target block with margin.
      return (x_hi(*surf) - x_lo(*surf)) >= (x_hi(*blk) - x_lo(*blk)) + 0.02;
    }
    case EnvId::ClutteredRetrieval2D: {
      const auto* region = s.find("target_region");
      const auto* blk = s.find("target_block");
      if (!region || !blk) return false;
      const double circ = std::hypot(blk->f[bf::kHalfW], blk->f[bf::kHalfH]);
      if (std::min(region->f[bf::kHalfW], region->f[bf::kHalfH]) < circ + 0.02) return false;
      if (v.count == 0) return true;
      // Some obstruction must have a free outward side for the robot.
      for (const auto& o : s.objects()) {
        if (o.name.rfind("obstruction", 0) != 0) continue;
        const geom::Vec2 away = o.pose().position() - blk->pose().position();
        const geom::Vec2 dir = away.normalized();
        const double stand = std::max(o.f[bf::kHalfW], o.f[bf::kHalfH]) + 0.005 + reach;
        SceneState probe = s;
        const geom::Vec2 base = o.pose().position() + stand * dir;
        const RobotConfig cfg{{base.x, base.y, std::atan2(-dir.y, -dir.x)}, robot.f[rf::kArmMax], false};
        probe = with_config(probe, cfg);
        if (configuration_valid(probe, v.world)) return true;
      }
      return false;
    }
    case EnvId::ClutteredStorage2D: {
      const auto* shelf = s.find("shelf");
      if (!shelf) return false;
      const double interior = 4 * shelf->f[bf::kHalfW] * shelf->f[bf::kHalfH];
      double blocks = 0.0, widest = 0.0;
      int n = 0;
      for (const auto& o : s.objects()) {
        if (o.type != ObjType::Block) continue;
        blocks += 4 * o.f[bf::kHalfW] * o.f[bf::kHalfH];
        widest = std::max(widest, 2 * std::max(o.f[bf::kHalfW], o.f[bf::kHalfH]));
        ++n;
      }
      return interior >= 1.5 * blocks && 2 * shelf->f[bf::kHalfW] >= n * widest + 0.02;
    }
    case EnvId::PushPullHook2D: {
      const auto* hook = s.find("hook");
      const auto* mb = s.find("movable_button");
      const auto* tb = s.find("target_button");
      const auto* table = s.find("table");
      if (!hook || !mb || !tb || !table) return false;
      // Highest leg bottom with the shaft held upright near its far end.
      const double shaft = hook->f[hk::kShaft], t = hook->f[hk::kThick];
      const double base_top = y_lo(*table) - r;
      const double leg_bottom = base_top + (shaft - 0.15) - t;
      const bool capture = leg_bottom >= mb->f[btn::kY] + mb->f[btn::kRadius] + 0.02;
      const bool aligned = std::abs(mb->f[btn::kX] - tb->f[btn::kX]) <= mb->f[btn::kRadius] + tb->f[btn::kRadius] - 0.1;
      const bool below = tb->f[btn::kY] < mb->f[btn::kY];
      return capture && aligned && below;
    }
    case EnvId::StickButton2D: {
      const auto* table = s.find("table");
      const auto* stick = s.find("stick");
      if (!table || !stick || !s.find("holder")) return false;
      const double base_top = y_lo(*table) - r;
      const double stick_len = 2 * stick->f[bf::kHalfW];
      int buttons = 0;
      for (const auto& o : s.objects()) {
        if (o.type != ObjType::Button) continue;
        ++buttons;
        const double need = o.f[btn::kY] - o.f[btn::kRadius] - base_top;
        if (need > std::max(reach, stick_len - 0.15)) return false;
      }
      return buttons == v.count;
    }
  }
  return false;
}

GoalSpec make_goal(const VariantSpec& v) {
  switch (v.env) {
    case EnvId::Motion2D:
      return {[](const SceneState& s) { return robot_in_region(s, "target_region"); },
              "The robot base center is inside target_region."};
    case EnvId::Obstruction2D:
      return {[](const SceneState& s) {
                return !s.is_held("target_block") && rests_within(s, "target_block", "target_surface");
              },
              "target_block rests on target_surface, completely within its boundaries, and is released."};
    case EnvId::ClutteredRetrieval2D:
      return {[](const SceneState& s) {
                return !s.is_held("target_block") &&
                       geom::contains(shape_of(s, "target_region"), shape_of(s, "target_block"));
              },
              "target_block is inside target_region and released."};
    case EnvId::ClutteredStorage2D:
      return {[](const SceneState& s) {
                if (!s.held().empty()) return false;
                const auto shelf = shape_of(s, "shelf");
                for (const auto& o : s.objects()) {
                  if (o.type == ObjType::Block && !geom::contains(shelf, object_shape(o))) return false;
                }
                return true;
              },
              "Every block is inside the shelf and nothing is held."};
    case EnvId::PushPullHook2D:
      return {[](const SceneState& s) { return buttons_touch(s, "movable_button", "target_button"); },
              "movable_button touches target_button."};
    case EnvId::StickButton2D:
      return {[](const SceneState& s) {
                for (const auto& o : s.objects()) {
                  if (o.type == ObjType::Button && o.f[btn::kPressed] < 0.5) return false;
                }
                return true;
              },
              "Every button is pressed."};
  }
  return {};
}

std::optional<SceneState> resolve_contact_rules(EnvId env, const SceneState& /*before*/, const SceneState& after,
                                                const WorldBounds& world) {
  switch (env) {
    case EnvId::StickButton2D: return press_touched(after);
    case EnvId::PushPullHook2D: return push_with_hook(after, world);
    default: return after;
  }
}

ContactRule contact_rule(EnvId env, const WorldBounds& world) {
  if (env != EnvId::StickButton2D && env != EnvId::PushPullHook2D) return {};
  return [env, world](const SceneState& before, const SceneState& after) {
    return resolve_contact_rules(env, before, after, world);
  };
}

FlatLayout flat_layout(const VariantSpec& v) {
  FlatLayout l;
  auto add = [&](std::string n, ObjType t) { l.objects.emplace_back(std::move(n), t); };
  switch (v.env) {
    case EnvId::Motion2D:
      add("target_region", ObjType::Region);
      for (int i = 0; i < v.count; ++i) {
        add(indexed("wall", i) + "_lo", ObjType::Wall);
        add(indexed("wall", i) + "_hi", ObjType::Wall);
      }
      break;
    case EnvId::Obstruction2D:
      add("table", ObjType::Surface);
      add("target_surface", ObjType::Surface);
      add("target_block", ObjType::Block);
      for (int i = 0; i < v.count; ++i) add(indexed("obstruction", i), ObjType::Block);
      break;
    case EnvId::ClutteredRetrieval2D:
      add("floor", ObjType::Region);
      add("target_region", ObjType::Region);
      add("target_block", ObjType::Block);
      for (int i = 0; i < v.count; ++i) add(indexed("obstruction", i), ObjType::Block);
      break;
    case EnvId::ClutteredStorage2D:
      add("floor", ObjType::Region);
      add("shelf", ObjType::Region);
      add("shelf_back", ObjType::Wall);
      add("shelf_left", ObjType::Wall);
      add("shelf_right", ObjType::Wall);
      for (int i = 0; i < v.count; ++i) add(indexed("block", i), ObjType::Block);
      break;
    case EnvId::PushPullHook2D:
      add("table", ObjType::Table);
      add("hook", ObjType::Hook);
      add("movable_button", ObjType::Button);
      add("target_button", ObjType::Button);
      break;
    case EnvId::StickButton2D:
      add("table", ObjType::Table);
      add("holder", ObjType::Holder);
      add("stick", ObjType::Stick);
      for (int i = 0; i < v.count; ++i) add(indexed("button", i), ObjType::Button);
      break;
  }
  return l;
}

// ---------------------------------------------------------------- instance

EnvInstance::EnvInstance(VariantSpec v, RobotSpec spec)
    : variant_(v), spec_(spec), goal_(make_goal(v)), rule_(contact_rule(v.env, v.world)) {
  spec_.validate();
}

const SceneState& EnvInstance::reset(std::uint64_t seed) {
  seed_ = seed;
  state_ = generate(variant_, seed, spec_);
  return state_;
}

StepOutcome EnvInstance::step(const ActionDelta& a) {
  StepOutcome out = kinematic_step(state_, a, spec_, variant_.world, rule_, goal_);
  state_ = out.state;
  return out;
}

}  // namespace kinder
