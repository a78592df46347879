#include "kinder/teleop.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <sstream>

#include "json.hpp"

#include "kinder/rng.hpp"

namespace kinder::teleop {

using nlohmann::ordered_json;

ActionDelta to_action(const Input& in) {
  const double vac = in.vacuum ? (*in.vacuum ? 1.0 : -1.0) : 0.0;
  return ActionDelta({in.axes[0], in.axes[1], in.axes[2], static_cast<double>(in.arm), vac});
}

std::vector<ShapeDesc> shape_descriptors(const SceneState& s) {
  std::vector<ShapeDesc> out;
  for (const auto& o : s.objects()) {
    ShapeDesc d;
    d.name = o.name;
    switch (o.type) {
      case ObjType::Robot:
        d.kind = "robot";
        d.dims = {o.f[rf::kBaseRadius], o.f[rf::kExt], o.f[rf::kVacHalfW], o.f[rf::kVacHalfH]};
        d.color = {0.5, 0.5, 0.9};
        break;
      case ObjType::Button:
        d.kind = "circle";
        d.dims = {o.f[btn::kRadius]};
        d.color = {o.f[btn::kR], o.f[btn::kG], o.f[btn::kB]};
        break;
      case ObjType::Hook:
        d.kind = "hook";
        d.dims = {o.f[hk::kShaft], o.f[hk::kLeg], o.f[hk::kThick]};
        d.color = {o.f[hk::kR], o.f[hk::kG], o.f[hk::kB]};
        break;
      default:
        d.kind = "rect";
        d.dims = {o.f[bf::kHalfW], o.f[bf::kHalfH]};
        d.color = {o.f[bf::kR], o.f[bf::kG], o.f[bf::kB]};
        break;
    }
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

ordered_json base(std::string_view type) {
  ordered_json j;
  j["v"] = kWireVersion;
  j["type"] = type;
  return j;
}

}  // namespace

std::string error_message(std::string_view code, std::string_view message) {
  auto j = base("error");
  j["code"] = code;
  j["message"] = message;
  return j.dump();
}

// ---------------------------------------------------------------- session

Session::Session(std::string id, const VariantSpec& v, std::uint64_t seed)
    : id_(std::move(id)), variant_(v), seed_(seed), env_(v) {
  env_.reset(seed_);
  done_ = env_.check_goal();
}

std::optional<std::string> Session::tick() {
  if (done_) return std::nullopt;
  const ActionDelta a = to_action(input_);
  const auto out = env_.step(a);
  actions_.push_back(a);
  ++tick_;
  reward_ = out.reward;
  done_ = out.terminated;
  return frame_message();
}

std::string Session::reset(std::optional<std::uint64_t> seed) {
  if (seed) seed_ = *seed;
  env_.reset(seed_);
  actions_.clear();
  input_ = {};
  reward_ = 0.0;
  done_ = env_.check_goal();
  ++tick_;  // ticks stay gapless across episodes
  return frame_message();
}

std::string Session::created_message() const {
  auto j = base("created");
  j["session_id"] = id_;
  j["variant"] = variant_.str();
  j["seed"] = seed_;
  return j.dump();
}

std::string Session::frame_message() const {
  auto j = base("frame");
  j["tick"] = tick_;
  j["reward"] = reward_;
  j["done"] = done_;
  j["steps"] = steps();
  auto shapes = ordered_json::array();
  for (const auto& d : shape_descriptors(env_.state())) {
    shapes.push_back({{"name", d.name}, {"kind", d.kind}, {"dims", d.dims}, {"color", d.color}});
  }
  j["shapes"] = std::move(shapes);
  // The scene is spliced in verbatim so it matches the canonical serialization.
  std::string out = j.dump();
  out.pop_back();
  return out + ",\"scene\":" + to_json(env_.state()) + "}";
}

demos::DemoRecord Session::demo() const {
  demos::DemoRecord d;
  d.header.env = std::string(env_name(variant_.env));
  d.header.variant = variant_.str();
  d.header.reset_seed = seed_;
  d.header.source = demos::Source::Teleop;
  d.header.created_at = demos::utc_now();
  d.steps = actions_;
  d.terminal_success = done_;
  return d;
}

// ---------------------------------------------------------------- connection

Connection::Connection(ServerConfig cfg, std::function<std::uint64_t()> seed_source)
    : cfg_(std::move(cfg)), seed_source_(std::move(seed_source)) {
  if (!seed_source_) {
    seed_source_ = [] {
      std::random_device rd;
      return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    };
  }
}

std::vector<std::string> Connection::on_message(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      auto r = handle(line);
      out.insert(out.end(), r.begin(), r.end());
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

std::vector<std::string> Connection::on_tick() {
  if (!session_) return {};
  auto f = session_->tick();
  if (!f) return {};
  return {std::move(*f)};
}

namespace {

std::atomic<std::uint64_t> g_session_counter{0};

Input parse_input(const ordered_json& j) {
  Input in;
  const auto& axes = j.at("axes");
  if (!axes.is_array() || axes.size() != 3) throw std::invalid_argument("axes must be 3 numbers");
  for (std::size_t i = 0; i < 3; ++i) in.axes[i] = axes[i].get<double>();
  const int arm = j.value("arm", 0);
  if (arm < -1 || arm > 1) throw std::invalid_argument("arm must be -1, 0 or 1");
  in.arm = arm;
  if (j.contains("vacuum") && !j["vacuum"].is_null()) {
    const auto v = j["vacuum"].get<std::string>();
    if (v != "on" && v != "off") throw std::invalid_argument("vacuum must be \"on\", \"off\" or null");
    in.vacuum = v == "on";
  }
  return in;
}

}  // namespace

std::vector<std::string> Connection::handle(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::exception&) {
    return {error_message("bad_json", "message is not valid JSON")};
  }
  if (!j.is_object()) return {error_message("bad_message", "message must be an object")};
  if (!j.contains("v") || j["v"] != kWireVersion) {
    return {error_message("bad_version", "expected \"v\": " + std::to_string(kWireVersion))};
  }
  const std::string type = j.value("type", "");
  try {
    if (type == "create") {
      if (session_) return {error_message("session_exists", "this connection already drives a session")};
      VariantSpec v;
      try {
        v = parse_variant(j.at("variant").get<std::string>());
      } catch (const std::exception& e) {
        return {error_message("bad_variant", e.what())};
      }
      const std::uint64_t seed =
          j.contains("seed") && !j["seed"].is_null() ? j["seed"].get<std::uint64_t>() : seed_source_();
      std::ostringstream id;
      id << "s" << ++g_session_counter;
      try {
        session_ = std::make_unique<Session>(id.str(), v, seed);
      } catch (const GenerationFailed& e) {
        return {error_message("generation_failed", e.what())};
      }
      return {session_->created_message(), session_->frame_message()};
    }
    if (type != "input" && type != "reset" && type != "save") {
      return {error_message("unknown_type", "unknown message type '" + type + "'")};
    }
    if (!session_) return {error_message("no_session", "send create first")};
    if (type == "input") {
      session_->set_input(parse_input(j));
      return {};
    }
    if (type == "reset") {
      std::optional<std::uint64_t> seed;
      if (j.contains("seed") && !j["seed"].is_null()) seed = j["seed"].get<std::uint64_t>();
      return {session_->reset(seed)};
    }
    // save
    const auto d = session_->demo();
    const auto dir = std::filesystem::path(cfg_.save_dir);
    std::filesystem::create_directories(dir);
    const auto path = dir / (d.header.variant + "-" + std::to_string(d.header.reset_seed) + "-" + session_->id() +
                             "-" + std::to_string(session_->tick_count()) + ".kd-demo.jsonl");
    demos::write_demo(path.string(), d);
    auto r = base("saved");
    r["path"] = path.string();
    return {r.dump()};
  } catch (const std::exception& e) {
    return {error_message("bad_message", e.what())};
  }
}

}  // namespace kinder::teleop
