#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kinder/demos.hpp"
#include "kinder/suite2d.hpp"

namespace kinder::teleop {

inline constexpr int kWireVersion = 1;

/// Latest joystick/keyboard state; held until the next input message.
struct Input {
  std::array<double, 3> axes{};   // dx, dy, dtheta in [-1, 1]
  int arm = 0;                    // -1 retract, 0 hold, +1 extend
  std::optional<bool> vacuum;     // on/off; nullopt leaves the latch alone

  friend bool operator==(const Input&, const Input&) = default;
};

ActionDelta to_action(const Input& in);

struct ServerConfig {
  double tick_hz = 20.0;
  /// Sessions with no client message for this long are closed.
  double idle_timeout_s = 60.0;
  std::string save_dir = "demos";
  std::string static_dir;  // empty: no static files
};

/// Shape descriptor for client-side drawing.
struct ShapeDesc {
  std::string name;
  std::string kind;  // robot, circle, rect, hook
  std::vector<double> dims;
  std::array<double, 3> color{};
};

std::vector<ShapeDesc> shape_descriptors(const SceneState& s);

/// One live env driven by one client.
class Session {
 public:
  Session(std::string id, const VariantSpec& v, std::uint64_t seed);

  const std::string& id() const { return id_; }
  const VariantSpec& variant() const { return variant_; }
  std::uint64_t seed() const { return seed_; }
  const EnvInstance& env() const { return env_; }
  std::uint64_t tick_count() const { return tick_; }
  int steps() const { return static_cast<int>(actions_.size()); }
  bool done() const { return done_; }
  const std::vector<ActionDelta>& actions() const { return actions_; }

  void set_input(const Input& in) { input_ = in; }
  const Input& input() const { return input_; }

  /// Applies the held input once and returns the frame, or nullopt while the
  /// episode is over.
  std::optional<std::string> tick();
  /// New episode (same seed unless given); returns the first frame.
  std::string reset(std::optional<std::uint64_t> seed = std::nullopt);

  std::string created_message() const;
  std::string frame_message() const;

  /// The step log as a teleop demo.
  demos::DemoRecord demo() const;

 private:
  std::string id_;
  VariantSpec variant_;
  std::uint64_t seed_;
  EnvInstance env_;
  Input input_{};
  std::uint64_t tick_ = 0;
  double reward_ = 0.0;
  bool done_ = false;
  std::vector<ActionDelta> actions_;
};

std::string error_message(std::string_view code, std::string_view message);

/// Wire protocol of one client connection, independent of the socket.
class Connection {
 public:
  Connection(ServerConfig cfg, std::function<std::uint64_t()> seed_source = {});

  /// Replies to one client message (possibly several newline-separated).
  std::vector<std::string> on_message(std::string_view text);
  /// One tick: zero or one frame.
  std::vector<std::string> on_tick();

  Session* session() { return session_.get(); }
  const Session* session() const { return session_.get(); }

 private:
  std::vector<std::string> handle(std::string_view line);

  ServerConfig cfg_;
  std::function<std::uint64_t()> seed_source_;
  std::unique_ptr<Session> session_;
};

}  // namespace kinder::teleop
