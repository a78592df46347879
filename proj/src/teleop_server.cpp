#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kinder/teleop_server.hpp"

namespace kinder::teleop {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace ws = beast::websocket;
using tcp = asio::ip::tcp;
using SteadyTime = std::chrono::steady_clock;

namespace {

std::string_view mime_type(const std::string& ext) {
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

/// Resolves a request target inside `root`; nullopt for anything escaping it.
std::optional<std::filesystem::path> resolve(const std::string& root, std::string_view target) {
  if (root.empty()) return std::nullopt;
  std::string t(target.substr(0, target.find('?')));
  if (t.empty() || t[0] != '/' || t.find("..") != std::string::npos) return std::nullopt;
  if (t.back() == '/') t += "index.html";
  const auto p = std::filesystem::path(root) / t.substr(1);
  if (!std::filesystem::is_regular_file(p)) return std::nullopt;
  return p;
}

}  // namespace

struct Server::Impl {
  // Declared first so it outlives handlers destroyed with the io_context.
  std::atomic<std::size_t> sessions{0};
  ServerConfig cfg;
  asio::io_context ioc;
  tcp::acceptor acceptor;

  Impl(ServerConfig c, const std::string& host, std::uint16_t port)
      : cfg(std::move(c)), acceptor(ioc, tcp::endpoint(asio::ip::make_address(host), port)) {}

  void accept();
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& sock, Server::Impl& srv)
      : ws_(std::move(sock)), timer_(ws_.get_executor()), srv_(srv), conn_(srv.cfg) {}

  void start(http::request<http::string_body> req) {
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      ++self->srv_.sessions;
      self->counted_ = true;
      self->last_msg_ = SteadyTime::now();
      self->read();
      self->schedule_tick();
    });
  }

  ~WsSession() {
    if (counted_) --srv_.sessions;
  }

 private:
  void read() {
    ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;  // abrupt disconnects end here
        self->timer_.cancel();
        return;
      }
      self->last_msg_ = SteadyTime::now();
      const auto text = beast::buffers_to_string(self->buf_.data());
      self->buf_.consume(self->buf_.size());
      for (auto& m : self->conn_.on_message(text)) self->send(std::move(m));
      self->read();
    });
  }

  void schedule_tick() {
    const auto period = std::chrono::duration<double>(1.0 / srv_.cfg.tick_hz);
    next_tick_ += std::chrono::duration_cast<SteadyTime::duration>(period);
    if (next_tick_ < SteadyTime::now()) next_tick_ = SteadyTime::now();
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      const double idle = std::chrono::duration<double>(SteadyTime::now() - self->last_msg_).count();
      if (idle > self->srv_.cfg.idle_timeout_s) {
        self->send(error_message("idle_timeout", "session closed after inactivity"));
        self->close_after_writes_ = true;
        self->maybe_close();
        return;
      }
      for (auto& m : self->conn_.on_tick()) self->send(std::move(m));
      self->schedule_tick();
    });
  }

  void send(std::string msg) {
    if (closed_) return;
    out_.push_back(std::move(msg) + "\n");
    if (out_.size() == 1) write();
  }

  void write() {
    ws_.async_write(asio::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->timer_.cancel();
        return;
      }
      self->out_.pop_front();
      if (!self->out_.empty()) {
        self->write();
      } else {
        self->maybe_close();
      }
    });
  }

  void maybe_close() {
    if (!close_after_writes_ || !out_.empty() || closed_) return;
    closed_ = true;
    timer_.cancel();
    ws_.async_close(ws::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
  }

  ws::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  Server::Impl& srv_;
  Connection conn_;
  beast::flat_buffer buf_;
  std::deque<std::string> out_;
  SteadyTime::time_point next_tick_ = SteadyTime::now();
  SteadyTime::time_point last_msg_ = SteadyTime::now();
  bool counted_ = false;
  bool closed_ = false;
  bool close_after_writes_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& sock, Server::Impl& srv) : stream_(std::move(sock)), srv_(srv) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buf_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->on_request();
    });
  }

 private:
  void on_request() {
    if (ws::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), srv_)->start(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    const auto path = req_.method() == http::verb::get ? resolve(srv_.cfg.static_dir, std::string_view(req_.target().data(), req_.target().size())) : std::nullopt;
    if (path) {
      std::ifstream in(*path, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      res->result(http::status::ok);
      res->set(http::field::content_type, std::string(mime_type(path->extension().string())));
      res->body() = ss.str();
    } else {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ec;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    });
  }

  beast::tcp_stream stream_;
  Server::Impl& srv_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket sock) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(sock), *this)->start();
    accept();
  });
}

Server::Server(ServerConfig cfg, const std::string& host, std::uint16_t port)
    : impl_(std::make_unique<Impl>(std::move(cfg), host, port)) {
  if (impl_->cfg.tick_hz <= 0) throw KinderError("tick rate must be positive");
}

Server::~Server() = default;

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->accept();
  impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

std::size_t Server::live_sessions() const { return impl_->sessions.load(); }

}  // namespace kinder::teleop
