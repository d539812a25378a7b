// Copyright 2026 The stresslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// WebSocket gateway for live sessions. Socket I/O runs on one Asio thread;
// the experiment driver runs on the caller's thread and reaches the game only
// through the LivePlayer queue. Outbound messages are posted to the I/O
// thread as finished JSON snapshots.

#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "stresslab/error.hpp"
#include "stresslab/gateway/protocol.hpp"
#include "stresslab/session.hpp"

namespace stresslab::gateway {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct Endpoint {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
};

inline Endpoint parse_endpoint(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) fail(Errc::BadParameter, "bind address must be host:port, got '" + bind + "'");
  Endpoint ep;
  ep.host = bind.substr(0, colon);
  const std::string port = bind.substr(colon + 1);
  int p = -1;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), p);
  if (port.empty() || ec != std::errc{} || ptr != port.data() + port.size() || p < 0 || p > 65535)
    fail(Errc::BadParameter, "bad port in '" + bind + "'");
  ep.port = static_cast<unsigned short>(p);
  return ep;
}

class Server;

namespace detail {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Server& server) : ws_(std::move(socket)), server_(server) {}

  void start();
  void send(MsgType type, ojson payload) {
    if (closing_) return;
    outbox_.push_back(encode(Message{type, out_seq_.next(), std::move(payload)}));
    if (!writing_) write_next();
  }
  void close_after_flush() {
    closing_ = true;
    if (!writing_) do_close();
  }

  std::optional<Role> role;
  SeqCounter in_seq;

 private:
  void read_next();
  void write_next() {
    if (outbox_.empty()) {
      writing_ = false;
      if (closing_) do_close();
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->outbox_.pop_front();
                      if (ec) {
                        self->writing_ = false;
                        self->outbox_.clear();
                        return;
                      }
                      self->write_next();
                    });
  }
  void do_close() {
    if (closed_) return;
    closed_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  Server& server_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  SeqCounter out_seq_;
  bool writing_ = false;
  bool closing_ = false;
  bool closed_ = false;
};

}  // namespace detail

/// Accepts one defuser and any number of experts, feeds the defuser's
/// actions and everyone's transcripts into a LivePlayer, and mirrors
/// session, state, timer and caption updates to all clients.
class Server {
 public:
  explicit Server(const std::string& bind) : acceptor_(ioc_), work_(net::make_work_guard(ioc_)) {
    const Endpoint ep = parse_endpoint(bind);
    beast::error_code ec;
    const auto addr = net::ip::make_address(ep.host, ec);
    if (ec) fail(Errc::BadParameter, "bad host '" + ep.host + "': " + ec.message());
    const tcp::endpoint endpoint(addr, ep.port);
    acceptor_.open(endpoint.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(endpoint, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) fail(Errc::BindError, "cannot listen on " + bind + ": " + ec.message());
    port_ = acceptor_.local_endpoint().port();
    player_ = std::make_unique<session::LivePlayer>([this] {
      auto* c = clock_.load();
      return c ? c->now() : 0.0;
    });
    player_->set_reject_handler([this](const session::TimedAction& a, const Error& e) {
      post([this, code = std::string(to_string(e.code())),
            msg = "action " + a.action.module_id + ":" + a.action.detail + " rejected: " + e.what()] {
        if (defuser_) defuser_->send(MsgType::error, error_payload(code, msg));
      });
    });
    accept_next();
    io_thread_ = std::thread([this] { ioc_.run(); });
  }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  ~Server() { shutdown("server_stopped"); }

  unsigned short port() const { return port_; }
  session::LivePlayer& player() { return *player_; }

  /// Blocks until a defuser has completed the hello handshake.
  void wait_for_defuser() {
    std::unique_lock lock(mu_);
    ready_cv_.wait(lock, [this] { return defuser_ready_; });
  }

  /// Hooks that mirror the run to the clients; chain them with any others.
  session::ExperimentHooks mirror_hooks(const session::ExperimentPlan& plan, int timer_every_ticks = 10) {
    std::vector<double> planned_end;
    double t = 0.0;
    for (const auto& s : plan.sessions) planned_end.push_back(t += s.duration_s);
    session::ExperimentHooks h;
    h.on_session_start = [this, planned_end](const session::SessionSpec& spec, double start, const game::BombState*) {
      current_end_ = spec.kind == SessionKind::rest ? planned_end[static_cast<std::size_t>(spec.index - 1)]
                                                    : start + spec.duration_s;
      broadcast_cached(MsgType::session, session_payload(spec), true);
      broadcast(MsgType::timer, timer_payload(current_end_ - start));
    };
    h.on_state = [this](const session::SessionSpec&, const game::BombState& bomb) {
      broadcast_cached(MsgType::state, state_payload(bomb), false);
    };
    h.on_session_end = [this](const session::SessionRecord&) { clear_state(); };
    h.on_tick = [this, timer_every_ticks, n = 0](double now) mutable {
      if (++n % timer_every_ticks == 0) broadcast(MsgType::timer, timer_payload(current_end_ - now));
    };
    h.on_caption = [this](const keywords::CaptionEvent& c) { broadcast(MsgType::caption, caption_payload(c)); };
    return h;
  }

  /// Runs the plan live once a defuser is connected. time_scale is
  /// experiment seconds per real second.
  session::SessionLog run(const session::ExperimentPlan& plan, const session::ExperimentOutlets& outlets,
                          const session::ExperimentHooks& hooks, double time_scale = 1.0,
                          std::vector<keywords::TranscriptEvent> replay = {}) {
    wait_for_defuser();
    session::RealClock clock(time_scale);
    clock_.store(&clock);
    auto log = session::run_experiment(plan, *player_, outlets, clock, hooks, std::move(replay));
    clock_.store(nullptr);
    post([this, aborted = log.aborted] {
      for (const auto& c : connections_) {
        if (!c->role) continue;
        c->send(MsgType::bye, bye_payload(aborted ? "defuser_disconnected" : "experiment_complete"));
        c->close_after_flush();
      }
    });
    return log;
  }

  /// Stops accepting, closes every client and joins the I/O thread.
  void shutdown(const std::string& reason = "server_stopped") {
    if (!io_thread_.joinable()) return;
    post([this, reason] {
      beast::error_code ec;
      acceptor_.close(ec);
      for (const auto& c : connections_) {
        if (c->role) c->send(MsgType::bye, bye_payload(reason));
        c->close_after_flush();
      }
    });
    work_.reset();
    io_thread_.join();
  }

 private:
  friend class detail::Connection;

  template <typename F>
  void post(F&& f) {
    net::post(ioc_, std::forward<F>(f));
  }

  void broadcast(MsgType type, ojson payload) {
    post([this, type, payload = std::move(payload)] {
      for (const auto& c : connections_)
        if (c->role) c->send(type, payload);
    });
  }

  // Session and state snapshots are also kept for clients that join late.
  void broadcast_cached(MsgType type, ojson payload, bool is_session) {
    post([this, type, is_session, payload = std::move(payload)] {
      if (is_session) {
        last_session_ = payload;
        last_state_.reset();
      } else {
        last_state_ = payload;
      }
      for (const auto& c : connections_)
        if (c->role) c->send(type, payload);
    });
  }

  void clear_state() {
    post([this] { last_state_.reset(); });
  }

  void accept_next() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<detail::Connection>(std::move(socket), *this);
      connections_.insert(conn);
      conn->start();
      accept_next();
    });
  }

  void protocol_error(const std::shared_ptr<detail::Connection>& c, const std::string& code, const std::string& msg) {
    c->send(MsgType::error, error_payload(code, msg));
    c->close_after_flush();
    dropped(c);
  }

  void on_frame(const std::shared_ptr<detail::Connection>& c, const std::string& text) {
    Message m;
    try {
      m = decode(text);
      c->in_seq.expect(m.seq);
      if (!client_may_send(m.type))
        fail(Errc::ProtocolError, "clients may not send '" + std::string(to_string(m.type)) + "'");
      if (!c->role && m.type != MsgType::hello) fail(Errc::ProtocolError, "hello must come first");
      if (c->role && m.type == MsgType::hello) fail(Errc::ProtocolError, "duplicate hello");
    } catch (const Error& e) {
      protocol_error(c, std::string(to_string(e.code())), e.what());
      return;
    }
    switch (m.type) {
      case MsgType::hello: {
        const Role role = *parse_role(m.payload["role"].get<std::string>());
        if (role == Role::defuser && (defuser_ || defuser_seen_)) {
          c->send(MsgType::error, error_payload("Refused", "a defuser is already connected"));
          c->close_after_flush();
          dropped(c);
          return;
        }
        c->role = role;
        c->send(MsgType::hello, hello_payload(role));
        if (last_session_) c->send(MsgType::session, *last_session_);
        if (last_state_) c->send(MsgType::state, *last_state_);
        if (role == Role::defuser) {
          defuser_ = c;
          defuser_seen_ = true;
          std::lock_guard lock(mu_);
          defuser_ready_ = true;
          ready_cv_.notify_all();
        }
        return;
      }
      case MsgType::action:
        if (c->role != Role::defuser) {
          c->send(MsgType::error, error_payload("InvalidAction", "only the defuser may act on the bomb"));
          return;
        }
        player_->push_action({m.payload["module_id"].get<std::string>(), m.payload["detail"].get<std::string>()});
        return;
      case MsgType::transcript:
        player_->push_transcript(m.payload["text"].get<std::string>());
        return;
      case MsgType::bye:
        c->close_after_flush();
        dropped(c);
        return;
      default:
        return;
    }
  }

  void dropped(const std::shared_ptr<detail::Connection>& c) {
    if (c == defuser_) {
      defuser_.reset();
      player_->disconnect();
    }
    connections_.erase(c);
  }

  net::io_context ioc_;
  tcp::acceptor acceptor_;
  net::executor_work_guard<net::io_context::executor_type> work_;
  std::thread io_thread_;
  unsigned short port_ = 0;

  std::unique_ptr<session::LivePlayer> player_;
  std::atomic<session::RealClock*> clock_{nullptr};

  // I/O thread only.
  std::set<std::shared_ptr<detail::Connection>> connections_;
  std::shared_ptr<detail::Connection> defuser_;
  bool defuser_seen_ = false;
  std::optional<ojson> last_session_;
  std::optional<ojson> last_state_;

  // Driver thread only.
  double current_end_ = 0.0;

  std::mutex mu_;
  std::condition_variable ready_cv_;
  bool defuser_ready_ = false;
};

namespace detail {

inline void Connection::start() {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
    if (ec) {
      self->server_.dropped(self);
      return;
    }
    self->read_next();
  });
}

inline void Connection::read_next() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      self->server_.dropped(self);
      return;
    }
    std::string text = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    self->server_.on_frame(self, text);
    if (!self->closing_) self->read_next();
  });
}

}  // namespace detail

}  // namespace stresslab::gateway
