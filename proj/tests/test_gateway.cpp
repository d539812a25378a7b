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

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <filesystem>
#include <future>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "catch_amalgamated.hpp"

#include "stresslab/game/oracle.hpp"
#include "stresslab/gateway/serve.hpp"

using namespace stresslab;
using namespace stresslab::gateway;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::ParseError;
}

// Test-side WebSocket client: one Asio thread, frames collected in order.
class Client {
 public:
  explicit Client(unsigned short port) {
    tcp::resolver resolver(ioc_);
    beast::get_lowest_layer(ws_).connect(resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
    read();
    thread_ = std::thread([this] { ioc_.run(); });
  }
  ~Client() {
    net::post(ioc_, [this] {
      beast::error_code ec;
      beast::get_lowest_layer(ws_).socket().close(ec);
    });
    thread_.join();
  }

  void send_raw(std::string text) {
    net::post(ioc_, [this, text = std::move(text)] {
      outbox_.push_back(text);
      if (outbox_.size() == 1) write_next();
    });
  }
  void send(MsgType type, ojson payload) { send_raw(encode(Message{type, ++seq_, std::move(payload)})); }
  void hello(Role role) { send(MsgType::hello, hello_payload(role)); }

  /// First received message (in arrival order) satisfying pred.
  template <typename Pred>
  std::optional<Message> wait_for(Pred pred, double seconds = 10.0) {
    std::unique_lock lock(mu_);
    std::optional<Message> hit;
    cv_.wait_for(lock, std::chrono::duration<double>(seconds), [&] {
      for (const auto& m : inbox_)
        if (pred(m)) {
          hit = m;
          return true;
        }
      return false;
    });
    return hit;
  }
  std::optional<Message> wait_type(MsgType t, double seconds = 10.0) {
    return wait_for([t](const Message& m) { return m.type == t; }, seconds);
  }
  bool wait_closed(double seconds = 10.0) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, std::chrono::duration<double>(seconds), [&] { return closed_; });
  }
  std::vector<Message> inbox() {
    std::lock_guard lock(mu_);
    return inbox_;
  }
  std::vector<std::string> bad_frames() {
    std::lock_guard lock(mu_);
    return bad_;
  }

 private:
  void read() {
    ws_.async_read(buf_, [this](beast::error_code ec, std::size_t) {
      std::lock_guard lock(mu_);
      if (ec) {
        closed_ = true;
        cv_.notify_all();
        return;
      }
      const std::string text = beast::buffers_to_string(buf_.data());
      buf_.consume(buf_.size());
      try {
        inbox_.push_back(decode(text));
      } catch (const Error&) {
        bad_.push_back(text);
      }
      cv_.notify_all();
      read();
    });
  }
  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [this](beast::error_code ec, std::size_t) {
      outbox_.pop_front();
      if (!ec && !outbox_.empty()) write_next();
    });
  }

  net::io_context ioc_;
  websocket::stream<beast::tcp_stream> ws_{ioc_};
  beast::flat_buffer buf_;
  std::deque<std::string> outbox_;
  long long seq_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Message> inbox_;
  std::vector<std::string> bad_;
  bool closed_ = false;
};

void check_seq(const std::vector<Message>& msgs) {
  for (std::size_t i = 0; i < msgs.size(); ++i) CHECK(msgs[i].seq == static_cast<long long>(i) + 1);
}

bool is_error(const Message& m, const std::string& code) {
  return m.type == MsgType::error && m.payload["code"] == code;
}

}  // namespace

TEST_CASE("frames round-trip through encode and decode", "[gateway][protocol]") {
  game::BombState bomb(game::generate_bomb(7, game::Difficulty::easy_session));
  const std::vector<Message> msgs = {
      {MsgType::hello, 1, hello_payload(Role::expert)},
      {MsgType::session, 2, session_payload({3, SessionKind::easy, 120.0, 11})},
      {MsgType::state, 3, state_payload(bomb)},
      {MsgType::timer, 4, timer_payload(12.3456)},
      {MsgType::caption, 5, caption_payload({4.5, {"cut", "wire"}})},
      {MsgType::action, 6, action_payload({"w1", "cut:2"})},
      {MsgType::transcript, 7, transcript_payload("press the button")},
      {MsgType::error, 8, error_payload("Refused", "busy")},
      {MsgType::bye, 9, bye_payload("experiment_complete")},
  };
  for (const auto& m : msgs) {
    const auto back = decode(encode(m));
    CHECK(back.type == m.type);
    CHECK(back.seq == m.seq);
    CHECK(back.payload == m.payload);
  }
  CHECK(timer_payload(12.3456)["remaining_ms"] == 12346);
  CHECK(timer_payload(-1.0)["remaining_ms"] == 0);
  CHECK(encode(msgs[0]) == R"({"type":"hello","seq":1,"payload":{"role":"expert"}})");
  const auto st = state_payload(bomb);
  CHECK(st["modules"].size() == bomb.modules.size());
  CHECK(st["terminal"] == "none");
}

TEST_CASE("malformed frames are protocol errors", "[gateway][protocol]") {
  for (const char* bad : {
           "not json",
           "[1,2]",
           R"({"type":"hello","seq":1})",
           R"({"type":"hello","payload":{"role":"defuser"}})",
           R"({"type":"hullo","seq":1,"payload":{}})",
           R"({"type":"hello","seq":"1","payload":{"role":"defuser"}})",
           R"({"type":"hello","seq":1.5,"payload":{"role":"defuser"}})",
           R"({"type":"hello","seq":1,"payload":{"role":"pilot"}})",
           R"({"type":"hello","seq":1,"payload":{"role":"defuser","extra":1}})",
           R"({"type":"hello","seq":1,"payload":{"role":"defuser"},"x":0})",
           R"({"type":"action","seq":1,"payload":{"module_id":"","detail":"cut:1"}})",
           R"({"type":"action","seq":1,"payload":{"module_id":"w1"}})",
           R"({"type":"transcript","seq":1,"payload":{"text":""}})",
           R"({"type":"timer","seq":1,"payload":{"remaining_ms":1.5}})",
           R"({"type":"caption","seq":1,"payload":{"words":[1],"timestamp_s":0}})",
           R"({"type":"session","seq":1,"payload":{"index":1,"kind":"nap","duration_s":60}})",
       }) {
    CAPTURE(bad);
    CHECK(code_of([&] { decode(bad); }) == Errc::ProtocolError);
  }
  CHECK(client_may_send(MsgType::action));
  CHECK_FALSE(client_may_send(MsgType::state));
  CHECK_FALSE(client_may_send(MsgType::timer));

  SeqCounter s;
  CHECK(s.next() == 1);
  CHECK(s.next() == 2);
  SeqCounter in;
  in.expect(1);
  CHECK(code_of([&] { in.expect(3); }) == Errc::ProtocolError);
  CHECK(code_of([&] { in.expect(1); }) == Errc::ProtocolError);
  in.expect(2);
}

TEST_CASE("bind addresses", "[gateway]") {
  const auto ep = parse_endpoint("0.0.0.0:9000");
  CHECK(ep.host == "0.0.0.0");
  CHECK(ep.port == 9000);
  CHECK(code_of([] { parse_endpoint("localhost"); }) == Errc::BadParameter);
  CHECK(code_of([] { parse_endpoint("127.0.0.1:70000"); }) == Errc::BadParameter);
  CHECK(code_of([] { parse_endpoint("127.0.0.1:http"); }) == Errc::BadParameter);
  CHECK(code_of([] { Server s("not-an-ip:0"); }) == Errc::BadParameter);

  Server first("127.0.0.1:0");
  REQUIRE(first.port() != 0);
  CHECK(code_of([&] { Server second("127.0.0.1:" + std::to_string(first.port())); }) == Errc::BindError);
}

TEST_CASE("handshake and connection rules", "[gateway]") {
  Server server("127.0.0.1:0");

  Client defuser(server.port());
  defuser.hello(Role::defuser);
  auto hi = defuser.wait_type(MsgType::hello);
  REQUIRE(hi);
  CHECK(hi->seq == 1);
  CHECK(hi->payload["role"] == "defuser");

  SECTION("second defuser is refused") {
    Client other(server.port());
    other.hello(Role::defuser);
    auto err = other.wait_type(MsgType::error);
    REQUIRE(err);
    CHECK(err->payload["code"] == "Refused");
    CHECK(other.wait_closed());
  }
  SECTION("experts join and may not act") {
    Client expert(server.port());
    expert.hello(Role::expert);
    REQUIRE(expert.wait_type(MsgType::hello));
    expert.send(MsgType::action, action_payload({"w1", "cut:1"}));
    auto err = expert.wait_for([](const Message& m) { return is_error(m, "InvalidAction"); });
    REQUIRE(err);
    // Still connected: a transcript afterwards is accepted silently.
    expert.send(MsgType::transcript, transcript_payload("hello there"));
    CHECK_FALSE(expert.wait_closed(0.3));
  }
  SECTION("hello must come first") {
    Client c(server.port());
    c.send(MsgType::transcript, transcript_payload("hi"));
    auto err = c.wait_type(MsgType::error);
    REQUIRE(err);
    CHECK(err->payload["code"] == "ProtocolError");
    CHECK(c.wait_closed());
  }
  SECTION("sequence numbers must be consecutive") {
    Client c(server.port());
    c.send_raw(R"({"type":"hello","seq":2,"payload":{"role":"expert"}})");
    auto err = c.wait_type(MsgType::error);
    REQUIRE(err);
    CHECK_THAT(err->payload["message"].get<std::string>(), ContainsSubstring("expected seq 1"));
    CHECK(c.wait_closed());
  }
  SECTION("server-only types are rejected") {
    Client c(server.port());
    c.hello(Role::expert);
    REQUIRE(c.wait_type(MsgType::hello));
    c.send(MsgType::timer, timer_payload(1.0));
    REQUIRE(c.wait_for([](const Message& m) { return is_error(m, "ProtocolError"); }));
    CHECK(c.wait_closed());
  }
  SECTION("garbage frame") {
    Client c(server.port());
    c.send_raw("{{{");
    REQUIRE(c.wait_for([](const Message& m) { return is_error(m, "ProtocolError"); }));
    CHECK(c.wait_closed());
  }
  server.shutdown("test_over");
  auto bye = defuser.wait_type(MsgType::bye);
  REQUIRE(bye);
  CHECK(bye->payload["reason"] == "test_over");
  CHECK(defuser.wait_closed());
  check_seq(defuser.inbox());
  CHECK(defuser.bad_frames().empty());
}

TEST_CASE("a live easy session is solved over the socket", "[gateway][live]") {
  // A rest followed by one easy bomb whose solution needs no timed release.
  std::uint64_t bomb_seed = 1;
  std::vector<game::PlayerAction> solution;
  for (;; ++bomb_seed) {
    const auto cfg = game::generate_bomb(bomb_seed, game::Difficulty::easy_session);
    solution.clear();
    bool timed = false, needy = false;
    for (const auto& m : cfg.modules) {
      needy = needy || m.needy();
      for (auto& a : game::solution_oracle(m, {0, cfg.time_limit_s})) {
        timed = timed || a.detail == "hold";
        solution.push_back(a);
      }
    }
    if (!timed && !needy) break;
  }
  session::ExperimentPlan plan{"L", 5, {{1, SessionKind::rest, 60.0, 0}, {2, SessionKind::easy, 120.0, bomb_seed}}};

  const fs::path out = fs::temp_directory_path() / ("stresslab_gw_" + std::to_string(::getpid()));
  fs::remove_all(out);
  experiment::RunConfig cfg;
  cfg.participants = 1;
  cfg.time_scale = 60.0;
  cfg.out_dir = out;
  fs::create_directories(out);
  cfg.transcript = out / "replay.ndjson";
  {
    std::ofstream os(*cfg.transcript);
    os << R"({"timestamp_s": 30.0, "text": "press the button"})" << '\n';
  }

  Server server("127.0.0.1:0");
  auto driver = std::async(std::launch::async, [&] { return serve_participant(server, cfg, &plan); });

  Client defuser(server.port());
  defuser.hello(Role::defuser);
  Client expert(server.port());
  expert.hello(Role::expert);
  auto easy = defuser.wait_for(
      [](const Message& m) { return m.type == MsgType::session && m.payload["kind"] == "easy"; }, 30.0);
  REQUIRE(easy);
  CHECK(easy->payload["index"] == 2);

  defuser.send(MsgType::action, action_payload({"nope", "cut:1"}));
  expert.send(MsgType::transcript, transcript_payload("cut the red wire"));
  for (const auto& a : solution) defuser.send(MsgType::action, action_payload(a));

  REQUIRE(driver.wait_for(std::chrono::seconds(60)) == std::future_status::ready);
  const auto res = driver.get();
  server.shutdown();

  REQUIRE(res.log.sessions.size() == 2);
  CHECK_FALSE(res.log.aborted);
  CHECK(res.log.sessions[1].outcome == SessionOutcome::solved);

  auto err = defuser.wait_for([](const Message& m) { return is_error(m, "UnknownModule"); });
  REQUIRE(err);
  CHECK_THAT(err->payload["message"].get<std::string>(), ContainsSubstring("nope"));
  for (Client* c : {&defuser, &expert}) {
    auto bye = c->wait_type(MsgType::bye);
    REQUIRE(bye);
    CHECK(bye->payload["reason"] == "experiment_complete");
    CHECK(c->wait_closed());
    CHECK(c->wait_type(MsgType::timer));
    for (const auto& words : {ojson::array({"press", "button"}), ojson::array({"cut", "red", "wire"})})
      CHECK(c->wait_for([&](const Message& m) { return m.type == MsgType::caption && m.payload["words"] == words; }));
    auto solved_state = c->wait_for(
        [](const Message& m) { return m.type == MsgType::state && m.payload["terminal"] == "defused"; });
    CHECK(solved_state);
    check_seq(c->inbox());
    CHECK(c->bad_frames().empty());
  }

  // Same artifacts as a simulated run.
  REQUIRE(res.files.recordings.size() == 1);
  const auto rec = load_recording(res.files.recordings[0]);
  CHECK(rec == res.recording);
  std::size_t actions = 0;
  bool defused = false;
  for (const auto& m : rec.markers(experiment::kMarkerStream)) {
    actions += m.label.rfind("action:", 0) == 0;
    defused = defused || m.label == "bomb_defused";
  }
  CHECK(actions == solution.size());
  CHECK(defused);
  const auto said = rec.markers(experiment::kTranscriptStream);
  REQUIRE(said.size() == 2);
  CHECK(said[0].label == "press the button");
  CHECK(said[0].timestamp_s == Catch::Approx(30.0).margin(0.011));
  CHECK(said[1].label == "cut the red wire");
  std::vector<std::string> captions;
  for (const auto& m : rec.markers(experiment::kMarkerStream))
    if (m.label.rfind("caption:", 0) == 0) captions.push_back(m.label);
  CHECK(captions == std::vector<std::string>{"caption:press", "caption:button", "caption:cut", "caption:red",
                                             "caption:wire"});
  const auto segs = analysis::segment_by_markers(rec);
  REQUIRE(segs.size() == 2);
  CHECK(segs[1].outcome == SessionOutcome::solved);
  CHECK(session::load_plans(res.files.plans[0]).front() == plan);
  fs::remove_all(out);
}

TEST_CASE("defuser disconnect aborts the run", "[gateway][live]") {
  session::ExperimentPlan plan{"D", 5, {{1, SessionKind::rest, 60.0, 0}, {2, SessionKind::hard, 20.0, 77}}};
  const fs::path out = fs::temp_directory_path() / ("stresslab_gwd_" + std::to_string(::getpid()));
  fs::remove_all(out);
  experiment::RunConfig cfg;
  cfg.participants = 1;
  cfg.time_scale = 20.0;
  cfg.out_dir = out;

  Server server("127.0.0.1:0");
  auto driver = std::async(std::launch::async, [&] { return serve_participant(server, cfg, &plan); });
  {
    Client defuser(server.port());
    defuser.hello(Role::defuser);
    REQUIRE(defuser.wait_type(MsgType::session));
  }
  REQUIRE(driver.wait_for(std::chrono::seconds(30)) == std::future_status::ready);
  const auto res = driver.get();
  CHECK(res.log.aborted);
  CHECK(fs::exists(res.files.recordings[0]));
  CHECK(res.log.end_s < plan.scheduled_total_s());
  fs::remove_all(out);
}
