#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <cmath>
#include <filesystem>
#include <thread>

#include "json.hpp"
#include "moglow/checkpoint.hpp"
#include "moglow/config.hpp"
#include "moglow/error.hpp"
#include "moglow/session.hpp"
#include "moglow/toy_walker.hpp"
#include "moglow/ws_server.hpp"
#include "model_fixtures.hpp"

using namespace moglow;
using namespace moglow::service;
using json = nlohmann::json;

namespace {

std::shared_ptr<const LoadedModel> toy_loaded() {
  static const auto loaded = [] {
    auto m = std::make_shared<LoadedModel>();
    m->model = fixture::perturbed_model(21, 2, 3, 16, 9, 0.2);
    m->model.scaler = motion::Scaler::identity(21, 3);
    m->skeleton = motion::toy_skeleton();
    return std::shared_ptr<const LoadedModel>(m);
  }();
  return loaded;
}

ModelProvider toy_provider() {
  return [](const std::string& id) -> std::shared_ptr<const LoadedModel> {
    if (id != "toy") throw LoadError("unknown checkpoint '" + id + "'");
    return toy_loaded();
  };
}

std::vector<json> parse_all(const std::vector<std::string>& replies) {
  std::vector<json> out;
  for (const auto& r : replies) out.push_back(json::parse(r));
  return out;
}

json one(ProtocolHandler& h, const json& msg) {
  const auto replies = h.handle(msg.dump());
  EXPECT_EQ(replies.size(), 1u);
  return json::parse(replies.at(0));
}

json control(Real fwd, Real lat = 0.0, Real rot = 0.0) {
  return {{"type", "control"}, {"fwd", fwd}, {"lat", lat}, {"rot", rot}};
}

// Minimal synchronous WebSocket client.
class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(ioc_) {
    boost::asio::ip::tcp::resolver resolver(ioc_);
    boost::asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  json request(const json& msg) {
    ws_.text(true);
    ws_.write(boost::asio::buffer(msg.dump()));
    boost::beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(boost::beast::buffers_to_string(buf.data()));
  }
  void close() { ws_.close(boost::beast::websocket::close_code::normal); }

 private:
  boost::asio::io_context ioc_;
  boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_;
};

}  // namespace

TEST(ServiceCore, SameSeedSameStreamGivesIdenticalPoses) {
  ServiceCore core(toy_provider());
  const auto a = core.open_session("toy", 1.0, 42).id;
  const auto b = core.open_session("toy", 1.0, 42).id;
  EXPECT_NE(a, b);
  for (int t = 0; t < 20; ++t) {
    const motion::ControlFrame c{3.0, 0.1 * t, 0.01};
    const PoseFrame pa = core.handle_control(a, c);
    const PoseFrame pb = core.handle_control(b, c);
    EXPECT_TRUE(pa.pose == pb.pose);
    EXPECT_EQ(pa.frame, static_cast<std::size_t>(t));
  }
}

TEST(ServiceCore, InterleavedSessionsMatchSessionsRunAlone) {
  ServiceCore core(toy_provider());
  std::vector<Tensor> alone;
  {
    const auto s = core.open_session("toy", 1.0, 7).id;
    for (int t = 0; t < 15; ++t) alone.push_back(core.handle_control(s, {4.0, 0.0, 0.0}).pose);
    core.close_session(s);
  }
  const auto s1 = core.open_session("toy", 1.0, 7).id;
  const auto s2 = core.open_session("toy", 0.5, 8).id;
  for (int t = 0; t < 15; ++t) {
    core.handle_control(s2, {-2.0, 1.0, 0.3});
    EXPECT_TRUE(core.handle_control(s1, {4.0, 0.0, 0.0}).pose == alone[t]);
  }
}

TEST(ServiceCore, ZeroTemperatureIsDeterministicRegardlessOfSeed) {
  ServiceCore core(toy_provider());
  const auto a = core.open_session("toy", 0.0, 1).id;
  const auto b = core.open_session("toy", 0.0, 2).id;
  for (int t = 0; t < 10; ++t) {
    EXPECT_TRUE(core.handle_control(a, {2.0, 0, 0}).pose == core.handle_control(b, {2.0, 0, 0}).pose);
  }
}

TEST(ServiceCore, TemperatureChangeAppliesFromTheNextFrame) {
  ServiceCore core(toy_provider());
  const motion::ControlFrame c{2.0, 0, 0};
  // Different seeds at T = 0 agree until stochasticity is restored.
  const auto a = core.open_session("toy", 0.0, 1).id;
  const auto b = core.open_session("toy", 0.0, 2).id;
  for (int t = 0; t < 3; ++t) EXPECT_TRUE(core.handle_control(a, c).pose == core.handle_control(b, c).pose);
  core.set_temperature(a, 1.0);
  core.set_temperature(b, 1.0);
  EXPECT_FALSE(core.handle_control(a, c).pose == core.handle_control(b, c).pose);

  // Equal seeds agree until one of them is cooled.
  const auto x = core.open_session("toy", 1.0, 5).id;
  const auto y = core.open_session("toy", 1.0, 5).id;
  for (int t = 0; t < 3; ++t) EXPECT_TRUE(core.handle_control(x, c).pose == core.handle_control(y, c).pose);
  core.set_temperature(x, 0.0);
  EXPECT_FALSE(core.handle_control(x, c).pose == core.handle_control(y, c).pose);
  EXPECT_THROW(core.set_temperature(x, -1.0), ContractError);
}

TEST(ServiceCore, ConstantForwardControlAdvancesFiveCentimetresPerFrame) {
  ServiceCore core(toy_provider());
  const auto s = core.open_session("toy", 1.0, 3).id;
  Real last_z = 0.0;
  for (int t = 0; t < 40; ++t) {
    const PoseFrame f = core.handle_control(s, {100.0 / 20.0, 0.0, 0.0});
    EXPECT_NEAR(f.root.z - last_z, 5.0, 1e-12);
    EXPECT_EQ(f.root.x, 0.0);
    last_z = f.root.z;
  }
}

TEST(ServiceCore, NonFiniteControlLeavesTheSessionUntouched) {
  ServiceCore core(toy_provider());
  const auto a = core.open_session("toy", 1.0, 11).id;
  const auto b = core.open_session("toy", 1.0, 11).id;
  EXPECT_THROW(core.handle_control(a, {std::nan(""), 0, 0}), NumericError);
  EXPECT_THROW(core.handle_control(a, {0, std::numeric_limits<Real>::infinity(), 0}), NumericError);
  const PoseFrame pa = core.handle_control(a, {1, 0, 0});
  const PoseFrame pb = core.handle_control(b, {1, 0, 0});
  EXPECT_EQ(pa.frame, 0u);
  EXPECT_TRUE(pa.pose == pb.pose);
}

TEST(ServiceCore, UnknownCheckpointOpensNothing) {
  ServiceCore core(toy_provider());
  EXPECT_THROW(core.open_session("missing", 1.0, 0), LoadError);
  EXPECT_EQ(core.session_count(), 0u);
}

TEST(ServiceCore, IdleSessionsAreReapedWithAnInjectedClock) {
  Clock::time_point now{};
  ServiceCore core(toy_provider(), std::chrono::seconds(10), [&] { return now; });
  const auto a = core.open_session("toy", 1.0, 0).id;
  const auto b = core.open_session("toy", 1.0, 0).id;
  now += std::chrono::seconds(6);
  core.handle_control(b, {});
  now += std::chrono::seconds(6);
  EXPECT_EQ(core.reap_idle(), 1u);
  EXPECT_EQ(core.session_count(), 1u);
  EXPECT_THROW(core.handle_control(a, {}), ContractError);
  core.handle_control(b, {});
}

TEST(DirectoryProvider, LoadsByIdAndRejectsPaths) {
  const auto dir = std::filesystem::temp_directory_path() / "moglow_test_provider";
  std::filesystem::create_directories(dir);
  train::Checkpoint ck;
  ck.model = toy_loaded()->model;
  ck.profile = named_profile("desk", 21);
  ck.profile.model = ck.model.config;
  ck.skeleton = motion::toy_skeleton();
  train::save_checkpoint(dir / "walker.mgck", ck);
  const ModelProvider p = directory_provider(dir);
  const auto a = p("walker");
  EXPECT_NE(p("walker.mgck"), nullptr);
  EXPECT_EQ(a->skeleton.names, motion::toy_skeleton().names);
  EXPECT_EQ(p("walker").get(), a.get());
  EXPECT_THROW(p("../walker"), LoadError);
  EXPECT_THROW(p("sub/walker"), LoadError);
  EXPECT_THROW(p("nothere"), LoadError);
  std::filesystem::remove_all(dir);
}

TEST(Protocol, OpenSendsSkeletonThenPosesInOrder) {
  ServiceCore core(toy_provider());
  ProtocolHandler h(core);
  const json sk = one(h, {{"type", "open"}, {"checkpoint", "toy"}, {"temperature", 1.0}, {"seed", 3}});
  EXPECT_EQ(sk["type"], "skeleton");
  EXPECT_EQ(sk["joints"].size(), 7u);
  EXPECT_EQ(sk["parents"].size(), 7u);
  EXPECT_EQ(sk["offsets"].size(), 7u);
  EXPECT_EQ(sk["fps"], 20.0);
  for (int t = 0; t < 5; ++t) {
    const json p = one(h, control(5.0));
    EXPECT_EQ(p["type"], "pose");
    EXPECT_EQ(p["frame"], t);
    EXPECT_EQ(p["joints"].size(), 7u);
    EXPECT_EQ(p["joints"][0].size(), 3u);
    EXPECT_NEAR(p["root"]["z"].get<Real>(), 5.0 * (t + 1), 1e-12);
    EXPECT_EQ(p["root"]["theta"], 0.0);
  }
}

TEST(Protocol, ErrorsAreReportedAsErrorFrames) {
  ServiceCore core(toy_provider());
  ProtocolHandler h(core);
  EXPECT_EQ(one(h, control(1.0))["type"], "error");
  EXPECT_EQ(parse_all(h.handle("{not json"))[0]["msg"], "malformed JSON");
  const json missing = one(h, {{"type", "open"}, {"checkpoint", "nope"}});
  EXPECT_EQ(missing["type"], "error");
  EXPECT_FALSE(h.session().has_value());
  one(h, {{"type", "open"}, {"checkpoint", "toy"}});
  EXPECT_EQ(one(h, {{"type", "open"}, {"checkpoint", "toy"}})["type"], "error");
  EXPECT_EQ(one(h, {{"type", "dance"}})["type"], "error");
  EXPECT_EQ(one(h, {{"type", "temp"}, {"t", -1}})["type"], "error");
  EXPECT_EQ(one(h, {{"type", "temp"}, {"t", 0.5}})["type"], "ack");
  EXPECT_EQ(one(h, {{"type", "control"}, {"fwd", "fast"}, {"lat", 0}, {"rot", 0}})["type"], "error");
  // A rejected control frame consumes no frame index.
  EXPECT_EQ(one(h, control(1.0))["frame"], 0);
  EXPECT_EQ(one(h, {{"type", "close"}})["type"], "ack");
  EXPECT_EQ(core.session_count(), 0u);
}

TEST(Protocol, ConnectionTeardownClosesItsSession) {
  ServiceCore core(toy_provider());
  {
    ProtocolHandler h(core);
    one(h, {{"type", "open"}, {"checkpoint", "toy"}});
    EXPECT_EQ(core.session_count(), 1u);
  }
  EXPECT_EQ(core.session_count(), 0u);
}

TEST(Protocol, ReapedSessionReportsExpiry) {
  Clock::time_point now{};
  ServiceCore core(toy_provider(), std::chrono::seconds(1), [&] { return now; });
  ProtocolHandler h(core);
  one(h, {{"type", "open"}, {"checkpoint", "toy"}});
  now += std::chrono::seconds(5);
  core.reap_idle();
  EXPECT_EQ(one(h, control(0.0))["msg"], "session expired");
  EXPECT_EQ(one(h, {{"type", "open"}, {"checkpoint", "toy"}})["type"], "skeleton");
}

TEST(WebSocket, RoundTripOverLoopback) {
  ServiceCore core(toy_provider());
  ServerOptions opt;
  opt.port = 0;
  WsServer server(core, opt);
  server.start();
  Client c(server.port());
  EXPECT_EQ(c.request({{"type", "open"}, {"checkpoint", "toy"}, {"seed", 1}})["type"], "skeleton");
  for (int t = 0; t < 10; ++t) EXPECT_EQ(c.request(control(2.0))["frame"], t);
  EXPECT_EQ(c.request({{"type", "close"}})["type"], "ack");
  c.close();
  server.stop();
}

TEST(WebSocket, ConcurrentClientsAreIsolated) {
  ServiceCore core(toy_provider());
  ServerOptions opt;
  opt.port = 0;
  opt.threads = 2;
  WsServer server(core, opt);
  server.start();
  std::vector<std::vector<json>> streams(3);
  std::vector<std::thread> threads;
  for (int k = 0; k < 3; ++k) {
    threads.emplace_back([&, k] {
      Client c(server.port());
      c.request({{"type", "open"}, {"checkpoint", "toy"}, {"seed", 99}});
      for (int t = 0; t < 20; ++t) streams[k].push_back(c.request(control(3.0, 0.0, 0.05)));
      c.close();
    });
  }
  for (auto& t : threads) t.join();
  server.stop();
  for (int k = 1; k < 3; ++k) EXPECT_EQ(streams[k], streams[0]);
}
