#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moglow/model.hpp"
#include "moglow/motion.hpp"
#include "moglow/sampler.hpp"

namespace moglow::service {

/// A trained model together with the skeleton its poses describe.
struct LoadedModel {
  MoGlowModel model;
  motion::Skeleton skeleton;
};

/// Resolves a checkpoint id; throws moglow::Error when it cannot.
using ModelProvider = std::function<std::shared_ptr<const LoadedModel>(const std::string&)>;

/// Loads `<dir>/<id>` (or `<id>.mgck`) once and shares it afterwards. Ids
/// containing path separators are rejected.
ModelProvider directory_provider(std::filesystem::path dir);

using Clock = std::chrono::steady_clock;

struct SessionInfo {
  std::uint64_t id = 0;
  std::shared_ptr<const LoadedModel> model;
};

/// Transport-independent streaming sampler. Sessions are isolated; each
/// one is driven by exactly one caller at a time, in order.
class ServiceCore {
 public:
  explicit ServiceCore(ModelProvider provider,
                       std::chrono::milliseconds idle_timeout = std::chrono::minutes(5),
                       std::function<Clock::time_point()> now = &Clock::now);

  /// Mean-pose history, zero recurrent state, root at the origin.
  SessionInfo open_session(const std::string& checkpoint, Real temperature, std::uint64_t seed);
  /// Exactly one sample step. Non-finite input throws NumericError and
  /// leaves the session untouched.
  PoseFrame handle_control(std::uint64_t session, const motion::ControlFrame& control);
  /// Applies from the next frame. Negative or non-finite throws ContractError.
  void set_temperature(std::uint64_t session, Real temperature);
  void close_session(std::uint64_t session);

  /// Drops sessions idle for longer than the timeout; returns how many.
  std::size_t reap_idle();
  std::size_t session_count() const;

 private:
  struct Session {
    std::mutex mutex;
    std::shared_ptr<const LoadedModel> model;
    SamplerState state;
    NoiseSource noise;
    Clock::time_point last_activity;
    Session(std::shared_ptr<const LoadedModel> m, SamplerState s, NoiseSpec spec, Clock::time_point t)
        : model(std::move(m)), state(std::move(s)), noise(spec), last_activity(t) {}
  };
  std::shared_ptr<Session> find(std::uint64_t id) const;

  ModelProvider provider_;
  std::chrono::milliseconds idle_timeout_;
  std::function<Clock::time_point()> now_;
  mutable std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// JSON protocol bound to one client connection: at most one open session.
class ProtocolHandler {
 public:
  explicit ProtocolHandler(ServiceCore& core) : core_(core) {}
  ~ProtocolHandler();
  ProtocolHandler(const ProtocolHandler&) = delete;
  ProtocolHandler& operator=(const ProtocolHandler&) = delete;

  /// One client text frame in, zero or more server frames out.
  std::vector<std::string> handle(std::string_view text);
  std::optional<std::uint64_t> session() const noexcept { return session_; }

 private:
  ServiceCore& core_;
  std::optional<std::uint64_t> session_;
};

std::string skeleton_message(const motion::Skeleton& skeleton, Real fps);
std::string pose_message(const PoseFrame& frame);
std::string error_message(const std::string& msg);

}  // namespace moglow::service
