#include "moglow/session.hpp"

#include <cmath>

#include "json.hpp"

#include "moglow/checkpoint.hpp"
#include "moglow/error.hpp"

namespace moglow::service {

using nlohmann::json;

ModelProvider directory_provider(std::filesystem::path dir) {
  struct Cache {
    std::mutex mutex;
    std::map<std::string, std::shared_ptr<const LoadedModel>> models;
  };
  auto cache = std::make_shared<Cache>();
  return [dir = std::move(dir), cache](const std::string& id) -> std::shared_ptr<const LoadedModel> {
    if (id.empty() || id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
        id == "." || id == "..") {
      throw LoadError("invalid checkpoint id '" + id + "'");
    }
    std::lock_guard lock(cache->mutex);
    if (auto it = cache->models.find(id); it != cache->models.end()) return it->second;
    std::filesystem::path path = dir / id;
    if (!std::filesystem::exists(path)) path = dir / (id + ".mgck");
    if (!std::filesystem::exists(path)) throw LoadError("unknown checkpoint '" + id + "'");
    train::Checkpoint ckpt = train::load_checkpoint(path);
    if (!ckpt.skeleton) throw LoadError("checkpoint '" + id + "' carries no skeleton");
    auto loaded = std::make_shared<const LoadedModel>(LoadedModel{std::move(ckpt.model), *ckpt.skeleton});
    cache->models.emplace(id, loaded);
    return loaded;
  };
}

ServiceCore::ServiceCore(ModelProvider provider, std::chrono::milliseconds idle_timeout,
                         std::function<Clock::time_point()> now)
    : provider_(std::move(provider)), idle_timeout_(idle_timeout), now_(std::move(now)) {}

namespace {

void check_temperature(Real t) {
  if (!std::isfinite(t) || t < 0.0) throw ContractError("temperature must be finite and >= 0");
}

}  // namespace

SessionInfo ServiceCore::open_session(const std::string& checkpoint, Real temperature,
                                      std::uint64_t seed) {
  check_temperature(temperature);
  std::shared_ptr<const LoadedModel> model = provider_(checkpoint);
  auto session = std::make_shared<Session>(model, make_sampler_state(model->model),
                                           NoiseSpec{temperature, seed}, now_());
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  sessions_.emplace(id, std::move(session));
  return {id, model};
}

std::shared_ptr<ServiceCore::Session> ServiceCore::find(std::uint64_t id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ContractError("no open session " + std::to_string(id));
  return it->second;
}

PoseFrame ServiceCore::handle_control(std::uint64_t id, const motion::ControlFrame& control) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (!std::isfinite(control.forward) || !std::isfinite(control.lateral) ||
      !std::isfinite(control.rotation)) {
    throw NumericError("control frame contains non-finite values");
  }
  const std::vector<Real> z = s->noise.draw(s->model->model.config.pose_dims);
  PoseFrame out = sample_step(s->model->model, s->state, control, z);
  s->last_activity = now_();
  return out;
}

void ServiceCore::set_temperature(std::uint64_t id, Real temperature) {
  check_temperature(temperature);
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  s->noise.set_temperature(temperature);
  s->last_activity = now_();
}

void ServiceCore::close_session(std::uint64_t id) {
  std::lock_guard lock(mutex_);
  sessions_.erase(id);
}

std::size_t ServiceCore::reap_idle() {
  const Clock::time_point now = now_();
  std::lock_guard lock(mutex_);
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock session_lock(it->second->mutex, std::try_to_lock);
    if (session_lock.owns_lock() && now - it->second->last_activity > idle_timeout_) {
      session_lock.unlock();
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::size_t ServiceCore::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::string skeleton_message(const motion::Skeleton& skeleton, Real fps) {
  json offsets = json::array();
  for (const motion::Vec3& o : skeleton.offsets) offsets.push_back({o[0], o[1], o[2]});
  json msg = {{"type", "skeleton"},
              {"joints", skeleton.names},
              {"parents", skeleton.parents},
              {"offsets", offsets},
              {"fps", fps},
              {"units", "cm"}};
  return msg.dump();
}

std::string pose_message(const PoseFrame& frame) {
  json joints = json::array();
  for (std::size_t j = 0; j + 2 < frame.pose.size(); j += 3) {
    joints.push_back({frame.pose[j], frame.pose[j + 1], frame.pose[j + 2]});
  }
  json msg = {{"type", "pose"},
              {"frame", frame.frame},
              {"root", {{"x", frame.root.x}, {"z", frame.root.z}, {"theta", frame.root.heading}}},
              {"joints", joints}};
  return msg.dump();
}

std::string error_message(const std::string& msg) {
  return json{{"type", "error"}, {"msg", msg}}.dump();
}

namespace {

Real number_field(const json& msg, const char* key) {
  auto it = msg.find(key);
  if (it == msg.end() || !it->is_number()) {
    throw ContractError(std::string("field '") + key + "' must be a number");
  }
  return it->get<Real>();
}

json ack(const char* of) { return json{{"type", "ack"}, {"of", of}}; }

}  // namespace

ProtocolHandler::~ProtocolHandler() {
  if (session_) core_.close_session(*session_);
}

std::vector<std::string> ProtocolHandler::handle(std::string_view text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::exception&) {
    return {error_message("malformed JSON")};
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return {error_message("message needs a string 'type'")};
  }
  const std::string type = msg["type"].get<std::string>();
  try {
    if (type == "open") {
      if (session_) return {error_message("session already open on this connection")};
      auto ck = msg.find("checkpoint");
      if (ck == msg.end() || !ck->is_string()) return {error_message("field 'checkpoint' must be a string")};
      const Real temperature = msg.contains("temperature") ? number_field(msg, "temperature") : 1.0;
      std::uint64_t seed = 0;
      if (msg.contains("seed")) {
        if (!msg["seed"].is_number_integer() || msg["seed"].get<std::int64_t>() < 0) {
          return {error_message("field 'seed' must be a non-negative integer")};
        }
        seed = msg["seed"].get<std::uint64_t>();
      }
      const SessionInfo info = core_.open_session(ck->get<std::string>(), temperature, seed);
      session_ = info.id;
      return {skeleton_message(info.model->skeleton, info.model->model.config.fps)};
    }
    if (!session_) return {error_message("no open session; send an 'open' message first")};
    if (type == "control") {
      const motion::ControlFrame c{number_field(msg, "fwd"), number_field(msg, "lat"),
                                   number_field(msg, "rot")};
      return {pose_message(core_.handle_control(*session_, c))};
    }
    if (type == "temp") {
      core_.set_temperature(*session_, number_field(msg, "t"));
      return {ack("temp").dump()};
    }
    if (type == "close") {
      core_.close_session(*session_);
      session_.reset();
      return {ack("close").dump()};
    }
    return {error_message("unknown message type '" + type + "'")};
  } catch (const ContractError& e) {
    if (type != "open" && session_ && std::string(e.what()).rfind("no open session", 0) == 0) {
      session_.reset();
      return {error_message("session expired")};
    }
    return {error_message(e.what())};
  } catch (const Error& e) {
    return {error_message(e.what())};
  }
}

}  // namespace moglow::service
