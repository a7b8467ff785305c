#include "mesh/play/session.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace mesh::play {

using nlohmann::json;

std::optional<AgentChoice> AgentChoice::parse(std::string_view text) {
  if (text == "mesh") return AgentChoice{Kind::Mesh, -1};
  if (text == "baseline") return AgentChoice{Kind::Baseline, -1};
  constexpr std::string_view prefix = "fixed-";
  if (text.substr(0, prefix.size()) == prefix) {
    int k = -1;
    const auto digits = text.substr(prefix.size());
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && end == digits.data() + digits.size() && k >= 0) return AgentChoice{Kind::Fixed, k};
  }
  return std::nullopt;
}

std::string AgentChoice::name() const {
  switch (kind) {
    case Kind::Mesh: return "mesh";
    case Kind::Baseline: return "baseline";
    case Kind::Fixed: return "fixed-" + std::to_string(k);
  }
  return "?";
}

Action noop_action(const kitchen::Layout& layout, const kitchen::PlayerState& player) {
  const kitchen::Coord ahead = player.position + kitchen::offset(player.orientation);
  if (layout.is_floor(ahead)) return Action::Interact;
  switch (player.orientation) {
    case kitchen::Direction::North: return Action::MoveNorth;
    case kitchen::Direction::South: return Action::MoveSouth;
    case kitchen::Direction::West: return Action::MoveWest;
    case kitchen::Direction::East: return Action::MoveEast;
  }
  return Action::Interact;
}

Session::Session(std::string id, kitchen::Layout layout, std::shared_ptr<const learning::PolicyLibrary> library,
                 AgentChoice agent, std::uint64_t seed, SessionOptions options)
    : id_(std::move(id)),
      layout_(std::move(layout)),
      library_(std::move(library)),
      agent_(agent),
      options_(options),
      seed_(seed),
      state_(kitchen::initial_state(layout_)),
      remaining_(options.ticks) {
  if (!library_) throw SessionError("no policy library for layout '" + layout_.name() + "'");
  if (options_.ticks < 1 || options_.ticks > kRoundTicks) {
    throw SessionError("round length must be 1.." + std::to_string(kRoundTicks) + " ticks");
  }
  if (options_.human_seat != 0 && options_.human_seat != 1) throw SessionError("human seat must be 0 or 1");
  if (agent_.kind == AgentChoice::Kind::Fixed && agent_.k >= library_->k()) {
    throw SessionError("agent '" + agent_.name() + "' but the library has " + std::to_string(library_->k()) +
                       " strategies");
  }
  if (agent_.kind == AgentChoice::Kind::Mesh) {
    moe::MoeConfig cfg;
    cfg.gamma = options_.moe_gamma;
    cfg.robot_seat = 1 - options_.human_seat;
    try {
      mixture_.emplace(library_, layout_, cfg);
    } catch (const std::exception& e) {
      throw SessionError(e.what());
    }
  }
}

void Session::press(std::optional<Action> a) {
  std::lock_guard lock(mu_);
  pending_ = a;
}

std::vector<std::string> Session::tick() {
  std::lock_guard lock(mu_);
  if (remaining_ <= 0) return {error_message("session closed")};
  const int human = options_.human_seat;
  const int robot = 1 - human;
  const Action a_human = pending_ ? *pending_ : noop_action(layout_, state_.players[static_cast<std::size_t>(human)]);
  inputs_.push_back(pending_);
  pending_.reset();

  Action a_robot = Action::Interact;
  switch (agent_.kind) {
    case AgentChoice::Kind::Mesh: a_robot = mixture_->act(state_); break;
    case AgentChoice::Kind::Baseline: a_robot = library_->baseline.greedy(layout_, state_, robot); break;
    case AgentChoice::Kind::Fixed:
      a_robot = library_->strategies[static_cast<std::size_t>(agent_.k)].policy.greedy(layout_, state_, robot);
      break;
  }
  kitchen::StepResult res = kitchen::step(layout_, state_, kitchen::make_joint(robot, a_robot, a_human));
  if (mixture_) mixture_->observe_human(state_, a_human);
  state_ = std::move(res.next_state);
  --remaining_;

  std::vector<std::string> out{state_message_locked()};
  if (remaining_ == 0) out.push_back(json{{"type", "end"}, {"score", state_.orders_served * kitchen::kServeReward}}.dump());
  return out;
}

bool Session::closed() const {
  std::lock_guard lock(mu_);
  return remaining_ <= 0;
}

int Session::remaining() const {
  std::lock_guard lock(mu_);
  return remaining_;
}

kitchen::WorldState Session::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::vector<double> Session::beliefs() const {
  std::lock_guard lock(mu_);
  return mixture_ ? mixture_->weights() : std::vector<double>{};
}

std::vector<std::optional<Action>> Session::human_inputs() const {
  std::lock_guard lock(mu_);
  return inputs_;
}

std::string Session::joined_message() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> rows;
  std::istringstream text(layout_.to_text());
  for (std::string line; std::getline(text, line);) {
    if (!line.empty()) rows.push_back(line);
  }
  return json{{"type", "joined"},
              {"session_id", id_},
              {"layout", layout_.name()},
              {"agent", agent_.name()},
              {"grid", rows},
              {"human_seat", options_.human_seat},
              {"ticks", options_.ticks},
              {"tick_rate", kTickRate}}
      .dump();
}

std::string Session::state_message() const {
  std::lock_guard lock(mu_);
  return state_message_locked();
}

std::string Session::state_message_locked() const {
  json objects = json::array();
  for (const auto& [c, item] : state_.counter_objects) {
    objects.push_back({{"x", c.x}, {"y", c.y}, {"item", kitchen::to_string(item)}});
  }
  json players = json::array();
  for (int seat = 0; seat < 2; ++seat) {
    const auto& p = state_.players[static_cast<std::size_t>(seat)];
    players.push_back({{"seat", seat},
                       {"role", seat == options_.human_seat ? "human" : "agent"},
                       {"x", p.position.x},
                       {"y", p.position.y},
                       {"orientation", kitchen::to_string(p.orientation)},
                       {"held", kitchen::to_string(p.held)}});
  }
  json pots = json::array();
  for (std::size_t i = 0; i < state_.pots.size(); ++i) {
    const auto& pot = state_.pots[i];
    const auto c = layout_.pots()[i];
    pots.push_back({{"x", c.x},
                    {"y", c.y},
                    {"onions", pot.onion_count},
                    {"cook_timer", pot.cook_timer},
                    {"ready", pot.ready}});
  }
  json msg = {{"type", "state"},
              {"tick", state_.tick},
              {"grid_objects", objects},
              {"players", players},
              {"pots", pots},
              {"score", state_.orders_served * kitchen::kServeReward},
              {"time_left", static_cast<double>(remaining_) / kTickRate}};
  if (options_.show_beliefs && mixture_) msg["beliefs"] = mixture_->weights();
  return msg.dump();
}

std::string Session::end_message() const {
  std::lock_guard lock(mu_);
  return json{{"type", "end"}, {"score", state_.orders_served * kitchen::kServeReward}}.dump();
}

SessionManager::SessionManager(LibraryLookup lookup, SessionOptions defaults)
    : lookup_(std::move(lookup)), defaults_(defaults) {}

std::shared_ptr<Session> SessionManager::open(const std::string& layout, const std::string& agent,
                                              std::uint64_t seed) {
  if (!kitchen::has_builtin_layout(layout)) throw SessionError("unknown layout '" + layout + "'");
  const auto choice = AgentChoice::parse(agent);
  if (!choice) throw SessionError("unknown agent '" + agent + "' (expected mesh, baseline or fixed-<k>)");
  auto library = lookup_ ? lookup_(layout) : nullptr;
  if (!library) throw SessionError("no trained policy library for layout '" + layout + "'");
  std::lock_guard lock(mu_);
  const std::string id = "s" + std::to_string(next_++);
  auto session = std::make_shared<Session>(id, kitchen::builtin_layout(layout), std::move(library), *choice, seed,
                                           defaults_);
  sessions_[id] = session;
  return session;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionManager::close(const std::string& id) {
  std::lock_guard lock(mu_);
  sessions_.erase(id);
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw std::invalid_argument("message needs a string 'type'");
  }
  const std::string type = j["type"];
  auto string_field = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw std::invalid_argument(type + " message needs a string '" + key + "'");
    }
    return j[key].get<std::string>();
  };
  ClientMessage m;
  if (type == "join") {
    m.type = ClientMessage::Type::Join;
    m.layout = string_field("layout");
    m.agent = string_field("agent");
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned()) throw std::invalid_argument("join 'seed' must be a non-negative integer");
      m.seed = j["seed"].get<std::uint64_t>();
    }
    return m;
  }
  if (type == "key") {
    m.type = ClientMessage::Type::Key;
    const std::string action = string_field("action");
    if (action != "none") {
      m.action = kitchen::action_from_wire(action);
      if (!m.action) throw std::invalid_argument("unknown action '" + action + "'");
    }
    return m;
  }
  throw std::invalid_argument("unknown message type '" + type + "'");
}

namespace {

std::optional<std::string> require(const json& j, const char* key, bool (json::*is)() const noexcept,
                                   const char* kind) {
  if (!j.contains(key)) return std::string("missing '") + key + "'";
  if (!(j[key].*is)()) return std::string("'") + key + "' must be " + kind;
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_server_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    return std::string("not JSON: ") + e.what();
  }
  if (!j.is_object()) return "not an object";
  if (auto e = require(j, "type", &json::is_string, "a string")) return e;
  const std::string type = j["type"];
  if (type == "state") {
    for (const char* key : {"tick", "score"}) {
      if (auto e = require(j, key, &json::is_number, "a number")) return e;
    }
    if (auto e = require(j, "time_left", &json::is_number, "a number")) return e;
    for (const char* key : {"grid_objects", "players", "pots"}) {
      if (auto e = require(j, key, &json::is_array, "an array")) return e;
    }
    if (j["players"].size() != 2) return "'players' must have two entries";
    for (const auto& p : j["players"]) {
      for (const char* key : {"seat", "x", "y"}) {
        if (!p.contains(key) || !p[key].is_number_integer()) return std::string("player '") + key + "' must be an integer";
      }
      for (const char* key : {"role", "orientation", "held"}) {
        if (!p.contains(key) || !p[key].is_string()) return std::string("player '") + key + "' must be a string";
      }
    }
    for (const auto& o : j["grid_objects"]) {
      if (!o.contains("x") || !o.contains("y") || !o.contains("item") || !o["item"].is_string()) {
        return "grid object needs x, y and item";
      }
    }
    for (const auto& p : j["pots"]) {
      for (const char* key : {"x", "y", "onions", "cook_timer"}) {
        if (!p.contains(key) || !p[key].is_number_integer()) return std::string("pot '") + key + "' must be an integer";
      }
      if (!p.contains("ready") || !p["ready"].is_boolean()) return "pot 'ready' must be a boolean";
    }
    if (j.contains("beliefs")) {
      if (!j["beliefs"].is_array() || j["beliefs"].empty()) return "'beliefs' must be a non-empty array";
      double sum = 0.0;
      for (const auto& w : j["beliefs"]) {
        if (!w.is_number() || w.get<double>() < 0.0) return "'beliefs' entries must be non-negative numbers";
        sum += w.get<double>();
      }
      if (std::abs(sum - 1.0) > 1e-9) return "'beliefs' must sum to 1";
    }
    return std::nullopt;
  }
  if (type == "end") return require(j, "score", &json::is_number, "a number");
  if (type == "joined") {
    for (const char* key : {"session_id", "layout", "agent"}) {
      if (auto e = require(j, key, &json::is_string, "a string")) return e;
    }
    return require(j, "grid", &json::is_array, "an array");
  }
  if (type == "error") return require(j, "message", &json::is_string, "a string");
  return "unknown type '" + type + "'";
}

std::string error_message(std::string_view what) {
  return json{{"type", "error"}, {"message", std::string(what)}}.dump();
}

}  // namespace mesh::play
