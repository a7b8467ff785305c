#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mesh/learning/library.hpp"
#include "mesh/moe/agent.hpp"

namespace mesh::play {

using kitchen::Action;

inline constexpr int kRoundTicks = 360;  // 60 s at 6 ticks/s
inline constexpr double kTickRate = 6.0;

struct AgentChoice {
  enum class Kind { Mesh, Baseline, Fixed };
  Kind kind = Kind::Mesh;
  int k = -1;

  /// "mesh", "baseline" or "fixed-<k>".
  static std::optional<AgentChoice> parse(std::string_view text);
  std::string name() const;
};

struct SessionOptions {
  int ticks = kRoundTicks;
  int human_seat = 1;
  bool show_beliefs = false;
  double moe_gamma = 0.9;
};

class SessionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One live round. Keypresses are buffered latest-wins and consumed at the
/// next tick; a tick without a keypress leaves the human in place. Methods
/// lock an internal mutex, so the owner may call them from any thread.
class Session {
 public:
  Session(std::string id, kitchen::Layout layout, std::shared_ptr<const learning::PolicyLibrary> library,
          AgentChoice agent, std::uint64_t seed, SessionOptions options = {});

  const std::string& id() const { return id_; }
  const kitchen::Layout& layout() const { return layout_; }
  const AgentChoice& agent() const { return agent_; }
  std::uint64_t seed() const { return seed_; }

  /// nullopt is an explicit "none" and cancels an earlier key in the window.
  void press(std::optional<Action> a);
  /// Advances one tick and returns the outbound messages: the state frame,
  /// followed by the end message on the last tick. On a closed session
  /// returns a single error message and changes nothing.
  std::vector<std::string> tick();

  bool closed() const;
  int remaining() const;
  kitchen::WorldState state() const;
  std::vector<double> beliefs() const;  // empty unless mesh
  /// Human input per elapsed tick; nullopt where no key was pressed.
  std::vector<std::optional<Action>> human_inputs() const;

  std::string joined_message() const;
  std::string state_message() const;
  std::string end_message() const;

 private:
  std::string state_message_locked() const;

  mutable std::mutex mu_;
  std::string id_;
  kitchen::Layout layout_;
  std::shared_ptr<const learning::PolicyLibrary> library_;
  AgentChoice agent_;
  SessionOptions options_;
  std::uint64_t seed_;
  std::optional<moe::MoeAgent> mixture_;
  kitchen::WorldState state_;
  int remaining_;
  std::optional<Action> pending_;
  std::vector<std::optional<Action>> inputs_;
};

/// The action that leaves a player exactly as it is: interacting with
/// floor, or walking into the non-floor cell it already faces.
Action noop_action(const kitchen::Layout& layout, const kitchen::PlayerState& player);

/// Finds the library trained for a layout, or nullptr.
using LibraryLookup = std::function<std::shared_ptr<const learning::PolicyLibrary>(const std::string& layout)>;

class SessionManager {
 public:
  explicit SessionManager(LibraryLookup lookup, SessionOptions defaults = {});

  /// Throws SessionError for an unknown layout or agent or a missing library.
  std::shared_ptr<Session> open(const std::string& layout, const std::string& agent, std::uint64_t seed);
  std::shared_ptr<Session> find(const std::string& id) const;
  void close(const std::string& id);
  std::size_t size() const;

 private:
  LibraryLookup lookup_;
  SessionOptions defaults_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_ = 1;
};

/// Client message after parsing. `action` is nullopt for "none".
struct ClientMessage {
  enum class Type { Join, Key };
  Type type = Type::Join;
  std::string layout;
  std::string agent;
  std::optional<std::uint64_t> seed;
  std::optional<Action> action;
};

/// Throws std::invalid_argument naming the problem.
ClientMessage parse_client_message(std::string_view text);
/// Returns a description of the first schema violation, or nullopt.
std::optional<std::string> validate_server_message(std::string_view text);
std::string error_message(std::string_view what);

}  // namespace mesh::play
