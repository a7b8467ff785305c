#include <doctest.h>

#include <chrono>
#include <set>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "helpers.hpp"
#include "mesh/play/server.hpp"
#include "mesh/play/session.hpp"

using namespace mesh;
using namespace mesh::play;
using nlohmann::json;
using testutil::cramped;

namespace {

std::shared_ptr<SessionManager> manager(SessionOptions opts = {}) {
  auto lib = testutil::blank_library("cramped_room", 2);
  return std::make_shared<SessionManager>(
      [lib](const std::string& layout) -> std::shared_ptr<const learning::PolicyLibrary> {
        return layout == "cramped_room" ? lib : nullptr;
      },
      opts);
}

void check_valid(const std::string& msg) {
  const auto problem = validate_server_message(msg);
  CHECK_MESSAGE(!problem, (problem ? *problem : std::string()) << " in " << msg);
}

}  // namespace

TEST_CASE("noop action leaves the player untouched") {
  const auto l = cramped();
  for (const auto& s : testutil::random_states(l, 3000, 41)) {
    const kitchen::JointAction a{noop_action(l, s.players[0]), noop_action(l, s.players[1])};
    const auto next = kitchen::step(l, s, a).next_state;
    CHECK(next.players == s.players);
    CHECK(next.orders_served == s.orders_served);
  }
}

TEST_CASE("agent names") {
  CHECK(AgentChoice::parse("mesh")->kind == AgentChoice::Kind::Mesh);
  CHECK(AgentChoice::parse("baseline")->kind == AgentChoice::Kind::Baseline);
  CHECK(AgentChoice::parse("fixed-1")->k == 1);
  CHECK(AgentChoice::parse("fixed-1")->name() == "fixed-1");
  CHECK(!AgentChoice::parse("fixed-"));
  CHECK(!AgentChoice::parse("fixed-x"));
  CHECK(!AgentChoice::parse("robot"));
}

TEST_CASE("sessions") {
  SessionOptions opts;
  opts.show_beliefs = true;
  auto sessions = manager(opts);

  SUBCASE("open rejects unknown names") {
    CHECK_THROWS_AS(sessions->open("nowhere", "mesh", 1), SessionError);
    CHECK_THROWS_AS(sessions->open("cramped_room", "wizard", 1), SessionError);
    CHECK_THROWS_AS(sessions->open("counter_circuit", "mesh", 1), SessionError);  // no library
    CHECK_THROWS_AS(sessions->open("cramped_room", "fixed-2", 1), SessionError);
    CHECK(sessions->size() == 0);
  }
  SUBCASE("distinct ids") {
    std::set<std::string> ids;
    for (int i = 0; i < 5; ++i) ids.insert(sessions->open("cramped_room", "baseline", 1)->id());
    CHECK(ids.size() == 5);
    CHECK(sessions->size() == 5);
    const std::string first = *ids.begin();
    CHECK(sessions->find(first) != nullptr);
    sessions->close(first);
    CHECK(sessions->find(first) == nullptr);
  }
  SUBCASE("a round lasts 360 ticks and then ends") {
    auto s = sessions->open("cramped_room", "mesh", 3);
    check_valid(s->joined_message());
    check_valid(s->state_message());
    for (int t = 1; t <= kRoundTicks; ++t) {
      REQUIRE(!s->closed());
      if (t % 3 == 0) s->press(kitchen::Action::MoveEast);
      const auto out = s->tick();
      for (const auto& m : out) check_valid(m);
      const auto state = json::parse(out[0]);
      CHECK(state["type"] == "state");
      CHECK(state["tick"] == t);
      CHECK(state["time_left"].get<double>() == doctest::Approx((kRoundTicks - t) / kTickRate));
      double sum = 0.0;
      for (double w : state["beliefs"]) sum += w;
      CHECK(sum == doctest::Approx(1.0));
      CHECK(out.size() == (t == kRoundTicks ? 2u : 1u));
    }
    CHECK(s->closed());
    CHECK(s->remaining() == 0);
    const auto before = s->state();
    const auto out = s->tick();
    REQUIRE(out.size() == 1);
    check_valid(out[0]);
    CHECK(json::parse(out[0])["type"] == "error");
    CHECK(s->state() == before);
    CHECK(s->human_inputs().size() == static_cast<std::size_t>(kRoundTicks));
    check_valid(s->end_message());
  }
  SUBCASE("keys are latest-wins within a tick and none cancels") {
    auto s = sessions->open("cramped_room", "baseline", 3);
    s->press(kitchen::Action::MoveNorth);
    s->press(kitchen::Action::MoveEast);
    s->tick();
    s->press(kitchen::Action::MoveWest);
    s->press(std::nullopt);
    const auto held = s->state().players[1];
    s->tick();
    s->tick();
    const auto inputs = s->human_inputs();
    REQUIRE(inputs.size() == 3);
    CHECK(inputs[0] == kitchen::Action::MoveEast);
    CHECK(!inputs[1]);
    CHECK(!inputs[2]);
    CHECK(s->state().players[1] == held);  // no key means standing still
  }
  SUBCASE("beliefs only for the mixture agent") {
    CHECK(sessions->open("cramped_room", "mesh", 1)->beliefs().size() == 2);
    auto fixed = sessions->open("cramped_room", "fixed-0", 1);
    CHECK(fixed->beliefs().empty());
    CHECK(!json::parse(fixed->state_message()).contains("beliefs"));
  }
  SUBCASE("same seed, same inputs, same round") {
    auto a = sessions->open("cramped_room", "mesh", 9);
    auto b = sessions->open("cramped_room", "mesh", 9);
    for (int t = 0; t < 40; ++t) {
      const auto act = static_cast<kitchen::Action>(t % 5);
      a->press(act);
      b->press(act);
      CHECK(a->tick() == b->tick());
    }
  }
}

TEST_CASE("client messages") {
  auto m = parse_client_message(R"({"type":"join","layout":"cramped_room","agent":"mesh","seed":4})");
  CHECK(m.type == ClientMessage::Type::Join);
  CHECK(m.layout == "cramped_room");
  CHECK(m.agent == "mesh");
  CHECK(m.seed == 4u);
  CHECK(!parse_client_message(R"({"type":"join","layout":"cramped_room","agent":"mesh"})").seed);

  m = parse_client_message(R"({"type":"key","action":"interact"})");
  CHECK(m.type == ClientMessage::Type::Key);
  CHECK(m.action == kitchen::Action::Interact);
  CHECK(!parse_client_message(R"({"type":"key","action":"none"})").action);

  for (const char* bad : {"not json", "[]", R"({"type":3})", R"({"type":"dance"})", R"({"type":"key"})",
                          R"({"type":"key","action":"jump"})", R"({"type":"join","layout":"cramped_room"})",
                          R"({"type":"join","layout":"cramped_room","agent":"mesh","seed":-1})"}) {
    CHECK_THROWS_AS(parse_client_message(bad), std::invalid_argument);
  }
}

TEST_CASE("server message schema") {
  check_valid(error_message("boom"));
  check_valid(R"({"type":"end","score":40})");
  for (const char* bad :
       {"{}", R"({"type":"end"})", R"({"type":"error"})", R"({"type":"joined","session_id":"s1"})",
        R"({"type":"state","tick":1,"score":0,"time_left":1,"grid_objects":[],"players":[],"pots":[]})",
        R"({"type":"mystery"})"}) {
    CHECK_MESSAGE(validate_server_message(bad), bad);
  }
  auto sessions = manager();
  auto s = sessions->open("cramped_room", "baseline", 1);
  auto state = json::parse(s->state_message());
  state["beliefs"] = {0.7, 0.7};
  CHECK(validate_server_message(state.dump()));
  state["beliefs"] = {0.25, 0.75};
  CHECK(!validate_server_message(state.dump()));
  state["pots"][0]["ready"] = 1;
  CHECK(validate_server_message(state.dump()));
}

TEST_CASE("websocket round trip") {
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  using tcp = boost::asio::ip::tcp;

  ServerOptions opts;
  opts.port = 0;
  PlayServer server(manager(), opts);
  const unsigned short port = server.port();
  REQUIRE(port != 0);
  std::thread loop([&] { server.run(); });

  {
    boost::asio::io_context ioc;
    tcp::resolver resolver(ioc);
    websocket::stream<tcp::socket> ws(ioc);
    boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/");

    auto read = [&] {
      beast::flat_buffer buf;
      ws.read(buf);
      return beast::buffers_to_string(buf.data());
    };

    ws.write(boost::asio::buffer(std::string(R"({"type":"key","action":"north"})")));
    auto msg = read();
    check_valid(msg);
    CHECK(json::parse(msg)["type"] == "error");

    ws.write(boost::asio::buffer(std::string(R"({"type":"join","layout":"cramped_room","agent":"mesh","seed":2})")));
    msg = read();
    check_valid(msg);
    CHECK(json::parse(msg)["type"] == "joined");
    CHECK(json::parse(msg)["agent"] == "mesh");

    ws.write(boost::asio::buffer(std::string(R"({"type":"key","action":"east"})")));
    int last_tick = -1;
    for (int i = 0; i < 4; ++i) {
      msg = read();
      check_valid(msg);
      const auto j = json::parse(msg);
      REQUIRE(j["type"] == "state");
      CHECK(j["tick"].get<int>() > last_tick);
      last_tick = j["tick"].get<int>();
    }
    CHECK(last_tick >= 2);

    ws.write(boost::asio::buffer(std::string(R"({"type":"hello"})")));
    bool saw_error = false;
    for (int i = 0; i < 10 && !saw_error; ++i) {
      msg = read();
      check_valid(msg);
      saw_error = json::parse(msg)["type"] == "error";
    }
    CHECK(saw_error);
    beast::error_code ec;
    ws.close(websocket::close_code::normal, ec);
  }

  server.stop();
  loop.join();
}
