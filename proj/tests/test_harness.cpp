#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "helpers.hpp"
#include "mesh/harness/demos.hpp"
#include "mesh/harness/evaluate.hpp"
#include "mesh/harness/fluency.hpp"
#include "mesh/harness/pipeline.hpp"

using namespace mesh;
using namespace mesh::harness;
using kitchen::Action;
using testutil::cramped;
namespace fs = std::filesystem;

namespace {

ScriptedStrategy quiet(const std::string& name) {
  ScriptedStrategy s = builtin_strategy(name);
  s.noise = 0.0;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mesh_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("demo generation") {
  const auto l = cramped();
  SUBCASE("counts") {
    const auto d = generate_demos(l, {builtin_strategy("role_specialist"), builtin_strategy("counter_relay")}, 15,
                                  150, 2);
    CHECK(d.rollouts.size() == 30);
    CHECK(std::count(d.planted.begin(), d.planted.end(), 0) == 15);
    CHECK(std::count(d.planted.begin(), d.planted.end(), 1) == 15);
    std::set<std::string> ids;
    for (const auto& r : d.rollouts) {
      ids.insert(r.team_id);
      CHECK(r.length() == 150);
    }
    CHECK(ids.size() == 30);
  }
  SUBCASE("noise-free runs are byte-identical") {
    const std::vector<ScriptedStrategy> s = {quiet("role_specialist"), quiet("soup_handoff")};
    const auto a = generate_demos(l, s, 3, 120, 8);
    const auto b = generate_demos(l, s, 3, 120, 8);
    REQUIRE(a.rollouts.size() == b.rollouts.size());
    for (std::size_t i = 0; i < a.rollouts.size(); ++i) {
      std::stringstream x, y;
      kitchen::write_trajectory_log(x, l, a.rollouts[i]);
      kitchen::write_trajectory_log(y, l, b.rollouts[i]);
      CHECK(x.str() == y.str());
    }
  }
  SUBCASE("role specialists split the work, complete-as-needed teams share it") {
    auto supports = [&](const std::string& name) {
      std::array<std::set<kitchen::Subtask>, 2> out;
      const auto r = run_scripted_team(l, quiet(name), 400, 12);
      for (const auto& t : r.steps) {
        for (const auto& e : t.events) out[static_cast<std::size_t>(e.player)].insert(e.subtask);
      }
      return out;
    };
    const auto rs = supports("role_specialist");
    const auto ca = supports("complete_as_needed");
    std::vector<kitchen::Subtask> both;
    std::set_intersection(rs[0].begin(), rs[0].end(), rs[1].begin(), rs[1].end(), std::back_inserter(both));
    CHECK(both.empty());
    CHECK(!rs[0].empty());
    CHECK(!rs[1].empty());
    both.clear();
    std::set_intersection(ca[0].begin(), ca[0].end(), ca[1].begin(), ca[1].end(), std::back_inserter(both));
    CHECK(!both.empty());
  }
  SUBCASE("a stuck script is reported by name") {
    ScriptedStrategy stuck{"stuck", {SeatRule{{Goal::FetchSoupCounter}}, SeatRule{{Goal::FetchSoupCounter}}}, 0.0};
    try {
      run_scripted_team(l, stuck, 300, 1);
      FAIL("expected a deadlock");
    } catch (const DeadlockError& e) {
      CHECK(e.strategy() == "stuck");
    }
  }
  SUBCASE("invalid strategies") {
    ScriptedStrategy noisy = builtin_strategy("role_specialist");
    noisy.noise = 0.4;
    CHECK_THROWS(noisy.check());
    CHECK_THROWS(generate_demos(l, {builtin_strategy("role_specialist")}, 3, 150, 1));
    CHECK_THROWS(generate_demos(l, {builtin_strategy("role_specialist"), builtin_strategy("soup_handoff")}, 3, 50, 1));
    CHECK_THROWS(builtin_strategy("no_such_strategy"));
  }
}

TEST_CASE("fluency") {
  const auto l = cramped();
  SUBCASE("fully idle") {
    auto s = kitchen::initial_state(l);
    s.players[0].orientation = kitchen::Direction::West;  // faces a counter
    std::vector<kitchen::JointAction> acts(50, {Action::MoveWest, Action::MoveNorth});
    const auto f = fluency_metrics(kitchen::replay(l, s, acts));
    CHECK(f.ticks == 50);
    CHECK(f.human_idle == 50);
    CHECK(f.robot_idle == 50);
    CHECK(f.concurrent == 0);
  }
  SUBCASE("fully active") {
    std::vector<kitchen::JointAction> acts;
    for (int t = 0; t < 50; ++t) {
      acts.push_back(t % 2 == 0 ? kitchen::JointAction{Action::MoveEast, Action::MoveEast}
                                : kitchen::JointAction{Action::MoveWest, Action::MoveWest});
    }
    const auto f = fluency_metrics(kitchen::replay(l, kitchen::initial_state(l), acts));
    CHECK(f.human_idle == 0);
    CHECK(f.robot_idle == 0);
    CHECK(f.concurrent == 50);
    CHECK(Fluency::seconds(f.concurrent) == doctest::Approx(50.0 / 6.0));
  }
  SUBCASE("identities on random rollouts") {
    Rng rng = make_rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<kitchen::JointAction> acts;
      for (int t = 0; t < 100; ++t) acts.push_back(testutil::random_joint(rng));
      const auto r = kitchen::replay(l, kitchen::initial_state(l), acts);
      for (int human : {0, 1}) {
        const auto f = fluency_metrics(r, human);
        std::int64_t hi = 0, ri = 0, both = 0;
        for (std::size_t i = 0; i < r.length(); ++i) {
          const auto& a = r.steps[i].state.players;
          const auto& b = r.state_after(i).players;
          const bool h = a[human] == b[human];
          const bool rb = a[1 - human] == b[1 - human];
          hi += h;
          ri += rb;
          both += !h && !rb;
        }
        CHECK(f.human_idle == hi);
        CHECK(f.robot_idle == ri);
        CHECK(f.concurrent == both);
        CHECK(f.human_idle + f.human_active() == 100);
        CHECK(f.robot_idle + f.robot_active() == 100);
        CHECK(f.concurrent <= std::min(f.human_active(), f.robot_active()));
      }
    }
  }
}

namespace {

EvaluationRequest small_request(std::size_t len = 80) {
  EvaluationRequest req;
  req.agents = {AgentSpec::mesh(), AgentSpec::baseline(), AgentSpec::fixed(0), AgentSpec::fixed(1)};
  req.partners = {PartnerSpec::aggregate_bc(), PartnerSpec::strategy_bc(1),
                  PartnerSpec::scripted_strategy(builtin_strategy("role_specialist")), PartnerSpec::fixed_policy(0)};
  req.games = 4;
  req.episode_len = len;
  req.seed = 5;
  req.keep_rollouts = true;
  req.keep_beliefs = true;
  return req;
}

}  // namespace

TEST_CASE("evaluation") {
  const auto l = cramped();
  const auto lib = testutil::blank_library(l.name(), 2);
  const auto req = small_request();
  const auto report = evaluate(lib, l, req);

  SUBCASE("every requested cell appears exactly once") {
    CHECK(report.cells.size() == 4 * 4 * 2);
    std::set<std::tuple<std::string, std::string, bool>> keys;
    for (const auto& c : report.cells) keys.insert({c.agent, c.partner, c.swapped});
    CHECK(keys.size() == report.cells.size());
    for (const auto& a : req.agents) {
      for (const auto& p : req.partners) {
        for (bool sw : {false, true}) CHECK(report.find(a.name(), p.name(), sw) != nullptr);
      }
    }
  }
  SUBCASE("means and sample deviations over exactly G games") {
    CHECK(report.games == 4);
    for (const auto& c : report.cells) {
      REQUIRE(c.orders.size() == 4);
      double m = 0.0;
      for (double x : c.orders) m += x;
      m /= 4.0;
      double ss = 0.0;
      for (double x : c.orders) ss += (x - m) * (x - m);
      CHECK(c.mean_orders == doctest::Approx(m));
      CHECK(c.sd_orders == doctest::Approx(std::sqrt(ss / 3.0)));
      CHECK(c.fluency.size() == 4);
      CHECK(c.rollouts.size() == 4);
      for (std::size_t g = 0; g < 4; ++g) {
        CHECK(c.orders[g] == static_cast<double>(c.rollouts[g].final_state.orders_served));
        const auto& f = c.fluency[g];
        CHECK(f.ticks == 80);
        CHECK(f.concurrent <= std::min(f.human_active(), f.robot_active()));
      }
      if (c.agent == "mesh") {
        REQUIRE(c.beliefs.size() == 4);
        CHECK(c.beliefs[0].size() == 80);
      }
    }
  }
  SUBCASE("deterministic") {
    const auto again = evaluate(lib, l, req);
    REQUIRE(again.cells.size() == report.cells.size());
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
      CHECK(again.cells[i].orders == report.cells[i].orders);
      CHECK(again.cells[i].rollouts[0].actions() == report.cells[i].rollouts[0].actions());
    }
    std::stringstream a, b;
    write_report_csv(a, report, "h");
    write_report_csv(b, again, "h");
    CHECK(a.str() == b.str());
  }
  SUBCASE("zero-length episodes serve nothing") {
    const auto zero = evaluate(lib, l, small_request(0));
    for (const auto& c : zero.cells) {
      CHECK(c.mean_orders == 0.0);
      for (double x : c.orders) CHECK(x == 0.0);
    }
  }
  SUBCASE("the robot sits where the seating says") {
    const auto* std_cell = report.find("fixed-0", "bc-aggregate", false);
    const auto* sw_cell = report.find("fixed-0", "bc-aggregate", true);
    REQUIRE(std_cell);
    REQUIRE(sw_cell);
    // A uniform fixed policy is greedy MoveNorth from its seat.
    for (const auto& t : std_cell->rollouts[0].steps) CHECK(t.action.robot == Action::MoveNorth);
    for (const auto& t : sw_cell->rollouts[0].steps) CHECK(t.action.human == Action::MoveNorth);
  }
  SUBCASE("reports") {
    std::stringstream csv, js, table;
    write_report_csv(csv, report, "abcd");
    write_report_json(js, report, "abcd");
    write_report_table(table, report);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "# config_hash=abcd");
    std::getline(csv, line);
    CHECK(line == "layout,agent,partner,seats,games,mean_orders,sd_orders,human_idle_s,robot_idle_s,concurrent_s");
    int rows = 0;
    while (std::getline(csv, line)) rows += !line.empty();
    CHECK(rows == static_cast<int>(report.cells.size()));
    const auto j = nlohmann::json::parse(js.str());
    CHECK(j.dump().find("abcd") != std::string::npos);
    CHECK(table.str().find("SwitchInd") != std::string::npos);
    CHECK(table.str().find("Standard") != std::string::npos);
  }
  SUBCASE("configuration errors") {
    CHECK_THROWS_AS(evaluate(lib, kitchen::builtin_layout("counter_circuit"), req), EvaluationConfigError);
    auto bad = req;
    bad.agents = {AgentSpec::fixed(5)};
    CHECK_THROWS_AS(evaluate(lib, l, bad), EvaluationConfigError);
  }
}

namespace {

PipelineConfig tiny_config() {
  PipelineConfig c;
  c.strategies = {"role_specialist", "counter_relay"};
  c.teams_per_strategy = 6;
  c.n_range = {2, 3};
  c.k_range = {2, 3};
  c.budget = 16;
  c.irl_iters = 30;
  c.games = 2;
  c.eval_len = 60;
  return c;
}

}  // namespace

TEST_CASE("pipeline config") {
  const PipelineConfig c = tiny_config();
  const PipelineConfig back = PipelineConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);
  PipelineConfig d = c;
  d.train_seed = 2;
  CHECK(d.hash() != c.hash());
  auto j = nlohmann::json::parse(c.to_json());
  j["surprise"] = 1;
  CHECK_THROWS(PipelineConfig::from_json(j.dump()));
}

TEST_CASE("pipeline runs, resumes and reproduces") {
  const PipelineConfig cfg = tiny_config();
  const fs::path a = scratch("a"), b = scratch("b");
  const auto first = run_pipeline(cfg, a);
  CHECK(first.stages_run == kPipelineStages);
  CHECK(first.recognized_k >= 2);
  for (const char* name : {"config.json", "status.json", "planted.json", "dataset.jsonl", "recognition.json",
                           "library.json", "evaluation.csv", "evaluation.json", "orders_table.txt", "summary.json"}) {
    CHECK_MESSAGE(fs::exists(a / name), name);
  }
  CHECK(slurp(a / "dataset.jsonl").find(cfg.hash()) != std::string::npos);
  CHECK(slurp(a / "library.json").find(cfg.hash()) != std::string::npos);
  const auto status = nlohmann::json::parse(slurp(a / "status.json"));
  CHECK(status.dump().find("incomplete") == std::string::npos);

  SUBCASE("rerun elsewhere is byte-identical") {
    run_pipeline(cfg, b);
    CHECK(tree(a) == tree(b));
  }
  SUBCASE("resume skips finished stages") {
    const auto before = tree(a);
    const auto again = run_pipeline(cfg, a);
    CHECK(again.stages_run == std::vector<std::string>{"evaluate"});
    CHECK(tree(a) == before);
  }
  SUBCASE("a different config is refused unless forced") {
    PipelineConfig other = cfg;
    other.eval_seed = 9;
    try {
      run_pipeline(other, a);
      FAIL("expected a refusal");
    } catch (const PipelineError& e) {
      CHECK(e.stage() == "resume");
      CHECK(std::string(e.what()).find(cfg.hash()) != std::string::npos);
    }
    PipelineOptions force;
    force.force = true;
    const auto forced = run_pipeline(other, a, force);
    CHECK(forced.config_hash == other.hash());
    CHECK(forced.stages_run == kPipelineStages);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("pipeline failures name the stage and leave it incomplete") {
  PipelineConfig cfg = tiny_config();
  cfg.strategies = {"role_specialist", "no_such_strategy"};
  const fs::path dir = scratch("fail");
  try {
    run_pipeline(cfg, dir);
    FAIL("expected a stage failure");
  } catch (const PipelineError& e) {
    CHECK(e.stage() == "generate");
  }
  const auto status = nlohmann::json::parse(slurp(dir / "status.json"));
  CHECK(status.dump().find("incomplete") != std::string::npos);
  fs::remove_all(dir);

  PipelineConfig bad = tiny_config();
  bad.layout = "no_such_kitchen";
  try {
    run_pipeline(bad, scratch("bad_layout"));
    FAIL("expected a config error");
  } catch (const PipelineError& e) {
    CHECK(e.stage() == "config");
  }
}
