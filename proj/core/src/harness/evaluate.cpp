#include "mesh/harness/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace mesh::harness {

using kitchen::Action;
using kitchen::WorldState;
using nlohmann::json;

std::string AgentSpec::name() const {
  switch (kind) {
    case Kind::Mesh: return "mesh";
    case Kind::Baseline: return "baseline";
    case Kind::Fixed: return "fixed-" + std::to_string(k);
  }
  return "?";
}

std::string PartnerSpec::name() const {
  switch (kind) {
    case Kind::AggregateBC: return "bc-aggregate";
    case Kind::StrategyBC: return "bc-" + std::to_string(k);
    case Kind::Scripted: return "scripted-" + scripted.name;
    case Kind::FixedPolicy: return "policy-" + std::to_string(k);
  }
  return "?";
}

const EvalCell* EvaluationReport::find(const std::string& agent, const std::string& partner, bool swapped) const {
  for (const auto& c : cells) {
    if (c.agent == agent && c.partner == partner && c.swapped == swapped) return &c;
  }
  return nullptr;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void check_index(int k, const learning::PolicyLibrary& lib, const std::string& what) {
  if (k < 0 || k >= lib.k()) {
    throw EvaluationConfigError("evaluate: " + what + " index " + std::to_string(k) + " is outside 0.." +
                                std::to_string(lib.k() - 1));
  }
}

}  // namespace

kitchen::Rollout play_evaluation_episode(const std::shared_ptr<const learning::PolicyLibrary>& library,
                                         const kitchen::Layout& layout, const AgentSpec& agent,
                                         const PartnerSpec& partner, bool swapped, std::size_t episode_len,
                                         std::uint64_t seed, const moe::MoeConfig& moe_config,
                                         std::vector<moe::BeliefRecord>* beliefs) {
  const learning::PolicyLibrary& lib = *library;
  const int robot = swapped ? 1 : 0;
  const int human = 1 - robot;
  Rng rng = make_rng(seed);

  std::optional<moe::MoeAgent> mixture;
  if (agent.kind == AgentSpec::Kind::Mesh) {
    moe::MoeConfig cfg = moe_config;
    cfg.robot_seat = robot;
    mixture.emplace(library, layout, cfg);
  }
  const learning::Policy* fixed = agent.kind == AgentSpec::Kind::Baseline ? &lib.baseline
                                  : agent.kind == AgentSpec::Kind::Fixed
                                      ? &lib.strategies.at(static_cast<std::size_t>(agent.k)).policy
                                      : nullptr;
  std::optional<ScriptedAgent> script;
  if (partner.kind == PartnerSpec::Kind::Scripted) {
    script.emplace(layout, partner.scripted.seats[static_cast<std::size_t>(human)], human, partner.scripted.noise);
  }

  kitchen::Rollout r;
  r.team_id = agent.name() + "+" + partner.name();
  r.steps.reserve(episode_len);
  WorldState s = kitchen::initial_state(layout);
  for (std::size_t t = 0; t < episode_len; ++t) {
    const Action a_robot = mixture ? mixture->act(s) : fixed->greedy(layout, s, robot);
    Action a_human = Action::MoveNorth;
    switch (partner.kind) {
      case PartnerSpec::Kind::AggregateBC:
        a_human = learning::sample(lib.aggregate_human.probs(layout, s, human), rng);
        break;
      case PartnerSpec::Kind::StrategyBC:
        a_human = learning::sample(lib.strategies[static_cast<std::size_t>(partner.k)].human.probs(layout, s, human),
                                   rng);
        break;
      case PartnerSpec::Kind::Scripted:
        a_human = script->act(s, rng);
        break;
      case PartnerSpec::Kind::FixedPolicy:
        a_human = lib.strategies[static_cast<std::size_t>(partner.k)].policy.greedy(layout, s, human);
        break;
    }
    const kitchen::JointAction joint = kitchen::make_joint(robot, a_robot, a_human);
    kitchen::StepResult res = kitchen::step(layout, s, joint);
    if (mixture) {
      mixture->observe_human(s, a_human);
      if (beliefs) beliefs->push_back(mixture->record(s.tick, a_robot));
    }
    r.steps.push_back({std::move(s), joint, std::move(res.events), res.features});
    s = std::move(res.next_state);
  }
  r.final_state = std::move(s);
  return r;
}

EvaluationReport evaluate(std::shared_ptr<const learning::PolicyLibrary> library, const kitchen::Layout& layout,
                          const EvaluationRequest& request, const moe::MoeConfig& moe_config) {
  if (!library) throw EvaluationConfigError("evaluate: no policy library");
  const auto& lib = *library;
  if (lib.layout != layout.name()) {
    throw EvaluationConfigError("evaluate: library was trained on '" + lib.layout + "' but the layout is '" +
                                layout.name() + "'");
  }
  if (request.games < 1) throw EvaluationConfigError("evaluate: games must be >= 1");
  for (const auto& a : request.agents) {
    if (a.kind == AgentSpec::Kind::Fixed) check_index(a.k, lib, "agent strategy");
  }
  for (const auto& p : request.partners) {
    if (p.kind == PartnerSpec::Kind::StrategyBC || p.kind == PartnerSpec::Kind::FixedPolicy) {
      check_index(p.k, lib, "partner strategy");
    }
    if (p.kind == PartnerSpec::Kind::Scripted) p.scripted.check();
  }

  EvaluationReport report;
  report.layout = layout.name();
  report.games = request.games;
  report.episode_len = request.episode_len;
  report.seed = request.seed;

  struct Job {
    std::size_t cell;
    int game;
  };
  std::vector<Job> jobs;
  std::vector<std::tuple<AgentSpec, PartnerSpec, bool>> specs;
  for (const auto& a : request.agents) {
    for (const auto& p : request.partners) {
      for (bool sw : request.swapped) {
        EvalCell cell;
        cell.layout = layout.name();
        cell.agent = a.name();
        cell.partner = p.name();
        cell.swapped = sw;
        cell.orders.assign(static_cast<std::size_t>(request.games), 0.0);
        cell.fluency.assign(cell.orders.size(), {});
        if (request.keep_rollouts) cell.rollouts.assign(cell.orders.size(), {});
        if (request.keep_beliefs && a.kind == AgentSpec::Kind::Mesh) cell.beliefs.assign(cell.orders.size(), {});
        for (int g = 0; g < request.games; ++g) jobs.push_back({report.cells.size(), g});
        report.cells.push_back(std::move(cell));
        specs.emplace_back(a, p, sw);
      }
    }
  }

  // Every job writes only its own slots, so the schedule cannot change the result.
  auto run = [&](const Job& job) {
    EvalCell& cell = report.cells[job.cell];
    const auto& [agent, partner, sw] = specs[job.cell];
    const std::string key = cell.agent + "|" + cell.partner + "|" + (sw ? "1" : "0");
    const std::uint64_t seed = mix_seed(mix_seed(request.seed, fnv1a(key)), static_cast<std::uint64_t>(job.game));
    const auto g = static_cast<std::size_t>(job.game);
    std::vector<moe::BeliefRecord>* beliefs = cell.beliefs.empty() ? nullptr : &cell.beliefs[g];
    kitchen::Rollout r =
        play_evaluation_episode(library, layout, agent, partner, sw, request.episode_len, seed, moe_config, beliefs);
    cell.orders[g] = static_cast<double>(r.final_state.orders_served);
    cell.fluency[g] = fluency_metrics(r, sw ? 0 : 1);
    if (!cell.rollouts.empty()) cell.rollouts[g] = std::move(r);
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
  if (workers == 1 || jobs.size() < 2) {
    for (const Job& j : jobs) run(j);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < jobs.size(); i += workers) run(jobs[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (auto& cell : report.cells) {
    const double n = static_cast<double>(cell.orders.size());
    double sum = 0.0;
    for (double o : cell.orders) sum += o;
    cell.mean_orders = sum / n;
    double sq = 0.0;
    for (double o : cell.orders) sq += (o - cell.mean_orders) * (o - cell.mean_orders);
    cell.sd_orders = cell.orders.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  }
  return report;
}

namespace {

struct FluencyMeans {
  double human_idle = 0, robot_idle = 0, concurrent = 0;
};

FluencyMeans fluency_means(const EvalCell& c) {
  FluencyMeans m;
  for (const auto& f : c.fluency) {
    m.human_idle += Fluency::seconds(f.human_idle);
    m.robot_idle += Fluency::seconds(f.robot_idle);
    m.concurrent += Fluency::seconds(f.concurrent);
  }
  const double n = std::max<double>(1.0, static_cast<double>(c.fluency.size()));
  m.human_idle /= n;
  m.robot_idle /= n;
  m.concurrent /= n;
  return m;
}

const char* seating(bool swapped) { return swapped ? "SwitchInd" : "Standard"; }

}  // namespace

void write_report_csv(std::ostream& out, const EvaluationReport& report, const std::string& config_hash) {
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  out << "layout,agent,partner,seats,games,mean_orders,sd_orders,human_idle_s,robot_idle_s,concurrent_s\n";
  std::ostringstream row;
  row << std::setprecision(6) << std::fixed;
  for (const auto& c : report.cells) {
    const FluencyMeans f = fluency_means(c);
    row << c.layout << ',' << c.agent << ',' << c.partner << ',' << seating(c.swapped) << ',' << c.orders.size()
        << ',' << c.mean_orders << ',' << c.sd_orders << ',' << f.human_idle << ',' << f.robot_idle << ','
        << f.concurrent << '\n';
  }
  out << row.str();
}

void write_report_json(std::ostream& out, const EvaluationReport& report, const std::string& config_hash) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    json fl = json::array();
    for (const auto& f : c.fluency) {
      fl.push_back({{"ticks", f.ticks},
                    {"human_idle", f.human_idle},
                    {"robot_idle", f.robot_idle},
                    {"concurrent", f.concurrent}});
    }
    cells.push_back({{"layout", c.layout},
                     {"agent", c.agent},
                     {"partner", c.partner},
                     {"seats", seating(c.swapped)},
                     {"orders", c.orders},
                     {"mean_orders", c.mean_orders},
                     {"sd_orders", c.sd_orders},
                     {"fluency_ticks", fl}});
  }
  json doc = {{"layout", report.layout},
              {"games", report.games},
              {"episode_len", report.episode_len},
              {"seed", report.seed},
              {"ticks_per_second", kTicksPerSecond},
              {"cells", cells}};
  if (!config_hash.empty()) doc["config_hash"] = config_hash;
  out << doc.dump(1) << '\n';
}

void write_report_table(std::ostream& out, const EvaluationReport& report) {
  std::vector<std::string> partners, agents;
  for (const auto& c : report.cells) {
    if (std::find(partners.begin(), partners.end(), c.partner) == partners.end()) partners.push_back(c.partner);
    if (std::find(agents.begin(), agents.end(), c.agent) == agents.end()) agents.push_back(c.agent);
  }
  out << "Orders served on " << report.layout << " (mean +/- sd over " << report.games << " games, "
      << report.episode_len << " ticks)\n";
  for (const auto& p : partners) {
    out << "\npartner: " << p << '\n';
    out << std::left << std::setw(14) << "agent" << std::setw(18) << "Standard" << "SwitchInd\n";
    for (const auto& a : agents) {
      out << std::left << std::setw(14) << a;
      for (bool sw : {false, true}) {
        const EvalCell* c = report.find(a, p, sw);
        std::ostringstream v;
        if (c) {
          v << std::fixed << std::setprecision(2) << c->mean_orders << " +/- " << c->sd_orders;
        } else {
          v << "-";
        }
        out << std::setw(sw ? 0 : 18) << v.str();
      }
      out << '\n';
    }
  }
}

}  // namespace mesh::harness
