// mesh: command-line front end for demo generation, strategy recognition,
// library training, simulated evaluation, the full pipeline and live play.
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mesh/harness/demos.hpp"
#include "mesh/harness/evaluate.hpp"
#include "mesh/harness/pipeline.hpp"
#include "mesh/learning/library.hpp"
#include "mesh/play/server.hpp"
#include "mesh/recognition/grid_search.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mesh;

namespace {

std::vector<int> parse_range(const std::string& text) {
  // "2-6" or "2,3,5"
  std::vector<int> out;
  const auto dash = text.find('-');
  if (dash != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dash));
    const int hi = std::stoi(text.substr(dash + 1));
    if (lo > hi) throw CLI::ValidationError("range", "empty range " + text);
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) out.push_back(std::stoi(part));
  return out;
}

std::vector<kitchen::Rollout> read_demo_dir(const fs::path& dir, const kitchen::Layout& layout,
                                            std::vector<int>* planted = nullptr) {
  std::ifstream in(dir / "planted.json");
  if (!in) throw std::runtime_error("no planted.json in " + dir.string());
  const json index = json::parse(in);
  std::vector<kitchen::Rollout> out;
  for (const auto& t : index.at("teams")) {
    std::ifstream log(dir / "demos" / (t.at("team_id").get<std::string>() + ".log"));
    if (!log) throw std::runtime_error("missing trajectory log for " + t.at("team_id").get<std::string>());
    out.push_back(kitchen::read_trajectory_log(log, layout));
    if (planted) planted->push_back(t.at("strategy").get<int>());
  }
  return out;
}

std::shared_ptr<learning::PolicyLibrary> load_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read library " + path);
  return std::make_shared<learning::PolicyLibrary>(learning::read_library(in));
}

play::PlayServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mesh: strategy recognition, policy libraries and adaptive teammates for a cooperative kitchen"};
  app.require_subcommand(1);

  // generate-demos
  auto* gen = app.add_subcommand("generate-demos", "Roll out scripted teams with planted strategies");
  std::string gen_layout = "cramped_room", gen_out = "demos_out";
  std::vector<std::string> gen_strats = {"role_specialist", "counter_relay", "soup_handoff"};
  std::size_t gen_teams = 15, gen_len = 150;
  std::uint64_t gen_seed = 1;
  gen->add_option("--layout", gen_layout, "Kitchen layout")->capture_default_str();
  gen->add_option("--strategies", gen_strats, "Scripted strategies")->delimiter(',')->capture_default_str();
  gen->add_option("--teams", gen_teams, "Teams per strategy")->capture_default_str();
  gen->add_option("--len", gen_len, "Episode length in ticks")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  // recognize
  auto* rec = app.add_subcommand("recognize", "Fit HMMs and cluster teams into strategies");
  std::string rec_dataset, rec_out = "recognition.json", rec_n = "2-6", rec_k = "2-5";
  std::uint64_t rec_seed = 1;
  rec->add_option("--dataset", rec_dataset, "Subtask dataset (dataset.jsonl)")->required();
  rec->add_option("--n", rec_n, "Hidden state counts, e.g. 2-6")->capture_default_str();
  rec->add_option("--k", rec_k, "Cluster counts, e.g. 2-5")->capture_default_str();
  rec->add_option("--seed", rec_seed, "Seed")->capture_default_str();
  rec->add_option("--out", rec_out, "Model file")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train the strategy policy library");
  std::string tr_layout = "cramped_room", tr_demos, tr_model, tr_out = "library.json";
  bool tr_planted = false;
  std::size_t tr_budget = 2000;
  int tr_irl_iters = 300;
  std::uint64_t tr_seed = 1;
  train->add_option("--layout", tr_layout, "Kitchen layout")->capture_default_str();
  train->add_option("--demos", tr_demos, "Directory written by generate-demos")->required();
  train->add_option("--model", tr_model, "Recognition model; clusters become strategies");
  train->add_flag("--planted", tr_planted, "Use the planted strategies instead of a recognition model");
  train->add_option("--budget", tr_budget, "Training episodes per policy")->capture_default_str();
  train->add_option("--irl-iters", tr_irl_iters, "IRL iterations")->capture_default_str();
  train->add_option("--seed", tr_seed, "Seed")->capture_default_str();
  train->add_option("--out", tr_out, "Library file")->capture_default_str();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Simulated games of mesh, baseline and fixed agents");
  std::string ev_library, ev_layout = "cramped_room", ev_csv, ev_json, ev_seats = "both";
  std::vector<std::string> ev_partners = {"bc-aggregate"};
  int ev_games = 25;
  std::size_t ev_len = 400;
  std::uint64_t ev_seed = 1;
  double ev_gamma = 0.9;
  ev->add_option("--library", ev_library, "Library file")->required();
  ev->add_option("--layout", ev_layout, "Kitchen layout")->capture_default_str();
  ev->add_option("--partners", ev_partners,
                 "Partners: bc-aggregate, bc-<k>, policy-<k>, scripted-<strategy>")
      ->delimiter(',')
      ->capture_default_str();
  ev->add_option("--games", ev_games, "Games per cell")->capture_default_str();
  ev->add_option("--len", ev_len, "Episode length")->capture_default_str();
  ev->add_option("--seed", ev_seed, "Seed")->capture_default_str();
  ev->add_option("--gamma", ev_gamma, "Disagreement discount of the mesh agent")->capture_default_str();
  ev->add_option("--seats", ev_seats, "standard, switched or both")
      ->check(CLI::IsMember({"standard", "switched", "both"}))
      ->capture_default_str();
  ev->add_option("--csv", ev_csv, "Write the report table as CSV");
  ev->add_option("--json", ev_json, "Write the full report as JSON");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "generate -> recognize -> train -> evaluate");
  std::string pipe_config, pipe_out = "artifacts";
  bool pipe_force = false, pipe_print = false;
  pipe->add_option("--config", pipe_config, "Config file (JSON); defaults apply to missing keys");
  pipe->add_option("--out", pipe_out, "Artifacts directory")->capture_default_str();
  pipe->add_flag("--force", pipe_force, "Discard a previous run in the directory");
  pipe->add_flag("--print-default-config", pipe_print, "Print the default config and exit");

  // play-server
  auto* srv = app.add_subcommand("play-server", "Websocket server for live rounds");
  std::vector<std::string> srv_libs;
  std::string srv_address = "127.0.0.1";
  unsigned short srv_port = 8765;
  int srv_ticks = play::kRoundTicks;
  bool srv_beliefs = false;
  std::uint64_t srv_seed = 0;
  srv->add_option("--library", srv_libs, "Library file; repeat for several layouts")->required();
  srv->add_option("--address", srv_address, "Listen address")->capture_default_str();
  srv->add_option("--port", srv_port, "Listen port")->capture_default_str();
  srv->add_option("--ticks", srv_ticks, "Ticks per round")->check(CLI::Range(1, play::kRoundTicks))->capture_default_str();
  srv->add_flag("--beliefs", srv_beliefs, "Include mesh belief weights in state frames");
  srv->add_option("--seed", srv_seed, "Default session seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto layout = kitchen::builtin_layout(gen_layout);
      std::vector<harness::ScriptedStrategy> strategies;
      for (const auto& n : gen_strats) strategies.push_back(harness::builtin_strategy(n));
      const auto demos = harness::generate_demos(layout, strategies, gen_teams, gen_len, gen_seed);
      fs::create_directories(fs::path(gen_out) / "demos");
      json teams = json::array();
      for (std::size_t i = 0; i < demos.rollouts.size(); ++i) {
        std::ofstream out(fs::path(gen_out) / "demos" / (demos.rollouts[i].team_id + ".log"));
        kitchen::write_trajectory_log(out, layout, demos.rollouts[i]);
        teams.push_back({{"team_id", demos.rollouts[i].team_id}, {"strategy", demos.planted[i]}});
      }
      std::ofstream(fs::path(gen_out) / "planted.json")
          << json{{"layout", gen_layout}, {"strategies", demos.strategy_names}, {"teams", teams}}.dump(1) << '\n';
      std::ofstream ds(fs::path(gen_out) / "dataset.jsonl");
      recognition::write_dataset(ds, harness::annotate_all(layout, demos));
      std::cout << "wrote " << demos.rollouts.size() << " teams to " << gen_out << '\n';
    } else if (*rec) {
      std::ifstream in(rec_dataset);
      if (!in) throw std::runtime_error("cannot read " + rec_dataset);
      const auto dataset = recognition::read_dataset(in);
      recognition::RecognitionModel model;
      model.seed = rec_seed;
      model.n_range = parse_range(rec_n);
      model.k_range = parse_range(rec_k);
      model.result = recognition::grid_search(dataset, std::set<int>(model.n_range.begin(), model.n_range.end()),
                                              std::set<int>(model.k_range.begin(), model.k_range.end()), rec_seed);
      std::ofstream out(rec_out);
      recognition::write_model(out, model);
      const auto& a = model.result.assignment;
      std::cout << "K = " << a.k << ", N = " << a.chosen_n << ", silhouette = " << a.silhouette << " -> " << rec_out
                << '\n';
    } else if (*train) {
      const auto layout = kitchen::builtin_layout(tr_layout);
      std::vector<int> planted;
      const auto rollouts = read_demo_dir(tr_demos, layout, &planted);
      recognition::StrategyAssignment labels;
      if (tr_planted) {
        labels.k = *std::max_element(planted.begin(), planted.end()) + 1;
        for (std::size_t i = 0; i < rollouts.size(); ++i) labels.labels[rollouts[i].team_id] = planted[i];
      } else {
        if (tr_model.empty()) throw std::runtime_error("train needs --model or --planted");
        std::ifstream in(tr_model);
        if (!in) throw std::runtime_error("cannot read " + tr_model);
        labels = recognition::read_model(in).result.assignment;
      }
      std::vector<kitchen::Rollout> used;
      for (const auto& r : rollouts) {
        if (labels.labels.contains(r.team_id)) used.push_back(r);
      }
      learning::TrainOptions opts;
      opts.optimize.budget = tr_budget;
      opts.irl.iters = tr_irl_iters;
      const auto lib = learning::train_library(used, labels, layout, tr_seed, opts);
      std::ofstream out(tr_out);
      learning::write_library(out, lib);
      std::cout << "trained " << lib.k() << " strategy policies and the baseline -> " << tr_out << '\n';
    } else if (*ev) {
      const auto layout = kitchen::builtin_layout(ev_layout);
      const auto lib = load_library(ev_library);
      harness::EvaluationRequest req;
      req.agents = {harness::AgentSpec::mesh(), harness::AgentSpec::baseline()};
      for (int k = 0; k < lib->k(); ++k) req.agents.push_back(harness::AgentSpec::fixed(k));
      for (const auto& p : ev_partners) {
        if (p == "bc-aggregate") {
          req.partners.push_back(harness::PartnerSpec::aggregate_bc());
        } else if (p.rfind("bc-", 0) == 0) {
          req.partners.push_back(harness::PartnerSpec::strategy_bc(std::stoi(p.substr(3))));
        } else if (p.rfind("policy-", 0) == 0) {
          req.partners.push_back(harness::PartnerSpec::fixed_policy(std::stoi(p.substr(7))));
        } else if (p.rfind("scripted-", 0) == 0) {
          req.partners.push_back(harness::PartnerSpec::scripted_strategy(harness::builtin_strategy(p.substr(9))));
        } else {
          throw std::runtime_error("unknown partner '" + p + "'");
        }
      }
      req.swapped = ev_seats == "standard" ? std::vector<bool>{false}
                    : ev_seats == "switched" ? std::vector<bool>{true}
                                             : std::vector<bool>{false, true};
      req.games = ev_games;
      req.episode_len = ev_len;
      req.seed = ev_seed;
      moe::MoeConfig cfg;
      cfg.gamma = ev_gamma;
      const auto report = harness::evaluate(lib, layout, req, cfg);
      harness::write_report_table(std::cout, report);
      if (!ev_csv.empty()) {
        std::ofstream out(ev_csv);
        harness::write_report_csv(out, report);
      }
      if (!ev_json.empty()) {
        std::ofstream out(ev_json);
        harness::write_report_json(out, report);
      }
    } else if (*pipe) {
      harness::PipelineConfig config;
      if (pipe_print) {
        std::cout << json::parse(config.to_json()).dump(2) << '\n';
        return 0;
      }
      if (!pipe_config.empty()) {
        std::ifstream in(pipe_config);
        if (!in) throw std::runtime_error("cannot read " + pipe_config);
        std::stringstream ss;
        ss << in.rdbuf();
        config = harness::PipelineConfig::from_json(ss.str());
      }
      harness::PipelineOptions opts;
      opts.force = pipe_force;
      opts.log = &std::cerr;
      const auto summary = harness::run_pipeline(config, pipe_out, opts);
      harness::write_report_table(std::cout, summary.report);
      std::cout << "\nconfig hash " << summary.config_hash << "; recognized K = " << summary.recognized_k
                << " (N = " << summary.chosen_n << ", ARI vs planted " << summary.ari_vs_planted << ")\n";
    } else if (*srv) {
      std::map<std::string, std::shared_ptr<const learning::PolicyLibrary>> libs;
      for (const auto& path : srv_libs) {
        auto lib = load_library(path);
        libs[lib->layout] = lib;
        std::cerr << "loaded " << path << " for " << lib->layout << '\n';
      }
      play::SessionOptions so;
      so.ticks = srv_ticks;
      so.show_beliefs = srv_beliefs;
      auto sessions = std::make_shared<play::SessionManager>(
          [libs](const std::string& layout) -> std::shared_ptr<const learning::PolicyLibrary> {
            const auto it = libs.find(layout);
            return it == libs.end() ? nullptr : it->second;
          },
          so);
      play::PlayServer server(sessions, {srv_address, srv_port, srv_seed});
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on ws://" << srv_address << ':' << server.port() << '\n';
      server.run();
      g_server = nullptr;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
