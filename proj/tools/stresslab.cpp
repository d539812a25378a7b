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

// stresslab: simulate, serve or analyze stress-game experiments.
//
// Usage:
//   stresslab simulate [--seed N] [--config FILE] [--out DIR] [--participants N]
//                      [--transcript FILE] [--keywords FILE]
//   stresslab serve    [--bind HOST:PORT] [--time-scale X] [--seed N] [--config FILE]
//                      [--out DIR] [--plan FILE] [--transcript FILE]
//   stresslab analyze  REC.mrec... [--out DIR] [--stats-mode literal|corrected]
//                      [--plots] [--format json|ndjson] [--config FILE]
//   stresslab manual   [--out FILE]
//
// Data goes to files only; progress and errors go to stderr. Exit status is 0
// on success, 1 on any error, 2 on bad usage.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stresslab/experiment.hpp"
#include "stresslab/game/manual.hpp"
#include "stresslab/gateway/serve.hpp"

namespace {

using namespace stresslab;
namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int participants = 0;
  std::string transcript;
  std::string keywords;
  std::string stats_mode;
  bool plots = false;
  std::string format;
  std::string bind;
  double time_scale = 0.0;
  std::string plan;
  std::vector<std::string> recordings;
  std::string manual_out = "manual.md";
};

// Config file first, then any flag given on the command line.
experiment::RunConfig resolve(const Flags& f, const CLI::App& cmd) {
  experiment::RunConfig cfg;
  if (!f.config.empty()) experiment::load_config(cfg, f.config);
  auto given = [&](const char* name) {
    const auto* opt = cmd.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--out")) cfg.out_dir = f.out;
  if (given("--participants")) cfg.participants = f.participants;
  if (given("--transcript")) cfg.transcript = fs::path(f.transcript);
  if (given("--keywords")) cfg.keywords = fs::path(f.keywords);
  if (given("--stats-mode")) cfg.stats_mode = experiment::parse_stats_mode(f.stats_mode);
  if (given("--plots")) cfg.plots = true;
  if (given("--format")) cfg.ndjson_report = f.format == "ndjson";
  if (given("--bind")) cfg.bind = f.bind;
  if (given("--time-scale")) cfg.time_scale = f.time_scale;
  return cfg;
}

int run_simulate(const Flags& f, const CLI::App& cmd) {
  const auto cfg = resolve(f, cmd);
  const auto out = experiment::cmd_simulate(cfg);
  for (const auto& p : out.recordings) std::cerr << "wrote " << p.string() << "\n";
  for (const auto& p : out.plans) std::cerr << "wrote " << p.string() << "\n";
  return 0;
}

int run_analyze(const Flags& f, const CLI::App& cmd) {
  const auto cfg = resolve(f, cmd);
  std::vector<fs::path> paths(f.recordings.begin(), f.recordings.end());
  const auto out = experiment::cmd_analyze(paths, cfg);
  std::cerr << "wrote " << out.report_path.string() << "\n";
  for (const auto& p : out.plots) std::cerr << "wrote " << p.string() << "\n";
  for (const auto& c : out.report.comparisons)
    if (!c.corrected) std::cerr << "notice: " << c.name << " " << c.notice << "\n";
  return 0;
}

int run_serve(const Flags& f, const CLI::App& cmd) {
  auto cfg = resolve(f, cmd);
  cfg.participants = 1;
  std::optional<session::ExperimentPlan> plan;
  if (!f.plan.empty()) {
    auto plans = session::load_plans(f.plan);
    if (plans.empty()) fail(Errc::BadPlan, "plan file '" + f.plan + "' is empty");
    plan = plans.front();
  }
  gateway::Server server(cfg.bind);
  std::cerr << "listening on port " << server.port() << "\n";
  const auto res = gateway::serve_participant(server, cfg, plan ? &*plan : nullptr);
  server.shutdown("experiment_complete");
  for (const auto& p : res.files.recordings) std::cerr << "wrote " << p.string() << "\n";
  for (const auto& p : res.files.plans) std::cerr << "wrote " << p.string() << "\n";
  if (res.log.aborted) {
    std::cerr << "stresslab: defuser disconnected; run stopped early\n";
    return 1;
  }
  return 0;
}

int run_manual(const Flags& f) {
  experiment::write_text(f.manual_out, game::render_manual());
  std::cerr << "wrote " << f.manual_out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stress-game experiment toolkit"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* c) {
    c->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
    c->add_option("--seed", f.seed, "master seed");
    c->add_option("--out", f.out, "output directory");
  };

  auto* sim = app.add_subcommand("simulate", "run simulated participants and write .mrec recordings");
  common(sim);
  sim->add_option("--participants", f.participants, "number of participants");
  sim->add_option("--transcript", f.transcript, "transcript file to replay as captions")->check(CLI::ExistingFile);
  sim->add_option("--keywords", f.keywords, "keyword dictionary, one word per line")->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "run one participant live over the WebSocket gateway");
  common(serve);
  serve->add_option("--bind", f.bind, "listen address host:port");
  serve->add_option("--time-scale", f.time_scale, "experiment seconds per real second");
  serve->add_option("--plan", f.plan, "plan file (first plan is used)")->check(CLI::ExistingFile);
  serve->add_option("--transcript", f.transcript, "transcript file to replay as captions")->check(CLI::ExistingFile);
  serve->add_option("--keywords", f.keywords, "keyword dictionary, one word per line")->check(CLI::ExistingFile);

  auto* analyze = app.add_subcommand("analyze", "segment recordings, compute HR/HRV, compare conditions");
  analyze->add_option("recordings", f.recordings, "recordings to pool")->required()->check(CLI::ExistingFile);
  analyze->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
  analyze->add_option("--out", f.out, "output directory");
  analyze->add_option("--stats-mode", f.stats_mode, "standard error formula")
      ->check(CLI::IsMember({"literal", "corrected"}));
  analyze->add_flag("--plots", f.plots, "write SVG plots");
  analyze->add_option("--format", f.format, "report format")->check(CLI::IsMember({"json", "ndjson"}));

  auto* manual = app.add_subcommand("manual", "export the defusal manual as markdown");
  manual->add_option("--out", f.manual_out, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*sim) return run_simulate(f, *sim);
    if (*serve) return run_serve(f, *serve);
    if (*analyze) return run_analyze(f, *analyze);
    if (*manual) return run_manual(f);
  } catch (const Error& e) {
    std::cerr << "stresslab: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "stresslab: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
