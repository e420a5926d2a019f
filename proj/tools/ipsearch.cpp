#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ips/agents/ppo.hpp"
#include "ips/harness/config.hpp"
#include "ips/harness/episode.hpp"
#include "ips/harness/evaluate.hpp"

namespace {

ips::EpisodeConfig resolve_config(const std::string& config_path, const std::string& scene) {
  if (!config_path.empty()) return ips::load_config(config_path);
  return ips::preset(scene);
}

int run_train(const std::string& config_path, const std::string& scene, std::size_t steps, std::uint64_t seed,
              const std::string& checkpoint, const std::string& metrics) {
  ips::TrainConfig tc;
  tc.env = resolve_config(config_path, scene);
  tc.total_steps = steps;
  tc.seed = seed;
  tc.checkpoint_path = checkpoint;
  tc.metrics_path = metrics;
  ips::train_ppo(tc, [](const ips::IterationStats& s) {
    std::printf("iter %3d  steps %8zu  episodes %4d  return %8.2f  success %.3f  entropy %.3f  clip %.3f\n",
                s.iteration, s.env_steps, s.episodes, s.mean_return, s.success_rate, s.entropy, s.clip_fraction);
    std::fflush(stdout);
  });
  return 0;
}

int run_eval(const std::string& agent_name, const std::string& config_path, const std::string& scene, int episodes,
             std::uint64_t seed, int workers, const std::string& checkpoint, const std::string& json_path,
             const std::string& log_dir) {
  const ips::EpisodeConfig cfg = resolve_config(config_path, scene);
  const auto agent = ips::make_agent(agent_name, checkpoint);
  const ips::EvaluationResult res = ips::evaluate(cfg, *agent, episodes, seed, workers);
  std::cout << res.report.table();
  const std::string text = res.report.to_json().dump(2);
  if (json_path.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream(json_path) << text << '\n';
  }
  if (!log_dir.empty()) {
    std::filesystem::create_directories(log_dir);
    for (const ips::EpisodeRecord& r : res.records) {
      std::ofstream out(std::filesystem::path(log_dir) / ("episode_" + std::to_string(r.seed) + ".jsonl"));
      ips::write_jsonl(out, r);
    }
  }
  return 0;
}

int run_replay(const std::string& log, const std::string& config_path) {
  std::ifstream in(log);
  if (!in) throw std::runtime_error("cannot open " + log);
  const ips::EpisodeRecord rec = ips::read_jsonl(in);
  const ips::ReplayResult r = config_path.empty() ? ips::replay(rec) : ips::replay(rec, ips::load_config(config_path));
  switch (r.status) {
    case ips::ReplayStatus::Pass:
      std::printf("PASS  %d steps reproduced\n", rec.step_count());
      return 0;
    case ips::ReplayStatus::Mismatch:
      std::printf("FAIL  first divergent step %d: %s\n", r.first_divergent_step, r.message.c_str());
      return 1;
    case ips::ReplayStatus::Rejected:
      std::printf("REJECTED  %s\n", r.message.c_str());
      return 2;
  }
  return 1;
}

int run_gen_config(const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const std::string& name : ips::preset_names()) {
    const auto path = std::filesystem::path(out_dir) / (name + ".json");
    ips::save_config(path.string(), ips::preset(name));
    std::printf("%s\n", path.string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive perception search: training, evaluation and replay"};
  app.require_subcommand(1);

  std::string config_path, scene = "active", checkpoint, metrics, agent = "gnbv", json_path, log_dir, log,
                           out_dir = "configs";
  std::size_t steps = 300000;
  std::uint64_t seed = 1;
  int episodes = 200, workers = 1;

  auto* train = app.add_subcommand("train", "train the PPO policy");
  train->add_option("--config", config_path, "episode config JSON");
  train->add_option("--scene", scene, "preset when no config is given")->check(CLI::IsMember(ips::preset_names()));
  train->add_option("--steps", steps, "total environment steps");
  train->add_option("--seed", seed);
  train->add_option("--checkpoint", checkpoint, "policy checkpoint output");
  train->add_option("--metrics", metrics, "metrics CSV output");

  auto* eval = app.add_subcommand("eval", "evaluate an agent over seeded episodes");
  eval->add_option("--agent", agent)->check(CLI::IsMember({"ppo", "gnbv", "ges", "random"}));
  eval->add_option("--config", config_path, "episode config JSON");
  eval->add_option("--scene", scene, "preset when no config is given")->check(CLI::IsMember(ips::preset_names()));
  eval->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed, "first episode seed");
  eval->add_option("--workers", workers)->check(CLI::PositiveNumber);
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint for --agent ppo");
  eval->add_option("--json", json_path, "write the report JSON here instead of stdout");
  eval->add_option("--log-dir", log_dir, "write one JSONL episode log per seed");

  auto* rep = app.add_subcommand("replay", "re-simulate an episode log bit for bit");
  rep->add_option("log", log, "JSONL episode log")->required();
  rep->add_option("--config", config_path, "reject the log unless it was produced with this config");

  auto* gen = app.add_subcommand("gen-config", "write the preset configs");
  gen->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return run_train(config_path, scene, steps, seed, checkpoint, metrics);
    if (*eval) return run_eval(agent, config_path, scene, episodes, seed, workers, checkpoint, json_path, log_dir);
    if (*rep) return run_replay(log, config_path);
    if (*gen) return run_gen_config(out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
