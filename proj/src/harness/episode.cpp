#include "ips/harness/episode.hpp"

#include <chrono>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "ips/harness/config.hpp"

namespace ips {

using nlohmann::json;

namespace {

constexpr int kLogVersion = 1;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json action_json(const Action& a) {
  return {{"dx", a.dx}, {"dy", a.dy}, {"dz", a.dz}, {"droll", a.droll}, {"dyaw", a.dyaw}, {"terminate", a.terminate}};
}

Action action_from(const json& j) {
  Action a;
  a.dx = j.at("dx").get<double>();
  a.dy = j.at("dy").get<double>();
  a.dz = j.at("dz").get<double>();
  a.droll = j.at("droll").get<double>();
  a.dyaw = j.at("dyaw").get<double>();
  a.terminate = j.at("terminate").get<bool>();
  return a;
}

StateVector state_from(const json& j) {
  if (!j.is_array() || j.size() != kStateSize) throw std::runtime_error("observation must have 71 entries");
  StateVector s{};
  for (int i = 0; i < kStateSize; ++i) s[i] = j[i].get<double>();
  return s;
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool bits_equal(const StateVector& a, const StateVector& b) {
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

EpisodeRecord run_episode(const EpisodeConfig& cfg, Agent& agent, std::uint64_t seed, Env* env) {
  Env local;
  Env& e = env ? *env : local;
  const auto t_start = std::chrono::steady_clock::now();
  EpisodeRecord rec;
  rec.seed = seed;
  rec.config = cfg;
  rec.config_digest = config_digest(cfg);
  rec.agent = agent.name();
  rec.initial_observation = e.reset(cfg, seed);
  rec.initial_rng_cursor = e.rng_cursor();
  rec.has_target = e.truth().has_value();
  agent.begin_episode(e, seed);

  while (!e.done()) {
    const int t = e.steps() + 1;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const Action a = agent.act(e);
      const auto t1 = std::chrono::steady_clock::now();
      const StepResult r = e.step(a);
      rec.env_time += seconds_since(t1);
      rec.agent_time += std::chrono::duration<double>(t1 - t0).count();
      rec.steps.push_back({t, a, r.reward, r.outcome, r.observation, e.rng_cursor()});
      rec.total_return += r.reward;
      rec.outcome = r.outcome;
    } catch (const ContractViolation& ex) {
      throw ContractViolation("step " + std::to_string(t) + ": " + ex.what());
    }
  }
  rec.wall_time = seconds_since(t_start);
  return rec;
}

void write_jsonl(std::ostream& out, const EpisodeRecord& r) {
  json header = {{"type", "header"},
                 {"version", kLogVersion},
                 {"seed", r.seed},
                 {"config_digest", r.config_digest},
                 {"config", to_json(r.config)},
                 {"agent", r.agent},
                 {"has_target", r.has_target},
                 {"obs", r.initial_observation},
                 {"rng_cursor", r.initial_rng_cursor}};
  out << header.dump() << '\n';
  for (const StepRecord& s : r.steps) {
    json line = {{"type", "step"},
                 {"t", s.t},
                 {"action", action_json(s.action)},
                 {"reward", s.reward},
                 {"outcome", to_string(s.outcome)},
                 {"obs", s.observation},
                 {"rng_cursor", s.rng_cursor}};
    out << line.dump() << '\n';
  }
  json summary = {{"type", "summary"},
                  {"outcome", to_string(r.outcome)},
                  {"steps", r.step_count()},
                  {"return", r.total_return},
                  {"wall_time", r.wall_time},
                  {"agent_time", r.agent_time},
                  {"env_time", r.env_time}};
  out << summary.dump() << '\n';
}

EpisodeRecord read_jsonl(std::istream& in) {
  EpisodeRecord r;
  std::string line;
  bool have_header = false, have_summary = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      if (j.at("version").get<int>() != kLogVersion) throw std::runtime_error("unsupported episode log version");
      r.seed = j.at("seed").get<std::uint64_t>();
      r.config_digest = j.at("config_digest").get<std::string>();
      r.config = episode_config_from_json(j.at("config"));
      r.agent = j.at("agent").get<std::string>();
      r.has_target = j.at("has_target").get<bool>();
      r.initial_observation = state_from(j.at("obs"));
      r.initial_rng_cursor = j.at("rng_cursor").get<std::uint64_t>();
      have_header = true;
    } else if (type == "step") {
      if (!have_header) throw std::runtime_error("episode log step before header");
      StepRecord s;
      s.t = j.at("t").get<int>();
      s.action = action_from(j.at("action"));
      s.reward = j.at("reward").get<double>();
      s.outcome = outcome_from_string(j.at("outcome").get<std::string>());
      s.observation = state_from(j.at("obs"));
      s.rng_cursor = j.at("rng_cursor").get<std::uint64_t>();
      r.total_return += s.reward;
      r.steps.push_back(s);
    } else if (type == "summary") {
      r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
      r.wall_time = j.at("wall_time").get<double>();
      r.agent_time = j.at("agent_time").get<double>();
      r.env_time = j.at("env_time").get<double>();
      have_summary = true;
    } else {
      throw std::runtime_error("unknown episode log line type: " + type);
    }
  }
  if (!have_header || !have_summary) throw std::runtime_error("incomplete episode log");
  return r;
}

ReplayResult replay(const EpisodeRecord& record, const EpisodeConfig& expected) {
  const std::string digest = config_digest(expected);
  if (digest != record.config_digest)
    return {ReplayStatus::Rejected, -1, "config digest " + record.config_digest + " does not match " + digest};

  Env env;
  const StateVector obs = env.reset(expected, record.seed);
  if (!bits_equal(obs, record.initial_observation) || env.rng_cursor() != record.initial_rng_cursor)
    return {ReplayStatus::Mismatch, 0, "reset observation differs"};
  for (const StepRecord& s : record.steps) {
    if (env.done()) return {ReplayStatus::Mismatch, s.t, "episode ended earlier than logged"};
    const StepResult r = env.step(s.action);
    if (!bits_equal(r.reward, s.reward)) return {ReplayStatus::Mismatch, s.t, "reward differs"};
    if (r.outcome != s.outcome) return {ReplayStatus::Mismatch, s.t, "outcome differs"};
    if (!bits_equal(r.observation, s.observation)) return {ReplayStatus::Mismatch, s.t, "observation differs"};
    if (env.rng_cursor() != s.rng_cursor) return {ReplayStatus::Mismatch, s.t, "rng cursor differs"};
  }
  if (!env.done()) return {ReplayStatus::Mismatch, record.step_count(), "episode continues past the log"};
  return {};
}

ReplayResult replay(const EpisodeRecord& record) { return replay(record, record.config); }

}  // namespace ips
