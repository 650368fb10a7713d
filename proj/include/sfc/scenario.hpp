#pragma once

// Scenario files: one JSON document with topology, workload, constraints,
// dqn and sim sections. Missing keys take the library defaults; unknown
// keys are rejected. resolve() materializes every value (including the
// topology, inlined) so the snapshot alone reproduces a run.
//
// Topology forms:
//   {"generated": {"seed": 11, "cores": 32}}
//   {"file": "topo.json"}            relative to the scenario file
//   {"nodes": [...], "links": [...]} inline

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sfc/error.hpp"
#include "sfc/network.hpp"
#include "sfc/sim.hpp"

namespace sfc {

struct Scenario {
  NetworkGraph graph;
  SimConfig sim;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& section, std::set<std::string> known) {
  if (!obj.is_object()) throw ConfigError("'" + section + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!known.count(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("'" + section + "." + key + "' has the wrong type");
  }
}

inline NetworkGraph topology_section(const nlohmann::json& t, const std::filesystem::path& base_dir) {
  if (t.contains("generated")) {
    reject_unknown(t, "topology", {"generated"});
    const auto& gen = t.at("generated");
    reject_unknown(gen, "topology.generated", {"seed", "cores"});
    std::uint64_t seed = kDefaultTopologySeed;
    int cores = 32;
    read(gen, "seed", seed, "topology.generated");
    read(gen, "cores", cores, "topology.generated");
    return default_topology(seed, cores);
  }
  if (t.contains("file")) {
    reject_unknown(t, "topology", {"file"});
    std::string file;
    read(t, "file", file, "topology");
    std::filesystem::path p = file;
    if (p.is_relative()) p = base_dir / p;
    return load_topology_file(p.string());
  }
  reject_unknown(t, "topology", {"nodes", "links"});
  return topology_from_json(t);
}

}  // namespace detail

/// Builds a scenario from a parsed document. `base_dir` anchors relative
/// topology file references.
inline Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".") {
  using detail::read;
  detail::reject_unknown(doc, "scenario", {"topology", "workload", "constraints", "dqn", "sim"});
  NetworkGraph graph = doc.contains("topology") ? detail::topology_section(doc.at("topology"), base_dir)
                                                : default_topology(kDefaultTopologySeed);
  SimConfig s;
  if (doc.contains("workload")) {
    const auto& w = doc.at("workload");
    const std::string sec = "workload";
    detail::reject_unknown(w, sec,
                           {"lambda", "mu", "bandwidth_menu", "min_vnfs", "max_vnfs", "min_base_cores", "max_base_cores",
                            "reliability_menu", "delay_menu_ms", "min_workload_cycles", "max_workload_cycles",
                            "flag_probability"});
    read(w, "lambda", s.workload.lambda, sec);
    read(w, "mu", s.workload.mu, sec);
    read(w, "bandwidth_menu", s.workload.bandwidth_menu, sec);
    read(w, "min_vnfs", s.workload.min_vnfs, sec);
    read(w, "max_vnfs", s.workload.max_vnfs, sec);
    read(w, "min_base_cores", s.workload.min_base_cores, sec);
    read(w, "max_base_cores", s.workload.max_base_cores, sec);
    read(w, "reliability_menu", s.workload.reliability_menu, sec);
    read(w, "delay_menu_ms", s.workload.delay_menu_ms, sec);
    read(w, "min_workload_cycles", s.workload.min_workload_cycles, sec);
    read(w, "max_workload_cycles", s.workload.max_workload_cycles, sec);
    read(w, "flag_probability", s.workload.flag_probability, sec);
  }
  if (doc.contains("constraints")) {
    const auto& c = doc.at("constraints");
    detail::reject_unknown(c, "constraints", {"tau", "theta", "budget_factor"});
    read(c, "tau", s.params.tau, "constraints");
    read(c, "theta", s.params.theta, "constraints");
    read(c, "budget_factor", s.params.budget_factor, "constraints");
  }
  if (doc.contains("dqn")) {
    const auto& d = doc.at("dqn");
    const std::string sec = "dqn";
    detail::reject_unknown(d, sec,
                           {"learning_rate", "gamma", "update_period", "target_sync_period", "batch_size", "warmup",
                            "replay_capacity", "hidden_width", "hidden_layers", "epsilon_start", "epsilon_end",
                            "epsilon_decay_episodes", "reward_scale", "seed"});
    read(d, "learning_rate", s.dqn.learning_rate, sec);
    read(d, "gamma", s.dqn.gamma, sec);
    read(d, "update_period", s.dqn.update_period, sec);
    read(d, "target_sync_period", s.dqn.target_sync_period, sec);
    read(d, "batch_size", s.dqn.batch_size, sec);
    read(d, "warmup", s.dqn.warmup, sec);
    read(d, "replay_capacity", s.dqn.replay_capacity, sec);
    read(d, "hidden_width", s.dqn.hidden_width, sec);
    read(d, "hidden_layers", s.dqn.hidden_layers, sec);
    read(d, "epsilon_start", s.dqn.epsilon_start, sec);
    read(d, "epsilon_end", s.dqn.epsilon_end, sec);
    read(d, "epsilon_decay_episodes", s.dqn.epsilon_decay_episodes, sec);
    read(d, "reward_scale", s.dqn.reward_scale, sec);
    read(d, "seed", s.dqn.seed, sec);
  }
  if (doc.contains("sim")) {
    const auto& m = doc.at("sim");
    const std::string sec = "sim";
    detail::reject_unknown(m, sec, {"horizon", "episodes", "k_paths", "seed", "eval_seed_base", "eval_seeds", "audit", "masking"});
    read(m, "horizon", s.horizon, sec);
    read(m, "episodes", s.episodes, sec);
    read(m, "k_paths", s.k_paths, sec);
    read(m, "seed", s.seed, sec);
    read(m, "eval_seed_base", s.eval_seed_base, sec);
    read(m, "eval_seeds", s.eval_seeds, sec);
    read(m, "audit", s.audit, sec);
    if (m.contains("masking")) {
      std::string name;
      read(m, "masking", name, sec);
      const auto parsed = parse_masking(name);
      if (!parsed) throw ConfigError("sim.masking must be \"structural\" or \"feasible\"");
      s.masking = *parsed;
    }
  }
  s.validate();
  return Scenario{std::move(graph), s};
}

inline Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = ".") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  return scenario_from_json(doc, base_dir);
}

/// Throws ConfigError naming the path when the file cannot be opened.
inline Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

/// Every setting, topology inlined.
inline nlohmann::json resolve(const Scenario& sc) {
  const SimConfig& s = sc.sim;
  nlohmann::json doc;
  doc["topology"] = topology_to_json(sc.graph);
  const WorkloadConfig& w = s.workload;
  doc["workload"] = {{"lambda", w.lambda},
                     {"mu", w.mu},
                     {"bandwidth_menu", w.bandwidth_menu},
                     {"min_vnfs", w.min_vnfs},
                     {"max_vnfs", w.max_vnfs},
                     {"min_base_cores", w.min_base_cores},
                     {"max_base_cores", w.max_base_cores},
                     {"reliability_menu", w.reliability_menu},
                     {"delay_menu_ms", w.delay_menu_ms},
                     {"min_workload_cycles", w.min_workload_cycles},
                     {"max_workload_cycles", w.max_workload_cycles},
                     {"flag_probability", w.flag_probability}};
  doc["constraints"] = {{"tau", s.params.tau}, {"theta", s.params.theta}, {"budget_factor", s.params.budget_factor}};
  const DqnConfig& d = s.dqn;
  doc["dqn"] = {{"learning_rate", d.learning_rate},
                {"gamma", d.gamma},
                {"update_period", d.update_period},
                {"target_sync_period", d.target_sync_period},
                {"batch_size", d.batch_size},
                {"warmup", d.warmup},
                {"replay_capacity", d.replay_capacity},
                {"hidden_width", d.hidden_width},
                {"hidden_layers", d.hidden_layers},
                {"epsilon_start", d.epsilon_start},
                {"epsilon_end", d.epsilon_end},
                {"epsilon_decay_episodes", d.epsilon_decay_episodes},
                {"reward_scale", d.reward_scale},
                {"seed", d.seed}};
  doc["sim"] = {{"horizon", s.horizon},         {"episodes", s.episodes},   {"k_paths", s.k_paths},
                {"seed", s.seed},               {"eval_seed_base", s.eval_seed_base},
                {"eval_seeds", s.eval_seeds},   {"audit", s.audit},
                {"masking", to_string(s.masking)}};
  return doc;
}

}  // namespace sfc
