// sfcsim: train, evaluate, sweep and verify SFC placement bundles.
//
// Exit codes: 0 success, 1 runtime failure or verification mismatch,
// 2 usage or configuration error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfc/error.hpp"
#include "sfc/policy.hpp"
#include "sfc/scenario.hpp"
#include "sfc/sim.hpp"
#include "sfc/verify_suite.hpp"

namespace fs = std::filesystem;
using namespace sfc;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr const char* kSeedEnv = "SFCSIM_SEED";
constexpr const char* kBundleNames = "RL+RL, RL+H, H+RL, H+H";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* kEvalHeader = "bundle,seeds,mean_profit,std_profit,mean_acceptance,std_acceptance";
const char* kSweepHeader = "axis,value,bundle,seeds,mean_profit,std_profit,mean_acceptance,std_acceptance";

Scenario load(const std::string& scenario_path) {
  if (scenario_path.empty()) return Scenario{default_topology(kDefaultTopologySeed), SimConfig{}};
  if (!fs::exists(scenario_path)) throw ConfigError("scenario file not found: " + scenario_path);
  return load_scenario_file(scenario_path);
}

/// --seed beats SFCSIM_SEED, which beats the scenario file.
std::optional<std::uint64_t> seed_override(const std::optional<std::uint64_t>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string(kSeedEnv) + " must be an unsigned integer");
    }
  }
  return std::nullopt;
}

BundleKind bundle_or_usage(const std::string& name) {
  if (auto k = parse_bundle(name)) return *k;
  throw UsageError("unknown bundle '" + name + "'; valid bundles: " + kBundleNames);
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + file.string() + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + file.string() + "'");
}

void write_resolved(const fs::path& dir, const Scenario& sc) {
  write_text(dir / "resolved_config.json", resolve(sc).dump(2) + "\n");
}

std::string metrics_csv(const std::vector<EpisodeMetrics>& rows) {
  std::string s = std::string(kMetricsHeader) + "\n";
  for (const auto& m : rows) s += metrics_row(m) + "\n";
  return s;
}

std::string summary_fields(const EvaluationSummary& s) {
  return s.bundle + "," + std::to_string(s.seeds) + "," + format_double(s.mean_profit) + "," +
         format_double(s.std_profit) + "," + format_double(s.mean_acceptance) + "," + format_double(s.std_acceptance);
}

AgentBundle make_bundle(BundleKind kind, const Scenario& sc, const std::string& checkpoints) {
  AgentBundle b(kind, sc.graph, sc.sim.context());
  if (kind.path == Role::RL || kind.pattern == Role::RL) {
    if (checkpoints.empty())
      throw CheckpointMissingError("bundle " + bundle_name(kind) + " needs --checkpoints");
    b.load_agents(sc.sim.dqn, checkpoints);
  }
  return b;
}

/// Parses "0.5", "1/3" and comma-separated lists of either.
std::vector<double> parse_values(const std::vector<std::string>& raw) {
  std::vector<double> out;
  for (const std::string& chunk : raw) {
    std::stringstream ss(chunk);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      try {
        std::size_t used = 0;
        double v;
        if (auto slash = item.find('/'); slash != std::string::npos) {
          const double num = std::stod(item.substr(0, slash));
          const std::string den_text = item.substr(slash + 1);
          const double den = std::stod(den_text, &used);
          if (used != den_text.size() || den == 0.0) throw std::invalid_argument(item);
          v = num / den;
        } else {
          v = std::stod(item, &used);
          if (used != item.size()) throw std::invalid_argument(item);
        }
        out.push_back(v);
      } catch (const std::exception&) {
        throw UsageError("cannot parse sweep value '" + item + "'");
      }
    }
  }
  if (out.empty()) throw UsageError("--values must list at least one value");
  return out;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  Scenario sc = load(a.scenario);
  if (auto s = seed_override(a.seed)) sc.sim.seed = *s;
  const fs::path out = a.out;
  fs::create_directories(out);
  write_resolved(out, sc);
  std::vector<EpisodeMetrics> rows;
  auto result = run_training(sc.graph, sc.sim, [&](const EpisodeMetrics& m) {
    rows.push_back(m);
    if ((m.episode + 1) % 50 == 0 || m.episode + 1 == sc.sim.episodes)
      std::fprintf(stderr, "episode %d/%d profit %.1f acceptance %.3f\n", m.episode + 1, sc.sim.episodes,
                   m.total_profit, m.acceptance_ratio());
  });
  write_text(out / "metrics.csv", metrics_csv(rows));
  result.bundle.save_agents(out / "checkpoints");
  std::printf("wrote %s, %s and %zu checkpoints\n", (out / "metrics.csv").string().c_str(),
              (out / "resolved_config.json").string().c_str(), result.bundle.agents().size());
  return 0;
}

struct EvalArgs {
  std::string scenario;
  std::string out;
  std::string bundle;
  std::string checkpoints;
  std::optional<int> seeds;
  std::optional<std::uint64_t> seed;
};

int cmd_eval(const EvalArgs& a) {
  const BundleKind kind = bundle_or_usage(a.bundle);
  Scenario sc = load(a.scenario);
  if (auto s = seed_override(a.seed)) sc.sim.eval_seed_base = *s;
  if (a.seeds) sc.sim.eval_seeds = *a.seeds;
  sc.sim.validate();
  const AgentBundle bundle = make_bundle(kind, sc, a.checkpoints);
  const EvaluationSummary s = run_evaluation(sc.graph, bundle, sc.sim, sc.sim.eval_seeds);
  const fs::path out = a.out;
  fs::create_directories(out);
  write_resolved(out, sc);
  write_text(out / "eval.csv", std::string(kEvalHeader) + "\n" + summary_fields(s) + "\n");
  write_text(out / "metrics.csv", metrics_csv(s.per_seed));
  std::printf("%s\n%s\n", kEvalHeader, summary_fields(s).c_str());
  return 0;
}

struct SweepArgs {
  std::string scenario;
  std::string out;
  std::string axis;
  std::vector<std::string> values;
  std::vector<std::string> bundles;
  std::string checkpoints;
  std::optional<int> seeds;
  std::optional<std::uint64_t> seed;
};

int cmd_sweep(const SweepArgs& a) {
  const std::vector<double> values = parse_values(a.values);
  std::vector<BundleKind> kinds;
  for (const auto& name : a.bundles) kinds.push_back(bundle_or_usage(name));
  if (kinds.empty()) kinds.push_back(a.axis == "gamma" ? kRlRl : kHH);

  Scenario sc = load(a.scenario);
  if (auto s = seed_override(a.seed)) sc.sim.seed = *s;
  if (a.seeds) sc.sim.eval_seeds = *a.seeds;
  sc.sim.validate();
  const fs::path out = a.out;
  fs::create_directories(out);
  write_resolved(out, sc);

  std::string csv = std::string(kSweepHeader) + "\n";
  for (double v : values) {
    Scenario cell = sc;
    std::optional<AgentBundle> trained;
    if (a.axis == "lambda") {
      cell.sim.workload.lambda = v;
    } else {
      cell.sim.dqn.gamma = v;
    }
    cell.sim.validate();
    for (BundleKind kind : kinds) {
      const bool rl = kind.path == Role::RL || kind.pattern == Role::RL;
      AgentBundle bundle(kind, cell.graph, cell.sim.context());
      if (rl && a.axis == "gamma") {
        if (!trained) {
          std::fprintf(stderr, "training gamma=%s\n", format_double(v).c_str());
          trained = run_training(cell.graph, cell.sim).bundle;
        }
        bundle = trained->with_kind(kind);
      } else if (rl) {
        bundle = make_bundle(kind, cell, a.checkpoints);
      }
      const EvaluationSummary s = run_evaluation(cell.graph, bundle, cell.sim, cell.sim.eval_seeds);
      csv += a.axis + "," + format_double(v) + "," + summary_fields(s) + "\n";
      std::fprintf(stderr, "%s=%s %s profit %.1f acceptance %.3f\n", a.axis.c_str(), format_double(v).c_str(),
                   s.bundle.c_str(), s.mean_profit, s.mean_acceptance);
    }
  }
  write_text(out / "sweep.csv", csv);
  std::printf("%s", csv.c_str());
  return 0;
}

int cmd_verify(const std::string& level) {
  const auto results = verify::run_suite(level == "full" ? verify::Level::Full : verify::Level::Fast);
  std::printf("%s", verify::format_table(results).c_str());
  int failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::printf("%d/%zu checks passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed ? kExitFailure : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SFC placement simulator"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train an RL+RL bundle");
  t->add_option("--scenario", train.scenario, "scenario JSON file");
  t->add_option("--out", train.out, "output directory")->required();
  t->add_option("--seed", train.seed, "training seed (overrides " + std::string(kSeedEnv) + " and the scenario)");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate one bundle over independent workload seeds");
  e->add_option("--scenario", eval.scenario, "scenario JSON file");
  e->add_option("--out", eval.out, "output directory")->required();
  e->add_option("--bundle", eval.bundle, std::string("one of ") + kBundleNames)->required();
  e->add_option("--checkpoints", eval.checkpoints, "directory of trained agents");
  e->add_option("--seeds", eval.seeds, "number of evaluation seeds")->check(CLI::PositiveNumber);
  e->add_option("--seed", eval.seed, "base evaluation seed");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "evaluate bundles over a lambda or gamma grid");
  s->add_option("--scenario", sweep.scenario, "scenario JSON file");
  s->add_option("--out", sweep.out, "output directory")->required();
  s->add_option("--axis", sweep.axis, "lambda or gamma")->required()->check(CLI::IsMember({"lambda", "gamma"}));
  s->add_option("--values", sweep.values, "values, comma separated; fractions like 1/3 allowed")->required();
  s->add_option("--bundle", sweep.bundles, "bundle to evaluate (repeatable)");
  s->add_option("--checkpoints", sweep.checkpoints, "trained agents for RL bundles on the lambda axis");
  s->add_option("--seeds", sweep.seeds, "number of evaluation seeds")->check(CLI::PositiveNumber);
  s->add_option("--seed", sweep.seed, "training seed for the gamma axis");

  std::string level = "fast";
  auto* v = app.add_subcommand("verify", "run the oracle checks");
  v->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(eval);
    if (*s) return cmd_sweep(sweep);
    if (*v) return cmd_verify(level);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
