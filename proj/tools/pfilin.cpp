// Command-line front end: run experiments, check invariants, print bound
// diagnostics, write the surrogate reward table.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pfilin/config.hpp"
#include "pfilin/csv.hpp"
#include "pfilin/environments.hpp"
#include "pfilin/estimators.hpp"
#include "pfilin/harness.hpp"
#include "pfilin/pareto.hpp"
#include "pfilin/validation.hpp"

namespace {

using pfilin::ErrorCode;

int report(const pfilin::Error& e) {
  std::string_view prefix = "error";
  int status = 1;
  switch (e.code()) {
    case ErrorCode::kConfigParse:
      prefix = "config-error";
      status = 2;
      break;
    case ErrorCode::kMissingFile:
      prefix = "missing-file";
      status = 3;
      break;
    case ErrorCode::kInvalidParameter:
      prefix = "invalid-parameter";
      status = 4;
      break;
    default:
      break;
  }
  std::cerr << "pfilin: " << prefix << ": " << e.what() << '\n';
  return status;
}

struct RunOptions {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  std::size_t workers = 0;
};

int cmd_run(const RunOptions& o, const CLI::App& sub) {
  pfilin::ExperimentConfig config = pfilin::load_config(o.config);
  if (sub.count("--out")) config.output_dir = o.out;
  if (sub.count("--seed")) config.seed = o.seed;
  if (sub.count("--reps")) config.replications = o.reps;
  if (sub.count("--workers")) config.workers = o.workers;
  const auto files = pfilin::run_experiment(config);
  std::cout << "wrote " << files.size() << " files to " << config.output_dir << '\n';
  return 0;
}

int cmd_validate(const std::string& fixtures, std::uint64_t seed) {
  bool ok = true;
  for (const pfilin::CheckResult& r : pfilin::run_structural_checks(fixtures, seed)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

struct BoundsOptions {
  std::string config;
  std::string theta = "1,-1,-1";
  double sigma = 0.1;
  double epsilon = 0.5;
  double delta = 0.1;
  double gamma_constant = 1.0;
};

int cmd_bounds(const BoundsOptions& o, const CLI::App& sub) {
  pfilin::ExperimentConfig config;
  if (!o.config.empty()) {
    config = pfilin::load_config(o.config);
  } else {
    config.env_kind = "mab";
    config.theta = o.theta;
  }
  if (o.config.empty() || sub.count("--sigma")) config.sigma = o.sigma;
  if (o.config.empty() || sub.count("--gamma-constant")) config.gamma_constant = o.gamma_constant;
  if (!(o.delta > 0.0 && o.delta < 0.25)) {
    throw pfilin::Error(ErrorCode::kInvalidParameter, "the lower bounds need delta in (0, 1/4)");
  }
  if (!(o.epsilon > 0.0)) throw pfilin::Error(ErrorCode::kInvalidParameter, "epsilon must be positive");
  const pfilin::BuiltEnvironment built = pfilin::build_environment(config);
  const pfilin::Matrix& means = built.env->means();
  const pfilin::GapProfile profile = pfilin::gap_profile(means);
  const std::size_t d = built.contexts->dim();
  const std::size_t L = built.env->num_objectives();
  const double sigma = built.sigma;
  const double star = pfilin::min_suboptimal_gap(profile, o.epsilon);
  auto num = [](double v) { return pfilin::csv::format_number(v); };
  std::cout << "arms=" << means.rows() << '\n'
            << "objectives=" << L << '\n'
            << "dim=" << d << '\n'
            << "sigma=" << num(sigma) << '\n'
            << "epsilon=" << num(o.epsilon) << '\n'
            << "delta=" << num(o.delta) << '\n'
            << "pareto_front=" << pfilin::csv::join_arms(profile.front) << '\n';
  std::cout << "gaps=";
  for (Eigen::Index k = 0; k < profile.delta.size(); ++k) std::cout << (k ? ";" : "") << num(profile.delta(k));
  std::cout << '\n'
            << "delta_star_eps=" << num(star) << '\n'
            << "sample_lower_bound=" << num(pfilin::sample_lower_bound(profile, sigma, L, o.delta, o.epsilon, d))
            << '\n'
            << "regret_lower_bound=" << num(pfilin::regret_lower_bound(star, sigma, d, o.delta)) << '\n'
            << "warmup_round=" << pfilin::warmup_round(d, o.delta, config.gamma_constant) << '\n';
  return 0;
}

int cmd_gen_data(const std::string& out, std::uint64_t seed, double spread) {
  pfilin::Rng rng = pfilin::make_stream(seed, 0, pfilin::Stream::kData);
  const pfilin::Matrix rows = pfilin::generate_surrogate_rewards(rng, spread);
  pfilin::csv::Writer w(out, {"reward_0", "reward_1"});
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    w.field(rows(i, 0)).field(rows(i, 1));
    w.end_row();
  }
  std::cout << "wrote " << rows.rows() << " rows to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto front identification for linear bandits"};
  app.require_subcommand(1);

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
  run_cmd->add_option("--config", run.config, "Config file")->required();
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--seed", run.seed, "Base seed");
  run_cmd->add_option("--reps", run.reps, "Replications")->check(CLI::PositiveNumber);
  run_cmd->add_option("--workers", run.workers, "Concurrent replications")->check(CLI::PositiveNumber);

  std::string fixtures = PFILIN_FIXTURES_DIR;
  std::uint64_t validate_seed = 1;
  CLI::App* validate_cmd = app.add_subcommand("validate", "Check structural invariants on the shipped fixtures");
  validate_cmd->add_option("--fixtures", fixtures, "Fixture directory");
  validate_cmd->add_option("--seed", validate_seed, "Seed for random fixtures");

  BoundsOptions bounds;
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "Print lower-bound diagnostics for an instance");
  bounds_cmd->add_option("--config", bounds.config, "Config file describing the environment");
  bounds_cmd->add_option("--theta", bounds.theta, "Per-objective parameter vectors, ';'-separated (bandit means)");
  bounds_cmd->add_option("--sigma", bounds.sigma, "Noise scale");
  bounds_cmd->add_option("--epsilon", bounds.epsilon, "Accuracy");
  bounds_cmd->add_option("--delta", bounds.delta, "Confidence");
  bounds_cmd->add_option("--gamma-constant", bounds.gamma_constant, "Exploration budget constant");

  std::string data_out = "surrogate_rewards.csv";
  std::uint64_t data_seed = 1;
  double spread = 0.15;
  CLI::App* data_cmd = app.add_subcommand("gen-data", "Write the 1024 x 2 surrogate reward table");
  data_cmd->add_option("--out", data_out, "Output CSV");
  data_cmd->add_option("--seed", data_seed, "Seed");
  data_cmd->add_option("--spread", spread, "Within-group standard deviation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run_cmd) return cmd_run(run, *run_cmd);
    if (*validate_cmd) return cmd_validate(fixtures, validate_seed);
    if (*bounds_cmd) return cmd_bounds(bounds, *bounds_cmd);
    if (*data_cmd) return cmd_gen_data(data_out, data_seed, spread);
  } catch (const pfilin::Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "pfilin: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
