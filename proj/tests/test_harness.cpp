#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "pfilin/config.hpp"
#include "pfilin/csv.hpp"
#include "pfilin/harness.hpp"

namespace pfilin {
namespace {

namespace fs = std::filesystem;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kRankDeficient;  // nothing thrown
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pfilin_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Config, ParsesSectionsAndLists) {
  const ExperimentConfig c = parse_config(R"(
experiment = "pfi-compare"
seed = 7
replications = 12
[environment]
kind = "mab"
theta = "1,0,0.5; 0,1,0.5"
sigma = 0.2
[algorithm]
names = ["pfiwr"]
epsilon = [0.1, 0.2]
delta = 0.05
max_rounds = 5000
)");
  EXPECT_EQ(c.experiment, "pfi-compare");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.replications, 12u);
  EXPECT_EQ(c.theta, "1,0,0.5; 0,1,0.5");
  EXPECT_DOUBLE_EQ(c.sigma, 0.2);
  EXPECT_EQ(c.algorithms, (std::vector<std::string>{"pfiwr"}));
  EXPECT_EQ(c.epsilons, (std::vector<double>{0.1, 0.2}));
  EXPECT_DOUBLE_EQ(c.delta, 0.05);
  EXPECT_EQ(c.max_rounds, 5000u);
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.echo().at("algorithm.epsilon"), "0.1,0.2");
}

TEST(Config, Defaults) {
  const ExperimentConfig c = parse_config("");
  EXPECT_EQ(c.epsilons.size(), 7u);
  EXPECT_DOUBLE_EQ(c.epsilons.front(), 0.06);
  EXPECT_DOUBLE_EQ(c.epsilons.back(), 0.18);
  EXPECT_DOUBLE_EQ(c.delta, 0.1);
  EXPECT_EQ(c.replications, 200u);
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of([] { parse_config("bogus = 1\n"); }), ErrorCode::kConfigParse);
  EXPECT_EQ(code_of([] { parse_config("seed = abc\n"); }), ErrorCode::kConfigParse);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/run.cfg"); }), ErrorCode::kMissingFile);
  EXPECT_EQ(code_of([] { validate(parse_config("replications = 0\n")); }), ErrorCode::kInvalidParameter);
  EXPECT_EQ(code_of([] { validate(parse_config("[algorithm]\nepsilon = [0.1, -0.2]\n")); }),
            ErrorCode::kInvalidParameter);
  EXPECT_EQ(code_of([] { validate(parse_config("[algorithm]\ndelta = 1.0\n")); }), ErrorCode::kInvalidParameter);
  EXPECT_EQ(code_of([] { validate(parse_config("experiment = \"nope\"\n")); }), ErrorCode::kInvalidParameter);
  EXPECT_EQ(code_of([] { validate(parse_config("experiment = \"density\"\n[environment]\nkind = \"clustered\"\n")); }),
            ErrorCode::kInvalidParameter);
}

TEST(Config, Rows) {
  const auto r = parse_rows("1,2; 3,4");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[1][0], 3.0);
  EXPECT_EQ(code_of([] { parse_rows("1,2;3"); }), ErrorCode::kConfigParse);
}

TEST(Stats, MeanSdMedian) {
  EXPECT_DOUBLE_EQ(mean({1, 2, 3, 4}), 2.5);
  EXPECT_NEAR(sample_sd({1, 2, 3, 4}), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_DOUBLE_EQ(sample_sd({3}), 0.0);
  EXPECT_DOUBLE_EQ(median({5, 1, 3}), 3.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
}

ExperimentConfig small_estimator_config(const fs::path& out) {
  ExperimentConfig c;
  c.experiment = "estimator-consistency";
  c.replications = 4;
  c.rounds = 300;
  c.checkpoints = {50, 200, 300};
  c.output_dir = out.string();
  return c;
}

TEST(EstimatorStudy, RidgeFrozenAfterWarmup) {
  ExperimentConfig c = small_estimator_config(scratch("unused"));
  const BuiltEnvironment built = build_environment(c);
  const EstimatorStudy s = run_estimator_study(c, built, {EstimatorKind::kRidge, EstimatorKind::kDrMix});
  ASSERT_EQ(s.unexploited.size(), 2u);
  const Matrix& ridge = s.unexploited[0];
  ASSERT_EQ(ridge.rows(), 4);
  ASSERT_EQ(ridge.cols(), 300);
  for (Eigen::Index r = 0; r < ridge.rows(); ++r) {
    for (Eigen::Index n = 50; n < ridge.cols(); ++n) EXPECT_GE(ridge(r, n), ridge(r, n - 1));
  }
  EXPECT_EQ(s.scaled[0].size(), 3u);
  EXPECT_EQ(s.scaled[0][0].rows(), 4);
  EXPECT_EQ(s.scaled[0][0].cols(), 3);
}

TEST(EstimatorStudy, CsvSchemasAndDeterminism) {
  const fs::path a = scratch("est_a");
  const fs::path b = scratch("est_b");
  run_experiment(small_estimator_config(a));
  run_experiment(small_estimator_config(b));
  for (const char* f : {"consistency_curves.csv", "consistency_checkpoints.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  ma["config"].erase("output");
  mb["config"].erase("output");
  EXPECT_EQ(ma, mb);
  const auto curves = lines_of(a / "consistency_curves.csv");
  EXPECT_EQ(curves.front(), "estimator,n,exploited_mean,exploited_sd,unexploited_mean,unexploited_sd");
  EXPECT_EQ(curves.size(), 1u + 3u * 300u);
  const auto checkpoints = lines_of(a / "consistency_checkpoints.csv");
  EXPECT_EQ(checkpoints.front(), "estimator,replication,n,exploited,unexploited");
  EXPECT_EQ(checkpoints.size(), 1u + 3u * 4u * 3u);

  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest.at("experiment"), "estimator-consistency");
  EXPECT_EQ(manifest.at("config").at("replications"), "4");
}

TEST(EstimatorStudy, DensityRows) {
  const fs::path out = scratch("density");
  ExperimentConfig c = small_estimator_config(out);
  c.experiment = "density";
  run_experiment(c);
  const auto rows = lines_of(out / "density.csv");
  EXPECT_EQ(rows.front(), "estimator,arm,n,replication,value");
  // estimators x arms x checkpoints x replications
  EXPECT_EQ(rows.size(), 1u + 3u * 3u * 3u * 4u);
}

TEST(EstimatorStudy, ImputationVariants) {
  const fs::path out = scratch("imputation");
  ExperimentConfig c = small_estimator_config(out);
  c.experiment = "dr-imputation";
  run_experiment(c);
  const auto rows = lines_of(out / "dr_imputation_checkpoints.csv");
  std::map<std::string, int> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) ++seen[split(rows[i])[0]];
  EXPECT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen["dr-ridge"], 12);
  EXPECT_EQ(seen["dr-mix"], 12);
}

TEST(EstimatorStudy, NoiselessErrorsShrinkUnderUniformPlay) {
  ExperimentConfig c = small_estimator_config(scratch("unused2"));
  c.sigma = 0.0;
  c.warmup = 300;
  const BuiltEnvironment built = build_environment(c);
  const EstimatorStudy s = run_estimator_study(c, built, {EstimatorKind::kDrRidge, EstimatorKind::kDrMix});
  for (const Matrix& err : s.unexploited) {
    EXPECT_LT(err.col(299).mean(), err.col(49).mean());
    EXPECT_LT(err.col(299).maxCoeff(), 0.1);
  }
}

ExperimentConfig small_pfi_config(const fs::path& out) {
  ExperimentConfig c;
  c.experiment = "pfi-compare";
  c.env_kind = "mab";
  c.theta = "1,0,0.4,-0.5; 0,1,0.4,-0.5";
  c.sigma = 0.1;
  c.replications = 4;
  c.epsilons = {0.2, 0.3};
  c.curve_epsilon = 0.2;
  c.max_rounds = 20000;
  c.gamma_constant = 0.1;
  c.round_logs = 1;
  c.output_dir = out.string();
  return c;
}

TEST(PfiStudy, SummariesAggregateAndCurves) {
  const fs::path out = scratch("pfi");
  const ExperimentConfig c = small_pfi_config(out);
  run_experiment(c);

  // aggregate recomputed from the per-replication summaries
  std::map<std::string, std::vector<std::string>> agg;
  const auto agg_rows = lines_of(out / "aggregate.csv");
  EXPECT_EQ(agg_rows.front(),
            "algorithm,epsilon,replications,tau_mean,tau_sd,tau_median,regret_mean,regret_sd,regret_median,"
            "success_rate,completed_rate");
  for (std::size_t i = 1; i < agg_rows.size(); ++i) {
    const auto f = split(agg_rows[i]);
    agg[f[0] + "@" + f[1]] = f;
  }
  EXPECT_EQ(agg.size(), 4u);
  for (const std::string alg : {"pfiwr", "multipfi"}) {
    for (double eps : c.epsilons) {
      const auto rows = lines_of(out / summary_file_name(alg, eps));
      ASSERT_EQ(rows.front(), "seed,tau,success,cum_regret,pareto_out");
      ASSERT_EQ(rows.size(), 5u);
      std::vector<double> tau, regret;
      double success = 0.0;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split(rows[i]);
        ASSERT_EQ(f.size(), 5u);
        EXPECT_EQ(f[0], std::to_string(i - 1));
        tau.push_back(std::stod(f[1]));
        success += std::stod(f[2]);
        regret.push_back(std::stod(f[3]));
      }
      const auto& a = agg.at(alg + "@" + csv::format_number(eps));
      EXPECT_NEAR(std::stod(a[3]), mean(tau), 1e-9);
      EXPECT_NEAR(std::stod(a[4]), sample_sd(tau), 1e-9);
      EXPECT_NEAR(std::stod(a[5]), median(tau), 1e-9);
      EXPECT_NEAR(std::stod(a[6]), mean(regret), 1e-9);
      EXPECT_NEAR(std::stod(a[7]), sample_sd(regret), 1e-9);
      EXPECT_NEAR(std::stod(a[8]), median(regret), 1e-9);
      EXPECT_NEAR(std::stod(a[9]), success / 4.0, 1e-12);
    }
  }

  const auto curve = lines_of(out / "regret_curve_pfiwr.csv");
  EXPECT_EQ(curve.front(), "round,instant_mean,instant_sd,cumulative_mean,cumulative_sd");
  EXPECT_EQ(curve.size(), 1u + c.max_rounds);

  const auto log = lines_of(out / "rounds_pfiwr_eps0.2_rep0.csv");
  EXPECT_EQ(log.front(), "round,phase,i_t,check_arm,action,matched,attempts,regret,n_undetermined,n_accepted");
  for (std::size_t i = 1; i < log.size(); ++i) {
    const auto f = split(log[i]);
    if (f[1] == "explore") EXPECT_EQ(f[3], f[4]);
  }
}

TEST(PfiStudy, CurvesZeroAfterStopping) {
  const fs::path out = scratch("pfi_curves");
  const ExperimentConfig c = small_pfi_config(out);
  const BuiltEnvironment built = build_environment(c);
  const PfiStudy s = run_pfi_study(c, built);
  for (std::size_t a = 0; a < s.algorithms.size(); ++a) {
    std::size_t longest = 0;
    for (const RunSummary& r : s.runs[a][0]) longest = std::max(longest, r.tau);
    const CurveStats& cs = s.curves[a];
    ASSERT_EQ(static_cast<std::size_t>(cs.instant_mean.size()), c.max_rounds);
    for (std::size_t n = longest; n < c.max_rounds; ++n) {
      EXPECT_EQ(cs.instant_mean(static_cast<Eigen::Index>(n)), 0.0);
      EXPECT_EQ(cs.instant_sd(static_cast<Eigen::Index>(n)), 0.0);
    }
    double cum = 0.0;
    for (const RunSummary& r : s.runs[a][0]) cum += r.cumulative_regret;
    EXPECT_NEAR(cs.cumulative_mean(static_cast<Eigen::Index>(c.max_rounds - 1)), cum / 4.0, 1e-9);
  }
}

TEST(PfiStudy, WorkersDoNotChangeOutput) {
  const fs::path a = scratch("pfi_w1");
  const fs::path b = scratch("pfi_w3");
  ExperimentConfig c = small_pfi_config(a);
  run_experiment(c);
  c.output_dir = b.string();
  c.workers = 3;
  run_experiment(c);
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(b / name)) << name;
  }
}

TEST(PfiStudy, BaselineNeedsBanditContexts) {
  ExperimentConfig c = small_pfi_config(scratch("lin"));
  c.env_kind = "linear";
  EXPECT_EQ(code_of([&] { run_experiment(c); }), ErrorCode::kInvalidParameter);
  c.contexts = std::string(PFILIN_FIXTURES_DIR) + "/contexts_d3_k6.csv";
  c.theta = "0.5,-0.3,0.2; -0.1,0.4,0.6";
  EXPECT_EQ(code_of([&] { run_experiment(c); }), ErrorCode::kInvalidParameter);
  c.experiment = "custom";
  EXPECT_EQ(code_of([&] { run_experiment(c); }), ErrorCode::kNotMab);
  c.algorithms = {"pfiwr"};
  c.max_rounds = 2000;
  EXPECT_NO_THROW(run_experiment(c));
}

}  // namespace
}  // namespace pfilin
