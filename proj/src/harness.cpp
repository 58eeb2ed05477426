#include "pfilin/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include <json.hpp>

#include "pfilin/csv.hpp"
#include "pfilin/estimators.hpp"
#include "pfilin/multipfi.hpp"
#include "pfilin/pareto.hpp"

namespace pfilin {
namespace {

namespace fs = std::filesystem;

// Runs fn(rep) for every replication, `workers` at a time, and hands the
// results to sink in replication order.
template <class R, class Fn, class Sink>
void for_each_replication(std::size_t count, std::size_t workers, Fn&& fn, Sink&& sink) {
  workers = std::max<std::size_t>(1, workers);
  for (std::size_t start = 0; start < count; start += workers) {
    const std::size_t batch = std::min(workers, count - start);
    std::vector<R> results(batch);
    std::vector<std::exception_ptr> errors(batch);
    auto job = [&](std::size_t i) {
      try {
        results[i] = fn(start + i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };
    std::vector<std::thread> threads;
    for (std::size_t i = 1; i < batch; ++i) threads.emplace_back(job, i);
    job(0);
    for (auto& th : threads) th.join();
    for (std::size_t i = 0; i < batch; ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
    }
    for (std::size_t i = 0; i < batch; ++i) sink(start + i, std::move(results[i]));
  }
}

Matrix rows_to_parameter(const std::vector<std::vector<double>>& rows) {
  // One row per objective -> d x L.
  Matrix theta(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t l = 0; l < rows.size(); ++l) {
    for (std::size_t i = 0; i < rows[l].size(); ++i) {
      theta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = rows[l][i];
    }
  }
  return theta;
}

Matrix parse_parameter(const std::string& text) {
  if (fs::is_regular_file(text)) return csv::read_numeric_table(text).transpose();
  return rows_to_parameter(parse_rows(text));
}

Matrix parse_correlation(const std::string& text) {
  if (text.empty()) return {};
  const auto rows = parse_rows(text);
  Matrix corr(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return corr;
}

}  // namespace

BuiltEnvironment build_environment(const ExperimentConfig& config) {
  BuiltEnvironment built;
  const NoiseFamily family = config.noise == "uniform" ? NoiseFamily::kUniform : NoiseFamily::kGaussian;
  if (config.env_kind == "clustered") {
    Rng data = make_stream(config.seed, 0, Stream::kData);
    Matrix rows;
    if (config.rewards == "surrogate") {
      rows = generate_surrogate_rewards(data);
    } else {
      rows = csv::read_numeric_table(config.rewards);
    }
    auto env = std::make_shared<ClusteredEnvironment>(load_clustered(rows, config.clusters, data, config.kmeans_restarts));
    built.contexts = std::make_shared<const ContextSet>(ContextSet::euclidean_basis(env->num_arms()));
    built.theta = env->means();
    built.sigma = env->within_cluster_sd();
    built.theta_max = env->means().colwise().norm().maxCoeff();
    built.cluster_sizes = env->cluster_sizes();
    built.env = std::move(env);
  } else {
    Matrix theta = parse_parameter(config.theta);
    std::shared_ptr<const ContextSet> contexts;
    if (config.env_kind == "mab") {
      contexts = std::make_shared<const ContextSet>(ContextSet::euclidean_basis(static_cast<std::size_t>(theta.rows())));
    } else {
      if (config.contexts.empty()) throw Error(ErrorCode::kInvalidParameter, "environment.contexts is required for linear");
      if (!fs::is_regular_file(config.contexts)) throw Error(ErrorCode::kMissingFile, config.contexts);
      contexts = std::make_shared<const ContextSet>(
          ContextSet::build(load_contexts_csv(config.contexts, static_cast<std::size_t>(theta.rows()))));
    }
    RewardModel model = RewardModel::make(theta, config.sigma, parse_correlation(config.noise_corr), -1.0, family);
    built.theta = model.theta;
    built.sigma = model.sigma;
    built.theta_max = model.theta_max;
    built.contexts = contexts;
    built.env = std::make_shared<LinearEnvironment>(contexts, std::move(model));
  }
  if (config.pfi_sigma >= 0.0) built.sigma = config.pfi_sigma;
  if (config.theta_max >= 0.0) built.theta_max = config.theta_max;
  return built;
}

// ---------------------------------------------------------------------------

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kRidge:
      return "ridge";
    case EstimatorKind::kMixed:
      return "mixed";
    case EstimatorKind::kDrMix:
      return "dr-mix";
    case EstimatorKind::kDrRidge:
      return "dr-ridge";
  }
  return "?";
}

namespace {

struct EstimatorTrace {
  std::vector<Vector> exploited;
  std::vector<Vector> unexploited;
  std::vector<std::vector<Vector>> scaled;
};

Matrix estimate(const EstimatorBundle& bundle, EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kRidge:
      return bundle.ridge_estimate();
    case EstimatorKind::kMixed:
      return bundle.mixed_estimate();
    case EstimatorKind::kDrMix:
      return bundle.dr_estimate();
    case EstimatorKind::kDrRidge:
      return bundle.dr_ridge_estimate();
  }
  return {};
}

EstimatorTrace trace_estimators(const ExperimentConfig& config, const BuiltEnvironment& built,
                                const std::vector<EstimatorKind>& kinds, std::size_t replication) {
  const ContextSet& cs = *built.contexts;
  const std::size_t L = built.env->num_objectives();
  RngStreams streams = RngStreams::for_replication(config.seed, replication);
  EstimatorOptions options;
  options.gamma_constant = config.gamma_constant;
  options.delta = config.delta;
  options.delta_prime = config.delta;
  options.feed_unmatched = config.feed_unmatched;
  options.track_dr_ridge = std::find(kinds.begin(), kinds.end(), EstimatorKind::kDrRidge) != kinds.end();
  EstimatorBundle bundle(built.contexts, L, options);

  const ArmIndex arm = config.exploit_arm;
  const ActionSampler exploit = [arm](Rng&) { return arm; };

  EstimatorTrace trace;
  trace.exploited.assign(kinds.size(), Vector::Zero(static_cast<Eigen::Index>(config.rounds)));
  trace.unexploited.assign(kinds.size(), Vector::Zero(static_cast<Eigen::Index>(config.rounds)));
  trace.scaled.assign(kinds.size(), std::vector<Vector>(config.checkpoints.size()));
  for (std::size_t n = 1; n <= config.rounds; ++n) {
    const Phase phase = n <= config.warmup ? Phase::kExplore : Phase::kExploit;
    const RoundPlan plan = bundle.plan_round_forced(phase, streams.algorithm, streams.weights);
    const MatchOutcome outcome = bundle.couple(plan, exploit, streams.resampling);
    bundle.observe(plan, outcome, built.env->pull(outcome.action, streams.environment));
    for (std::size_t e = 0; e < kinds.size(); ++e) {
      const Matrix err = cs.contexts().transpose() * (estimate(bundle, kinds[e]) - built.theta);  // K x L
      const Vector per_arm = err.rowwise().squaredNorm();
      double others = 0.0;
      for (Eigen::Index k = 0; k < per_arm.size(); ++k) {
        if (k != static_cast<Eigen::Index>(arm)) others += per_arm(k);
      }
      trace.exploited[e](static_cast<Eigen::Index>(n - 1)) = std::sqrt(per_arm(static_cast<Eigen::Index>(arm)));
      trace.unexploited[e](static_cast<Eigen::Index>(n - 1)) = std::sqrt(others);
      for (std::size_t c = 0; c < config.checkpoints.size(); ++c) {
        if (config.checkpoints[c] == n) trace.scaled[e][c] = std::sqrt(static_cast<double>(n)) * err.col(0);
      }
    }
  }
  return trace;
}

}  // namespace

EstimatorStudy run_estimator_study(const ExperimentConfig& config, const BuiltEnvironment& built,
                                   const std::vector<EstimatorKind>& estimators) {
  if (config.exploit_arm >= built.contexts->num_arms()) {
    throw Error(ErrorCode::kInvalidParameter, "estimators.exploit_arm out of range");
  }
  const auto reps = static_cast<Eigen::Index>(config.replications);
  const auto rounds = static_cast<Eigen::Index>(config.rounds);
  const auto K = static_cast<Eigen::Index>(built.contexts->num_arms());
  EstimatorStudy study;
  study.estimators = estimators;
  study.checkpoints = config.checkpoints;
  study.exploit_arm = config.exploit_arm;
  study.exploited.assign(estimators.size(), Matrix::Zero(reps, rounds));
  study.unexploited.assign(estimators.size(), Matrix::Zero(reps, rounds));
  study.scaled.assign(estimators.size(), std::vector<Matrix>(config.checkpoints.size(), Matrix::Zero(reps, K)));
  for_each_replication<EstimatorTrace>(
      config.replications, config.workers,
      [&](std::size_t rep) { return trace_estimators(config, built, estimators, rep); },
      [&](std::size_t rep, EstimatorTrace&& trace) {
        const auto r = static_cast<Eigen::Index>(rep);
        for (std::size_t e = 0; e < estimators.size(); ++e) {
          study.exploited[e].row(r) = trace.exploited[e].transpose();
          study.unexploited[e].row(r) = trace.unexploited[e].transpose();
          for (std::size_t c = 0; c < config.checkpoints.size(); ++c) {
            study.scaled[e][c].row(r) = trace.scaled[e][c].transpose();
          }
        }
      });
  return study;
}

// ---------------------------------------------------------------------------

namespace {

struct RepOutcome {
  RunSummary summary;
  std::vector<double> regret;
  std::vector<RoundRecord> history;
};

class Welford {
 public:
  explicit Welford(std::size_t n) : mean_(Vector::Zero(static_cast<Eigen::Index>(n))), m2_(mean_) {}

  void add(const Vector& x) {
    ++count_;
    const Vector delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(x - mean_);
  }
  const Vector& mean() const { return mean_; }
  Vector sd() const {
    if (count_ < 2) return Vector::Zero(mean_.size());
    return (m2_.cwiseMax(0.0) / static_cast<double>(count_ - 1)).cwiseSqrt();
  }

 private:
  std::size_t count_ = 0;
  Vector mean_;
  Vector m2_;
};

}  // namespace

PfiStudy run_pfi_study(const ExperimentConfig& config, const BuiltEnvironment& built) {
  PfiStudy study;
  study.algorithms = config.algorithms;
  study.epsilons = config.epsilons;
  study.runs.assign(config.algorithms.size(), std::vector<std::vector<RunSummary>>(config.epsilons.size()));
  study.curves.resize(config.algorithms.size());
  const Matrix& means = built.env->means();

  for (std::size_t a = 0; a < config.algorithms.size(); ++a) {
    const std::string& algorithm = config.algorithms[a];
    if (algorithm == "multipfi" && !built.contexts->is_euclidean_basis()) {
      throw Error(ErrorCode::kNotMab, "multipfi needs a mab or clustered environment");
    }
    for (std::size_t e = 0; e < config.epsilons.size(); ++e) {
      const double eps = config.epsilons[e];
      const bool curve = std::abs(eps - config.curve_epsilon) <= 1e-12;
      std::optional<Welford> instant;
      std::optional<Welford> cumulative;
      if (curve) {
        instant.emplace(config.max_rounds);
        cumulative.emplace(config.max_rounds);
      }
      auto run_one = [&](std::size_t rep) {
        RngStreams streams = RngStreams::for_replication(config.seed, rep);
        const bool keep = rep < config.round_logs;
        RunResult r;
        if (algorithm == "pfiwr") {
          PfiConfig pc;
          pc.epsilon = eps;
          pc.delta = config.delta;
          pc.sigma = built.sigma;
          pc.theta_max = built.theta_max;
          pc.gamma_constant = config.gamma_constant;
          pc.max_rounds = config.max_rounds;
          pc.feed_unmatched = config.feed_unmatched;
          pc.keep_history = keep;
          r = run_pfiwr(*built.env, built.contexts, pc, streams);
        } else {
          MultiPfiConfig mc;
          mc.epsilon = eps;
          mc.delta = config.delta;
          mc.radius_scale = config.radius_scale;
          mc.max_rounds = config.max_rounds;
          mc.keep_history = keep;
          r = run_multipfi(*built.env, *built.contexts, mc, streams.environment);
        }
        RepOutcome out;
        out.summary.replication = rep;
        out.summary.tau = r.tau;
        out.summary.completed = r.status == RunStatus::kCompleted;
        out.summary.success = out.summary.completed && success_check(r.pareto_out, means, eps);
        out.summary.cumulative_regret = r.cumulative_regret;
        out.summary.pareto_out = r.pareto_out;
        if (curve) out.regret = std::move(r.regret);
        out.history = std::move(r.history);
        return out;
      };
      for_each_replication<RepOutcome>(config.replications, config.workers, run_one,
                                       [&](std::size_t rep, RepOutcome&& out) {
                                         if (curve) {
                                           const auto n = static_cast<Eigen::Index>(config.max_rounds);
                                           Vector inst = Vector::Zero(n);
                                           for (std::size_t t = 0; t < out.regret.size(); ++t) {
                                             inst(static_cast<Eigen::Index>(t)) = out.regret[t];
                                           }
                                           Vector cum(n);
                                           double acc = 0.0;
                                           for (Eigen::Index t = 0; t < n; ++t) cum(t) = acc += inst(t);
                                           instant->add(inst);
                                           cumulative->add(cum);
                                         }
                                         if (rep < config.round_logs) {
                                           study.logs.push_back(RoundLog{algorithm, eps, rep, std::move(out.history)});
                                         }
                                         study.runs[a][e].push_back(std::move(out.summary));
                                       });
      if (curve) {
        study.curves[a] = CurveStats{instant->mean(), instant->sd(), cumulative->mean(), cumulative->sd()};
      }
    }
  }
  return study;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<Aggregate> aggregate(const PfiStudy& study) {
  std::vector<Aggregate> out;
  for (std::size_t a = 0; a < study.algorithms.size(); ++a) {
    for (std::size_t e = 0; e < study.epsilons.size(); ++e) {
      const auto& runs = study.runs[a][e];
      std::vector<double> taus, regrets;
      double successes = 0.0, completed = 0.0;
      for (const RunSummary& r : runs) {
        taus.push_back(static_cast<double>(r.tau));
        regrets.push_back(r.cumulative_regret);
        successes += r.success ? 1.0 : 0.0;
        completed += r.completed ? 1.0 : 0.0;
      }
      Aggregate g;
      g.algorithm = study.algorithms[a];
      g.epsilon = study.epsilons[e];
      g.replications = runs.size();
      g.tau_mean = mean(taus);
      g.tau_sd = sample_sd(taus);
      g.tau_median = median(taus);
      g.regret_mean = mean(regrets);
      g.regret_sd = sample_sd(regrets);
      g.regret_median = median(regrets);
      const double n = std::max<double>(1.0, static_cast<double>(runs.size()));
      g.success_rate = successes / n;
      g.completed_rate = completed / n;
      out.push_back(g);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string summary_file_name(const std::string& algorithm, double epsilon) {
  return "summary_" + algorithm + "_eps" + csv::format_number(epsilon) + ".csv";
}

namespace {

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::string path(const std::string& name) {
    files_.push_back(name);
    return (dir_ / name).string();
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

void write_estimator_curves(Outputs& out, const std::string& stem, const EstimatorStudy& study) {
  {
    csv::Writer w(out.path(stem + "_curves.csv"),
                  {"estimator", "n", "exploited_mean", "exploited_sd", "unexploited_mean", "unexploited_sd"});
    for (std::size_t e = 0; e < study.estimators.size(); ++e) {
      const Matrix& ex = study.exploited[e];
      const Matrix& un = study.unexploited[e];
      for (Eigen::Index n = 0; n < ex.cols(); ++n) {
        std::vector<double> a(ex.col(n).data(), ex.col(n).data() + ex.rows());
        std::vector<double> b(un.col(n).data(), un.col(n).data() + un.rows());
        w.field(to_string(study.estimators[e]))
            .field(static_cast<std::size_t>(n + 1))
            .field(mean(a))
            .field(sample_sd(a))
            .field(mean(b))
            .field(sample_sd(b));
        w.end_row();
      }
    }
  }
  csv::Writer w(out.path(stem + "_checkpoints.csv"), {"estimator", "replication", "n", "exploited", "unexploited"});
  for (std::size_t e = 0; e < study.estimators.size(); ++e) {
    for (std::size_t n : study.checkpoints) {
      const auto col = static_cast<Eigen::Index>(n - 1);
      for (Eigen::Index r = 0; r < study.exploited[e].rows(); ++r) {
        w.field(to_string(study.estimators[e]))
            .field(static_cast<std::size_t>(r))
            .field(n)
            .field(study.exploited[e](r, col))
            .field(study.unexploited[e](r, col));
        w.end_row();
      }
    }
  }
}

void write_density(Outputs& out, const EstimatorStudy& study) {
  csv::Writer w(out.path("density.csv"), {"estimator", "arm", "n", "replication", "value"});
  for (std::size_t e = 0; e < study.estimators.size(); ++e) {
    for (std::size_t c = 0; c < study.checkpoints.size(); ++c) {
      const Matrix& m = study.scaled[e][c];
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          w.field(to_string(study.estimators[e]))
              .field(static_cast<std::size_t>(k))
              .field(study.checkpoints[c])
              .field(static_cast<std::size_t>(r))
              .field(m(r, k));
          w.end_row();
        }
      }
    }
  }
}

void write_pfi(Outputs& out, const PfiStudy& study) {
  for (std::size_t a = 0; a < study.algorithms.size(); ++a) {
    for (std::size_t e = 0; e < study.epsilons.size(); ++e) {
      csv::Writer w(out.path(summary_file_name(study.algorithms[a], study.epsilons[e])),
                    {"seed", "tau", "success", "cum_regret", "pareto_out"});
      for (const RunSummary& r : study.runs[a][e]) {
        w.field(r.replication).field(r.tau).field(r.success).field(r.cumulative_regret).field(csv::join_arms(r.pareto_out));
        w.end_row();
      }
    }
  }
  {
    csv::Writer w(out.path("aggregate.csv"),
                  {"algorithm", "epsilon", "replications", "tau_mean", "tau_sd", "tau_median", "regret_mean",
                   "regret_sd", "regret_median", "success_rate", "completed_rate"});
    for (const Aggregate& g : aggregate(study)) {
      w.field(g.algorithm)
          .field(g.epsilon)
          .field(g.replications)
          .field(g.tau_mean)
          .field(g.tau_sd)
          .field(g.tau_median)
          .field(g.regret_mean)
          .field(g.regret_sd)
          .field(g.regret_median)
          .field(g.success_rate)
          .field(g.completed_rate);
      w.end_row();
    }
  }
  for (std::size_t a = 0; a < study.algorithms.size(); ++a) {
    const CurveStats& c = study.curves[a];
    if (c.instant_mean.size() == 0) continue;
    csv::Writer w(out.path("regret_curve_" + study.algorithms[a] + ".csv"),
                  {"round", "instant_mean", "instant_sd", "cumulative_mean", "cumulative_sd"});
    for (Eigen::Index t = 0; t < c.instant_mean.size(); ++t) {
      w.field(static_cast<std::size_t>(t + 1))
          .field(c.instant_mean(t))
          .field(c.instant_sd(t))
          .field(c.cumulative_mean(t))
          .field(c.cumulative_sd(t));
      w.end_row();
    }
  }
  for (const RoundLog& log : study.logs) {
    csv::Writer w(out.path("rounds_" + log.algorithm + "_eps" + csv::format_number(log.epsilon) + "_rep" +
                           std::to_string(log.replication) + ".csv"),
                  {"round", "phase", "i_t", "check_arm", "action", "matched", "attempts", "regret", "n_undetermined",
                   "n_accepted"});
    for (const RoundRecord& r : log.records) {
      w.field(r.round)
          .field(to_string(r.phase))
          .field(r.basis)
          .field(r.check_arm)
          .field(r.action)
          .field(r.matched)
          .field(r.attempts)
          .field(r.regret)
          .field(r.n_undetermined)
          .field(r.n_accepted);
      w.end_row();
    }
  }
}

void write_manifest(Outputs& out, const ExperimentConfig& config, const BuiltEnvironment& built) {
  nlohmann::ordered_json j;
  j["tool"] = "pfilin";
  j["version"] = std::string(kVersion);
  j["experiment"] = config.experiment;
  j["seed"] = config.seed;
  j["replications"] = config.replications;
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.echo()) echo[k] = v;
  j["config"] = echo;
  const Matrix& means = built.env->means();
  nlohmann::ordered_json env;
  env["kind"] = config.env_kind;
  env["arms"] = built.env->num_arms();
  env["objectives"] = built.env->num_objectives();
  env["dim"] = built.contexts->dim();
  env["sigma"] = built.sigma;
  env["theta_max"] = built.theta_max;
  env["pareto_front"] = pareto_front(means);
  if (!built.cluster_sizes.empty()) env["cluster_sizes"] = built.cluster_sizes;
  j["environment"] = env;
  std::vector<std::string> files = out.files();
  j["files"] = files;
  std::ofstream f(out.path("manifest.json"));
  f << j.dump(2) << '\n';
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& config) {
  validate(config);
  const BuiltEnvironment built = build_environment(config);
  Outputs out(config.output_dir);
  const std::string& x = config.experiment;
  if (x == "estimator-consistency") {
    write_estimator_curves(
        out, "consistency",
        run_estimator_study(config, built, {EstimatorKind::kRidge, EstimatorKind::kMixed, EstimatorKind::kDrMix}));
  } else if (x == "dr-imputation") {
    write_estimator_curves(out, "dr_imputation",
                           run_estimator_study(config, built, {EstimatorKind::kDrRidge, EstimatorKind::kDrMix}));
  } else if (x == "density") {
    write_density(out,
                  run_estimator_study(config, built, {EstimatorKind::kRidge, EstimatorKind::kMixed, EstimatorKind::kDrMix}));
  } else {
    write_pfi(out, run_pfi_study(config, built));
  }
  write_manifest(out, config, built);
  return out.files();
}

}  // namespace pfilin
