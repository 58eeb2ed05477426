#include "pfilin/validation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "pfilin/contexts.hpp"
#include "pfilin/csv.hpp"
#include "pfilin/environments.hpp"
#include "pfilin/estimators.hpp"
#include "pfilin/pfiwr.hpp"

namespace pfilin {

Matrix random_contexts(std::size_t d, std::size_t K, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.3, 1.0);
  Matrix X(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(K));
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, k) = normal(rng);
    X.col(k) *= scale(rng) / X.col(k).norm();
  }
  return X;
}

namespace {

struct Fixture {
  std::string name;
  Matrix X;
};

std::vector<Fixture> collect_fixtures(const std::string& dir, std::uint64_t seed, std::size_t random_count) {
  std::vector<Fixture> out;
  if (std::filesystem::is_directory(dir)) {
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("contexts_", 0) == 0 && entry.path().extension() == ".csv") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) out.push_back({p.filename().string(), csv::read_numeric_table(p.string()).transpose()});
  }
  Rng rng = make_stream(seed, 0, Stream::kData);
  for (std::size_t f = 0; f < random_count; ++f) {
    const std::size_t d = 1 + f % 5;
    const std::size_t K = d + (f * 7) % (13 - d);
    out.push_back({"random-" + std::to_string(f), random_contexts(d, K, rng)});
  }
  return out;
}

class Check {
 public:
  explicit Check(std::string name) { result_.name = std::move(name); }

  void expect(bool ok, const std::string& what) {
    if (!ok && failures_++ == 0) first_ = what;
  }
  void note(double v) { worst_ = std::max(worst_, v); }

  CheckResult finish(std::size_t cases) {
    result_.passed = failures_ == 0;
    std::ostringstream os;
    os << cases << " cases";
    if (worst_ > 0.0) os << ", worst residual " << worst_;
    if (failures_) os << ", " << failures_ << " failures, first: " << first_;
    result_.detail = os.str();
    return result_;
  }

 private:
  CheckResult result_;
  std::size_t failures_ = 0;
  std::string first_;
  double worst_ = 0.0;
};

CheckResult check_decomposition(const std::vector<Fixture>& fixtures, Rng& rng) {
  Check c("context decomposition");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const Fixture& f : fixtures) {
    const ContextSet cs = ContextSet::build(f.X);
    const Matrix& U = cs.left_vectors();
    const Vector& s = cs.singular_values();
    const double recon = (f.X - U * s.asDiagonal() * cs.right_vectors().transpose()).norm();
    c.note(recon);
    c.expect(recon <= 1e-10 * std::max(1.0, f.X.norm()), f.name + ": reconstruction");
    const auto d = static_cast<Eigen::Index>(cs.dim());
    c.expect((U.transpose() * U - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-10, f.name + ": orthonormality");
    c.expect((U * s.cwiseAbs2().asDiagonal() * U.transpose() - cs.gram()).cwiseAbs().maxCoeff() <= 1e-10,
             f.name + ": gram eigen-identity");
    Vector theta(d);
    for (Eigen::Index i = 0; i < d; ++i) theta(i) = normal(rng);
    for (std::size_t i = 0; i < cs.dim(); ++i) {
      const Vector& pmf = cs.basis_pmf(i);
      c.expect(pmf.minCoeff() >= 0.0 && std::abs(pmf.sum() - 1.0) <= 1e-12, f.name + ": pmf");
      double expectation = 0.0;
      for (ArmIndex k = 0; k < cs.num_arms(); ++k) {
        expectation += pmf(static_cast<Eigen::Index>(k)) * cs.reward_reweight(i, k, cs.context(k).dot(theta));
      }
      c.expect(std::abs(expectation - cs.basis_context(i).dot(theta)) <= 1e-10, f.name + ": reweight expectation");
    }
  }
  return c.finish(fixtures.size());
}

CheckResult check_norm_bound(const std::vector<Fixture>& fixtures) {
  Check c("normalized norm bound");
  for (const Fixture& f : fixtures) {
    const Matrix G = f.X * f.X.transpose();
    for (double eps : {1e-8, 1e-4, 1.0}) {
      const Matrix M = G + eps * Matrix::Identity(G.rows(), G.cols());
      const Eigen::LDLT<Matrix> ldlt(M);
      for (Eigen::Index k = 0; k < f.X.cols(); ++k) {
        const double q = f.X.col(k).dot(ldlt.solve(f.X.col(k)));
        c.expect(q <= 1.0 + 1e-8, f.name + ": leverage above one");
      }
    }
  }
  return c.finish(fixtures.size());
}

CheckResult check_design_norms(const std::vector<Fixture>& fixtures) {
  Check c("design norm rate");
  for (const Fixture& f : fixtures) {
    const ContextSet cs = ContextSet::build(f.X);
    for (ArmIndex k = 0; k < cs.num_arms(); ++k) {
      double previous = std::numeric_limits<double>::infinity();
      for (double t : {0.0, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0, 10000.0}) {
        const double v = cs.design_norm(k, t);
        const Matrix F = cs.design_matrix(t);
        const double explicit_v = std::sqrt(cs.context(k).dot(F.inverse() * cs.context(k)));
        c.note(std::abs(v - explicit_v));
        c.expect(std::abs(v - explicit_v) <= 1e-10, f.name + ": explicit inverse");
        if (t >= 1.0) c.expect(v <= 1.0 / std::sqrt(t) + 1e-12, f.name + ": above t^-1/2");
        c.expect(v <= previous + 1e-15, f.name + ": increasing in t");
        previous = v;
      }
    }
  }
  return c.finish(fixtures.size());
}

// Adaptive runs: ledger invariants every round, then batch recomputation.
std::vector<CheckResult> check_estimator_runs(const std::vector<Fixture>& fixtures, std::uint64_t seed) {
  Check ledger("exploration ledger");
  Check batch("batch equivalence");
  std::size_t runs = 0;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    auto cs = std::make_shared<const ContextSet>(ContextSet::build(fixtures[f].X));
    RngStreams streams = RngStreams::for_replication(seed, f);
    const std::size_t L = 2;
    Matrix theta(static_cast<Eigen::Index>(cs->dim()), static_cast<Eigen::Index>(L));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = normal(streams.environment) / 2.0;
    const LinearEnvironment env(cs, RewardModel::make(theta, 0.1));
    EstimatorOptions options;
    options.record_updates = true;
    options.track_dr_ridge = true;
    EstimatorBundle bundle(cs, L, options);
    const std::size_t K = cs->num_arms();
    const ActionSampler uniform = [K](Rng& rng) {
      std::uniform_int_distribution<std::size_t> pick(0, K - 1);
      return pick(rng);
    };
    for (std::size_t t = 1; t <= 1500; ++t) {
      const RoundPlan plan = bundle.plan_round(streams.algorithm, streams.weights);
      const MatchOutcome out = bundle.couple(plan, uniform, streams.resampling);
      if (plan.phase == Phase::kExplore) ledger.expect(out.action == plan.check_arm, fixtures[f].name + ": explore action");
      bundle.observe(plan, out, env.pull(out.action, streams.environment));
      std::string why;
      ledger.expect(bundle.ledger().invariants_hold(&why), fixtures[f].name + ": " + why);
    }
    ++runs;

    const UpdateLog& log = bundle.update_log();
    const auto d = static_cast<Eigen::Index>(cs->dim());
    Matrix xs(d, static_cast<Eigen::Index>(log.mixed_x.size()));
    Matrix ys(static_cast<Eigen::Index>(log.mixed_y.size()), static_cast<Eigen::Index>(L));
    for (std::size_t j = 0; j < log.mixed_x.size(); ++j) {
      xs.col(static_cast<Eigen::Index>(j)) = log.mixed_x[j];
      ys.row(static_cast<Eigen::Index>(j)) = log.mixed_y[j].transpose();
    }
    const Matrix mixed_gram = xs * xs.transpose() + 0.5 * Matrix::Identity(d, d);
    const Matrix mixed_moment = xs * ys;
    Matrix dr_gram = Matrix::Identity(d, d);
    Matrix dr_moment = Matrix::Zero(d, static_cast<Eigen::Index>(L));
    for (std::size_t j = 0; j < log.dr_x.size(); ++j) {
      dr_gram += log.dr_x[j] * log.dr_x[j].transpose();
      dr_moment += log.dr_x[j] * log.dr_y[j];
    }
    const double e1 = (mixed_gram - bundle.mixed().gram()).norm();
    const double e2 = (mixed_moment - bundle.mixed().moment()).norm();
    const double e3 = (dr_gram - bundle.dr().gram()).norm();
    const double e4 = (dr_moment - bundle.dr().moment()).norm();
    const double e5 = (mixed_gram.ldlt().solve(mixed_moment) - bundle.mixed_estimate()).norm();
    const double e6 = (dr_gram.ldlt().solve(dr_moment) - bundle.dr_estimate()).norm();
    for (double e : {e1, e2, e3, e4, e5, e6}) {
      batch.note(e);
      batch.expect(e <= 1e-8, fixtures[f].name + ": recursive state drifted from batch form");
    }
    batch.expect(bundle.dr().matched_rounds() == log.dr_x.size(), fixtures[f].name + ": matched count");
  }
  return {ledger.finish(runs), batch.finish(runs)};
}

CheckResult check_elimination_sets(const std::vector<Fixture>& fixtures, std::uint64_t seed) {
  Check c("elimination set invariants");
  std::size_t runs = 0;
  for (std::size_t f = 0; f < fixtures.size(); f += 4) {
    auto cs = std::make_shared<const ContextSet>(ContextSet::build(fixtures[f].X));
    RngStreams streams = RngStreams::for_replication(seed + 1, f);
    Matrix theta(static_cast<Eigen::Index>(cs->dim()), 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = normal(streams.environment) / 2.0;
    const LinearEnvironment env(cs, RewardModel::make(theta, 0.05));
    PfiConfig config;
    config.epsilon = 0.1;
    config.sigma = 0.05;
    config.theta_max = env.model().theta_max;
    config.max_rounds = 3000;
    const std::string name = fixtures[f].name;
    run_pfiwr(env, cs, config, streams, [&](const RoundView& v) {
      ArmSet both;
      std::set_intersection(v.undetermined.begin(), v.undetermined.end(), v.accepted.begin(), v.accepted.end(),
                            std::back_inserter(both));
      c.expect(both.empty(), name + ": undetermined and accepted overlap");
      c.expect(std::includes(v.previous_undetermined.begin(), v.previous_undetermined.end(), v.undetermined.begin(),
                             v.undetermined.end()),
               name + ": undetermined set grew");
      c.expect(v.record.phase == Phase::kExploit || v.record.action == v.record.check_arm,
               name + ": exploration round played another arm");
      c.expect(v.record.n_undetermined == v.undetermined.size() && v.record.n_accepted == v.accepted.size(),
               name + ": record sizes");
    });
    ++runs;
  }
  return c.finish(runs);
}

}  // namespace

std::vector<CheckResult> run_structural_checks(const std::string& fixtures_dir, std::uint64_t seed,
                                               std::size_t random_fixtures) {
  const std::vector<Fixture> fixtures = collect_fixtures(fixtures_dir, seed, random_fixtures);
  Rng rng = make_stream(seed, 1, Stream::kData);
  std::vector<CheckResult> out;
  out.push_back(check_decomposition(fixtures, rng));
  out.push_back(check_norm_bound(fixtures));
  out.push_back(check_design_norms(fixtures));
  for (CheckResult& r : check_estimator_runs(fixtures, seed)) out.push_back(std::move(r));
  out.push_back(check_elimination_sets(fixtures, seed));
  return out;
}

}  // namespace pfilin
