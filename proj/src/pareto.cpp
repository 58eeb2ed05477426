#include "pfilin/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pfilin {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_lengths(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw Error(ErrorCode::kLengthMismatch,
                "reward vectors of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
}

}  // namespace

double m_gap(const Eigen::Ref<const Vector>& y_k, const Eigen::Ref<const Vector>& y_j) {
  check_lengths(y_k, y_j);
  return std::max(0.0, (y_j - y_k).minCoeff());
}

double M_gap(const Eigen::Ref<const Vector>& y_k, const Eigen::Ref<const Vector>& y_j) {
  check_lengths(y_k, y_j);
  return std::max(0.0, (y_k - y_j).maxCoeff());
}

bool dominated_by(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  check_lengths(a, b);
  bool strict = false;
  for (Eigen::Index l = 0; l < a.size(); ++l) {
    if (a(l) > b(l)) return false;
    if (a(l) < b(l)) strict = true;
  }
  return strict;
}

ArmSet pareto_front(const Matrix& means) {
  ArmSet front;
  const Eigen::Index K = means.rows();
  for (Eigen::Index k = 0; k < K; ++k) {
    bool dominated = false;
    for (Eigen::Index j = 0; j < K && !dominated; ++j) {
      dominated = j != k && dominated_by(means.row(k).transpose(), means.row(j).transpose());
    }
    if (!dominated) front.push_back(static_cast<ArmIndex>(k));
  }
  return front;
}

bool GapProfile::degenerate() const {
  for (ArmIndex k : front) {
    if (delta(static_cast<Eigen::Index>(k)) == 0.0) return true;
  }
  return false;
}

GapProfile gap_profile(const Matrix& means) {
  const Eigen::Index K = means.rows();
  GapProfile p;
  p.front = pareto_front(means);
  p.delta_star = Vector::Zero(K);
  p.delta_plus = Vector::Constant(K, kInf);
  p.delta_minus = Vector::Constant(K, kInf);
  p.delta = Vector::Zero(K);

  auto row = [&](Eigen::Index k) { return means.row(k).transpose(); };

  for (Eigen::Index k = 0; k < K; ++k) {
    if (contains(p.front, static_cast<ArmIndex>(k))) continue;
    double worst = 0.0;
    for (ArmIndex f : p.front) worst = std::max(worst, m_gap(row(k), row(static_cast<Eigen::Index>(f))));
    p.delta_star(k) = worst;
  }
  for (ArmIndex f : p.front) {
    const auto k = static_cast<Eigen::Index>(f);
    double plus = kInf;
    double minus = kInf;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (j == k) continue;
      if (contains(p.front, static_cast<ArmIndex>(j))) {
        plus = std::min(plus, std::min(M_gap(row(k), row(j)), M_gap(row(j), row(k))));
      } else {
        minus = std::min(minus, M_gap(row(j), row(k)) + p.delta_star(j));
      }
    }
    p.delta_plus(k) = plus;
    p.delta_minus(k) = minus;
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    p.delta(k) = contains(p.front, static_cast<ArmIndex>(k)) ? std::min(p.delta_plus(k), p.delta_minus(k))
                                                             : p.delta_star(k);
  }
  return p;
}

double pareto_regret(ArmIndex k, const GapProfile& profile) {
  return profile.delta_star(static_cast<Eigen::Index>(k));
}

double pareto_regret(ArmIndex k, const Matrix& means) {
  const ArmSet front = pareto_front(means);
  double worst = 0.0;
  for (ArmIndex f : front) {
    worst = std::max(worst, m_gap(means.row(static_cast<Eigen::Index>(k)).transpose(),
                                  means.row(static_cast<Eigen::Index>(f)).transpose()));
  }
  return worst;
}

bool success_check(const ArmSet& output, const Matrix& means, double eps) {
  const GapProfile profile = gap_profile(means);
  for (ArmIndex f : profile.front) {
    if (std::find(output.begin(), output.end(), f) == output.end()) return false;
  }
  for (ArmIndex k : output) {
    if (k >= static_cast<ArmIndex>(means.rows())) return false;
    if (profile.delta_star(static_cast<Eigen::Index>(k)) > eps) return false;
  }
  return true;
}

double sample_lower_bound(const GapProfile& profile, double sigma, std::size_t num_objectives, double delta,
                          double eps, std::size_t dim) {
  std::vector<double> gaps(profile.delta.data(), profile.delta.data() + profile.delta.size());
  std::sort(gaps.begin(), gaps.end());
  const std::size_t count = std::min(dim, gaps.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double g = std::max(gaps[k], eps);
    sum += 1.0 / (g * g);
  }
  return sigma * sigma / 3.0 * sum * std::log(3.0 * static_cast<double>(num_objectives) / (4.0 * delta));
}

double regret_lower_bound(double delta_star_eps, double sigma, std::size_t dim, double delta) {
  return std::numbers::sqrt3 * static_cast<double>(dim) * sigma / (8.0 * delta_star_eps) * std::log(1.0 / (4.0 * delta));
}

double min_suboptimal_gap(const GapProfile& profile, double eps) {
  double smallest = kInf;
  for (Eigen::Index k = 0; k < profile.delta_star.size(); ++k) {
    if (!contains(profile.front, static_cast<ArmIndex>(k))) smallest = std::min(smallest, profile.delta_star(k));
  }
  return smallest == kInf ? eps : std::max(eps, smallest);
}

}  // namespace pfilin
