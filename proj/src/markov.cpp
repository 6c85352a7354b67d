#include "carhmm/markov.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/format.h>

#include "carhmm/error.hpp"

namespace carhmm {

TransitionMatrix::TransitionMatrix(std::size_t k) : k_(k), a_(k * k, 0.0) {}

TransitionMatrix::TransitionMatrix(const std::vector<std::vector<double>>& rows)
    : k_(rows.size()), a_(rows.size() * rows.size()) {
  for (std::size_t i = 0; i < k_; ++i) {
    if (rows[i].size() != k_) {
      throw Error(ErrorCode::InvalidModel, "transition matrix must be square");
    }
    for (std::size_t j = 0; j < k_; ++j) a_[i * k_ + j] = rows[i][j];
  }
  if (k_ == 0 || !is_stochastic()) {
    throw Error(ErrorCode::InvalidModel,
                "transition matrix rows must be non-negative and sum to 1");
  }
}

TransitionMatrix TransitionMatrix::identity(std::size_t k) {
  TransitionMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<std::vector<double>> TransitionMatrix::rows() const {
  std::vector<std::vector<double>> out(k_, std::vector<double>(k_));
  for (std::size_t i = 0; i < k_; ++i)
    for (std::size_t j = 0; j < k_; ++j) out[i][j] = (*this)(i, j);
  return out;
}

bool TransitionMatrix::is_stochastic(double tol) const {
  for (std::size_t i = 0; i < k_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k_; ++j) {
      const double v = (*this)(i, j);
      if (!std::isfinite(v) || v < 0.0) return false;
      s += v;
    }
    if (std::abs(s - 1.0) > tol) return false;
  }
  return true;
}

bool TransitionMatrix::strictly_positive() const {
  for (double v : a_)
    if (!(v > 0.0)) return false;
  return true;
}

bool TransitionMatrix::irreducible() const {
  // Every state reaches every other state through positive entries.
  for (std::size_t s = 0; s < k_; ++s) {
    std::vector<bool> seen(k_, false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < k_; ++j) {
        if (!seen[j] && (*this)(i, j) > 0.0) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    for (bool b : seen)
      if (!b) return false;
  }
  return true;
}

std::vector<double> stationary(const TransitionMatrix& a) {
  const auto k = static_cast<Eigen::Index>(a.k());
  if (!a.irreducible()) {
    throw Error(ErrorCode::ReducibleChain, "stationary distribution is not unique");
  }
  // (A^T - I) delta = 0 with the last equation replaced by sum(delta) = 1.
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      m(i, j) = a(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) -
                (i == j ? 1.0 : 0.0);
  m.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  const Eigen::VectorXd d = m.fullPivLu().solve(rhs);
  std::vector<double> delta(static_cast<std::size_t>(k));
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    delta[static_cast<std::size_t>(i)] = std::max(0.0, d(i));
    total += delta[static_cast<std::size_t>(i)];
  }
  for (double& v : delta) v /= total;
  return delta;
}

Residency residency(const TransitionMatrix& a, double time_step_min) {
  Residency r;
  for (std::size_t i = 0; i < a.k(); ++i) {
    const double stay = a(i, i);
    if (!(stay < 1.0)) {
      throw Error(ErrorCode::AbsorbingState,
                  "state " + std::to_string(i + 1) + " is absorbing");
    }
    const double steps = 1.0 / (1.0 - stay);
    r.steps.push_back(steps);
    r.minutes.push_back(steps * time_step_min);
  }
  return r;
}

std::string format_duration(double minutes) {
  const auto total = static_cast<long long>(std::llround(minutes));
  const long long hr = total / 60;
  const long long min = total % 60;
  if (hr == 0) return fmt::format("{} min", min);
  return fmt::format("{} hr {} min", hr, min);
}

ReversionLevel unstandardize_reversion(double mu_rl, double mean_step_km,
                                       double time_step_min) {
  ReversionLevel out;
  out.km_per_step = mu_rl * mean_step_km;
  out.km_per_hour = out.km_per_step * 60.0 / time_step_min;
  return out;
}

Interpretation interpret(const TransitionMatrix& a, double time_step_min,
                         const std::vector<double>& mu_rl,
                         std::optional<double> mean_step_km) {
  Interpretation out;
  out.delta = stationary(a);
  auto r = residency(a, time_step_min);
  out.residency_steps = std::move(r.steps);
  out.residency_minutes = std::move(r.minutes);
  out.strictly_positive = a.strictly_positive();
  if (mean_step_km && !mu_rl.empty()) {
    std::vector<double> levels;
    for (double mu : mu_rl) {
      levels.push_back(unstandardize_reversion(mu, *mean_step_km, time_step_min).km_per_step);
    }
    out.reversion_levels_km = std::move(levels);
  }
  return out;
}

}  // namespace carhmm
