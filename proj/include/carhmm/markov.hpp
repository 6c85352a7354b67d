#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace carhmm {

/// Row-stochastic k x k matrix of behavioural-state switch probabilities.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(std::size_t k);
  /// Throws InvalidModel unless rows are square, non-negative and sum to 1 +- 1e-9.
  explicit TransitionMatrix(const std::vector<std::vector<double>>& rows);

  static TransitionMatrix identity(std::size_t k);

  std::size_t k() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * k_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * k_ + j]; }
  const std::vector<double>& data() const noexcept { return a_; }

  std::vector<std::vector<double>> rows() const;

  /// Row sums within 1e-9 and entries non-negative and finite.
  bool is_stochastic(double tol = 1e-9) const;
  /// Consistency condition: every entry strictly positive.
  bool strictly_positive() const;
  bool irreducible() const;

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<double> a_;
};

/// Stationary distribution delta with delta A = delta, sum 1, via a direct
/// linear solve. Throws ReducibleChain when A is not irreducible.
std::vector<double> stationary(const TransitionMatrix& a);

struct Residency {
  std::vector<double> steps;    // 1 / (1 - a_ii)
  std::vector<double> minutes;  // steps * time_step
};

/// Expected geometric residency per state. Throws AbsorbingState if a_ii >= 1.
Residency residency(const TransitionMatrix& a, double time_step_min);

/// "3 hr 50 min" style rendering, rounded to the nearest minute.
std::string format_duration(double minutes);

struct ReversionLevel {
  double km_per_step = 0.0;
  double km_per_hour = 0.0;
};

ReversionLevel unstandardize_reversion(double mu_rl, double mean_step_km,
                                       double time_step_min);

struct Interpretation {
  std::vector<double> delta;
  std::vector<double> residency_steps;
  std::vector<double> residency_minutes;
  std::optional<std::vector<double>> reversion_levels_km;
  bool strictly_positive = false;
};

/// Activity budget, residency and (when mean_step_km is given) reversion levels.
Interpretation interpret(const TransitionMatrix& a, double time_step_min,
                         const std::vector<double>& mu_rl = {},
                         std::optional<double> mean_step_km = std::nullopt);

}  // namespace carhmm
