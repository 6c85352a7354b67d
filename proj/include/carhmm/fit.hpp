#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "carhmm/model.hpp"
#include "carhmm/rng.hpp"
#include "carhmm/series.hpp"

namespace carhmm {

/// Lower/upper clamp applied to probabilities and rates before a logit.
inline constexpr double kProbClamp = 1e-8;
/// Gamma-family autocorrelation is mapped into (0, kPhiMax).
inline constexpr double kPhiMax = 1.0 - 1e-6;

/// Flat unconstrained parameterization of a CarHmmModel, length k^2 + 4k.
/// Per state: [log mu | mu, logit phi | phi, log sigma, tan(c/2), logit rho]
/// (gamma | lognormal), then for each row of A the k-1 off-diagonal logits
/// against the diagonal.
using UnconstrainedVector = std::vector<double>;

UnconstrainedVector transform(const CarHmmModel& model);
/// Always produces a valid model. Throws NonFinite for non-finite input.
/// With phi_fixed_zero the phi slots are ignored and phi is exactly 0.
CarHmmModel untransform(const UnconstrainedVector& v, std::size_t k, Family family,
                        bool phi_fixed_zero = false);

struct FitConfig {
  Family family = Family::gamma;
  bool fix_phi_zero = false;
  int max_restarts = 10;
  std::uint64_t seed = 0;
  int max_iterations = 2000;
  double gradient_tolerance = 1e-6;
  double function_tolerance = 1e-10;
  double fd_relative_step = 1e-6;
};

enum class DegeneracyReason { StationaryEntry, AngleConcentration, UniformRow };

std::string_view to_string(DegeneracyReason r);

/// Screens for the fits excluded from the simulation studies: a stationary
/// entry below 0.01, any rho below 1e-3, or an A row with max - min < 1e-6.
std::optional<DegeneracyReason> degeneracy_check(const CarHmmModel& model);

/// States permuted into ascending mu_rl (stable for ties).
CarHmmModel order_states(const CarHmmModel& model);
/// Permutation used by order_states: ordered state i is original perm[i].
std::vector<std::size_t> state_order(const CarHmmModel& model);

struct FitResult {
  CarHmmModel model;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  bool converged = false;
  std::optional<DegeneracyReason> degenerate;
  int restarts_used = 0;
  int iterations = 0;
  double gradient_max_norm = 0.0;
  std::string termination;
  std::size_t n_parameters = 0;
  std::size_t n_observations = 0;
};

inline double aic(double loglik, std::size_t n_params) {
  return -2.0 * loglik + 2.0 * static_cast<double>(n_params);
}
double bic(double loglik, std::size_t n_params, std::size_t n_obs);

/// Random starting vector over the standardized data scale.
UnconstrainedVector random_start(std::size_t k, const FitConfig& config, Rng& rng);

/// Negative log-likelihood in the unconstrained coordinates, +inf when the
/// model cannot be evaluated.
double objective(const UnconstrainedVector& v, const ObservationSeries& series,
                 std::size_t k, const FitConfig& config);

/// Central finite-difference gradient of objective, step fd_relative_step *
/// max(1, |v_i|). Phi slots are zero when phi is fixed.
std::vector<double> objective_gradient(const UnconstrainedVector& v,
                                       const ObservationSeries& series, std::size_t k,
                                       const FitConfig& config);

/// One quasi-Newton (BFGS, Wolfe line search) run from start. Non-convergence
/// is reported through FitResult::converged. Throws NonFiniteObjective if the
/// objective is not finite at the start. The returned model is state-ordered.
FitResult fit_once(const ObservationSeries& series, std::size_t k,
                   const UnconstrainedVector& start, const FitConfig& config);

/// Random restarts until a fit converges and passes degeneracy_check, at most
/// config.max_restarts. Restart r draws from Rng::derive(seed, r). Otherwise
/// returns the best-loglik attempt, flagged. Throws AllRestartsFailed when no
/// attempt had a finite objective.
FitResult fit_multistart(const ObservationSeries& series, std::size_t k,
                         const FitConfig& config);

}  // namespace carhmm
