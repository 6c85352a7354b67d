#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carhmm/fit.hpp"
#include "carhmm/model.hpp"
#include "carhmm/series.hpp"

namespace carhmm {

struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
};

struct SimulatedSeries {
  std::vector<std::size_t> states;  // 0-based, one per observation pair
  ObservationGroup group;
  std::vector<PlanarPoint> planar;  // filled by simulate_series
  std::uint64_t seed = 0;
};

/// B_1 ~ delta, B_t | B_(t-1) ~ row of A, d0 from the initial state's step
/// distribution at its reversion level, then steps and angles per state.
SimulatedSeries simulate_series(const CarHmmModel& model, std::size_t n,
                                std::uint64_t seed);

/// Planar track: origin start, initial heading +x, each angle rotates the
/// heading clockwise for positive values. Returns n + 2 points.
std::vector<PlanarPoint> reconstruct_planar(const ObservationGroup& group);
/// Inverse of reconstruct_planar (steps and turns of a planar path).
ObservationGroup planar_to_group(std::span<const PlanarPoint> points);

/// Fraction of positions where labels differ.
double state_error(const std::vector<std::size_t>& est,
                   const std::vector<std::size_t>& truth);
/// Mismatch after mapping both label sets onto ascending-mu_rl ranks of their
/// own model.
double state_error(const std::vector<std::size_t>& est, const CarHmmModel& est_model,
                   const std::vector<std::size_t>& truth, const CarHmmModel& true_model);

/// Type-7 (linear interpolation) sample quantile. Requires non-empty input.
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

/// Divides every step by the grand mean step; returns the mean.
double standardize_group(ObservationGroup& group);
/// Maps a model fitted to standardized steps back to the original scale.
CarHmmModel unstandardize_model(const CarHmmModel& m, double mean_step);

struct Scenario {
  std::string name;
  CarHmmModel truth;
  std::size_t track_length = 1000;
  std::size_t n_sims = 100;
  std::size_t fit_k = 0;  // 0: same as truth
  FitConfig fit;
  std::uint64_t seed = 1;
  bool standardize = true;
};

struct ReplicateOutcome {
  std::size_t index = 0;
  bool included = false;
  bool converged = false;
  std::optional<DegeneracyReason> degenerate;
  int restarts_used = 0;
  double state_error = 0.0;
  double loglik = 0.0;
  double loglik_truth = 0.0;  // truth evaluated on the same (standardized) data
  CarHmmModel estimate;       // original scale, state-ordered
};

struct ParameterBias {
  std::string name;
  double truth = 0.0;
  double median_bias = 0.0;
};

struct StudyResult {
  std::string name;
  std::size_t replicates = 0;
  std::size_t included = 0;
  std::size_t nonconverged = 0;
  double error_q1 = 0.0;
  double error_median = 0.0;
  double error_q3 = 0.0;
  std::vector<ParameterBias> bias;  // empty when fit_k differs from truth
  std::vector<ReplicateOutcome> outcomes;
};

/// One Monte Carlo replicate; deterministic in (scenario.seed, index).
ReplicateOutcome run_replicate(const Scenario& scenario, std::size_t index);

/// Runs all replicates on `jobs` threads; aggregation is by replicate index so
/// the result does not depend on jobs.
StudyResult run_study(const Scenario& scenario, unsigned jobs = 1);

/// Flat parameter list (ordered-state labels) used for bias reporting.
std::vector<std::pair<std::string, double>> flatten_parameters(const CarHmmModel& m);

}  // namespace carhmm
