#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "carhmm/model.hpp"
#include "carhmm/series.hpp"

namespace carhmm {

/// Emission log-densities are floored here before exponentiation.
inline constexpr double kLogDensityFloor = -700.0;

/// Joint log-density of (d, theta) in state b given the previous step d_prev.
double emission_logdensity(const CarHmmModel& model, std::size_t b, double d,
                           double d_prev, double theta);

/// Row-major n x k table of floored emission log-densities for one group.
/// Requires a valid model; no per-entry domain checks.
void emission_table(const CarHmmModel& model, const ObservationGroup& group,
                    std::vector<double>& out);

/// Scaled forward filter after observation t.
struct ForwardState {
  std::vector<double> alpha;     // P(B_t | obs 1..t), sums to 1
  double log_scale_accum = 0.0;  // log-likelihood of obs 1..t
};

/// Filter states for every observation of the group (delta weights B_1).
std::vector<ForwardState> forward_filter(const CarHmmModel& model,
                                         const ObservationGroup& group);

double group_loglik(const CarHmmModel& model, const ObservationGroup& group);
double total_loglik(const CarHmmModel& model, std::span<const ObservationGroup> groups);
double total_loglik(const CarHmmModel& model, const ObservationSeries& series);

}  // namespace carhmm
