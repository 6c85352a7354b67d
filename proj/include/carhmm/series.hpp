#pragma once

#include <cstddef>
#include <vector>

namespace carhmm {

/// One likelihood term: the step d_(t,t+1) and the deflection angle theta_t.
struct StepAngle {
  double d = 1.0;
  double theta = 0.0;

  friend bool operator==(const StepAngle&, const StepAngle&) = default;
};

/// Independent run of observations; d0 is the step-length initial condition.
struct ObservationGroup {
  double d0 = 1.0;
  std::vector<StepAngle> obs;

  friend bool operator==(const ObservationGroup&, const ObservationGroup&) = default;
};

/// Grouped, (optionally) standardized series on a regular grid.
struct ObservationSeries {
  std::vector<ObservationGroup> groups;
  double mean_step_km = 1.0;
  double time_step_min = 1.0;
  std::size_t n_interp_locations = 0;
  std::size_t n_raw_locations = 0;
  std::size_t n_groups = 0;      // groups entering the likelihood
  std::size_t n_raw_groups = 0;  // groups formed at the cutoff, before exclusion

  std::size_t n_pairs() const noexcept {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.obs.size();
    return n;
  }

  friend bool operator==(const ObservationSeries&, const ObservationSeries&) = default;
};

}  // namespace carhmm
