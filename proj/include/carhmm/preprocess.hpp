#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "carhmm/geo.hpp"
#include "carhmm/series.hpp"
#include "carhmm/track_io.hpp"

namespace carhmm {

struct GridSpec {
  double time_step = 60.0;     // minutes
  double group_cutoff = 120.0; // minutes, >= time_step

  /// Throws DomainError unless 0 < time_step <= group_cutoff.
  void validate() const;
  /// Cutoffs beyond twice the step are allowed but flagged.
  bool wide_cutoff() const noexcept { return group_cutoff > 2.0 * time_step; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct GridMetrics {
  double n_prop = 0.0;
  double n_adj = 0.0;
  std::size_t n_raw_locations = 0;
  std::size_t n_interp_locations = 0;
  std::size_t n_groups = 0;

  bool groups_dominate() const noexcept { return n_adj <= 0.0; }
};

/// Contiguous runs of records; a new run starts wherever dt > cutoff.
std::vector<std::vector<TrackRecord>> split_groups(std::span<const TrackRecord> records,
                                                   double cutoff);

/// Number of grid points t0, t0 + step, ... not past the last record time.
std::size_t grid_point_count(double span_minutes, double time_step);

/// Linear interpolation of lat and lon onto the grid anchored at the first
/// record. Throws DegenerateGroup when fewer than two grid points result.
std::vector<geo::LatLon> interpolate_group(std::span<const TrackRecord> group,
                                           double time_step);

/// Steps and angles per group of at least three locations; step i+1 pairs
/// with the turn at location i+1. Zero-length steps are floored at 1e-8 of
/// the mean step and keep the previous heading. Throws AllGroupsDegenerate.
ObservationSeries derive_series(const std::vector<std::vector<geo::LatLon>>& groups,
                                bool standardize);

GridMetrics grid_metrics(const RawTrack& track, const GridSpec& spec);

struct GridCandidate {
  GridSpec spec;
  GridMetrics metrics;
  double objective = 0.0;  // max(|n_prop - 1|, |n_adj - 1|)
};

struct GridSearchResult {
  GridCandidate best;
  std::vector<GridCandidate> table;  // steps outer, cutoffs inner
};

/// Cutoffs run from step to 2 * step in 5% increments for each step. Ties
/// on the objective prefer the larger step, then the smaller cutoff.
GridSearchResult choose_grid(const RawTrack& track, std::span<const double> steps);

/// split_groups, interpolate_group and derive_series under spec, with the
/// location and group counts filled in.
ObservationSeries preprocess_track(const RawTrack& track, const GridSpec& spec,
                                   bool standardize = true);

}  // namespace carhmm
