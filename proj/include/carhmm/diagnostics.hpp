#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "carhmm/decode.hpp"
#include "carhmm/model.hpp"
#include "carhmm/series.hpp"

namespace carhmm::diag {

/// Per-group probability-scale residuals, aligned with the observation pairs.
using ResidualSeries = std::vector<std::vector<double>>;

/// One-step-ahead step residuals 2 F_t(d_t) - 1, where F_t mixes the state
/// step CDFs with filtered_predictive weights.
ResidualSeries step_residuals(const CarHmmModel& model, const ObservationSeries& series);
/// Same construction for deflection angles with wrapped Cauchy CDFs.
ResidualSeries angle_residuals(const CarHmmModel& model, const ObservationSeries& series);

struct Acf {
  std::vector<double> values;  // lag 1..max_lag
  double band = 0.0;           // 2 / sqrt(n)
  std::size_t n = 0;
};

/// Sample autocorrelation pooled over groups (no cross-group pairs), centred on
/// the grand mean and normalized by the total sum of squares.
Acf residual_acf(const ResidualSeries& r, std::size_t max_lag);

struct QqPoint {
  double empirical = 0.0;
  double theoretical = 0.0;
};

/// Sorted residuals against Uniform(-1, 1) plotting positions (i - 1/2) / n.
std::vector<QqPoint> qq_uniform(const ResidualSeries& r);

/// Kolmogorov-Smirnov distance between the pooled residuals and Uniform(-1, 1).
double ks_uniform(const ResidualSeries& r);

struct StateResiduals {
  std::size_t state = 0;
  std::vector<double> residuals;
  bool small_sample = false;  // fewer than 50 residuals
};

/// Residuals split by the decoded state of each observation.
std::vector<StateResiduals> partition_by_state(const ResidualSeries& r, const StatePath& path,
                                               std::size_t k);

struct LagDensity {
  std::size_t lag = 1;
  std::size_t grid_size = 128;
  double d_max = 0.0;              // grid covers [0, d_max]^2
  std::vector<double> grid;        // grid_size points per axis
  std::vector<double> density;     // row-major [ix * grid_size + iy], x = lagged step
  double bandwidth_x = 0.0;
  double bandwidth_y = 0.0;
  std::size_t n_pairs = 0;

  double at(std::size_t ix, std::size_t iy) const { return density[ix * grid_size + iy]; }
  /// Trapezoid integral over the grid.
  double mass() const;
};

/// Gaussian product-kernel density of (d_(t-lag), d_t) pairs within groups, on
/// a regular grid. Bandwidths use Silverman's bivariate rule per axis; the
/// kernel is reflected at zero since steps are positive. Throws TooShort when
/// fewer than lag + 10 steps are available.
LagDensity lag_density(const ObservationSeries& series, std::size_t lag,
                       std::size_t grid_size = 128);

struct GridPeak {
  std::size_t ix = 0;
  std::size_t iy = 0;
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

/// Strict 8-neighbour local maxima with value >= rel_threshold * peak.
std::vector<GridPeak> local_maxima(const LagDensity& d, double rel_threshold = 0.01);

}  // namespace carhmm::diag
