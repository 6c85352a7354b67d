#include "carhmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "carhmm/distributions.hpp"
#include "carhmm/error.hpp"
#include "carhmm/simulate.hpp"

namespace carhmm::diag {

namespace {

double to_residual(double cdf) {
  const double r = 2.0 * cdf - 1.0;
  return std::clamp(r, std::nextafter(-1.0, 0.0), std::nextafter(1.0, 0.0));
}

template <typename Cdf>
ResidualSeries residuals(const CarHmmModel& model, const ObservationSeries& series,
                         Cdf&& cdf) {
  ResidualSeries out;
  out.reserve(series.groups.size());
  for (const auto& g : series.groups) {
    const auto weights = filtered_predictive(model, g);
    std::vector<double> r;
    r.reserve(g.obs.size());
    double d_prev = g.d0;
    for (std::size_t t = 0; t < g.obs.size(); ++t) {
      double f = 0.0;
      for (std::size_t b = 0; b < model.k(); ++b) {
        f += weights[t][b] * cdf(model.states[b], g.obs[t], d_prev);
      }
      r.push_back(to_residual(f));
      d_prev = g.obs[t].d;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> pooled(const ResidualSeries& r) {
  std::vector<double> all;
  for (const auto& g : r) all.insert(all.end(), g.begin(), g.end());
  return all;
}

}  // namespace

ResidualSeries step_residuals(const CarHmmModel& model, const ObservationSeries& series) {
  const bool gamma = model.family == Family::gamma;
  return residuals(model, series,
                   [gamma](const StateParams& s, const StepAngle& o, double d_prev) {
                     if (gamma) {
                       return dist::gamma_cdf(
                           o.d, {(1.0 - s.phi) * s.mu_rl + s.phi * d_prev, s.sigma});
                     }
                     return dist::lognormal_cdf(
                         o.d, {(1.0 - s.phi) * s.mu_rl + s.phi * std::log(d_prev), s.sigma});
                   });
}

ResidualSeries angle_residuals(const CarHmmModel& model, const ObservationSeries& series) {
  return residuals(model, series, [](const StateParams& s, const StepAngle& o, double) {
    return dist::wc_cdf(o.theta, {s.c, s.rho});
  });
}

Acf residual_acf(const ResidualSeries& r, std::size_t max_lag) {
  const auto all = pooled(r);
  const std::size_t n = all.size();
  if (n <= max_lag) throw Error(ErrorCode::TooShort, "series shorter than max lag");
  double mean = 0.0;
  for (double v : all) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : all) ss += (v - mean) * (v - mean);
  const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
  if (*lo == *hi) throw Error(ErrorCode::DegenerateSeries, "residuals have zero variance");

  Acf acf;
  acf.n = n;
  acf.band = 2.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (const auto& g : r) {
      for (std::size_t t = 0; t + lag < g.size(); ++t) s += (g[t] - mean) * (g[t + lag] - mean);
    }
    acf.values.push_back(s / ss);
  }
  return acf;
}

std::vector<QqPoint> qq_uniform(const ResidualSeries& r) {
  auto all = pooled(r);
  std::sort(all.begin(), all.end());
  std::vector<QqPoint> out;
  const double n = static_cast<double>(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    out.push_back({all[i], -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / n});
  }
  return out;
}

double ks_uniform(const ResidualSeries& r) {
  auto all = pooled(r);
  if (all.empty()) throw Error(ErrorCode::TooShort, "no residuals");
  std::sort(all.begin(), all.end());
  const double n = static_cast<double>(all.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double f = (all[i] + 1.0) / 2.0;
    dmax = std::max({dmax, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return dmax;
}

std::vector<StateResiduals> partition_by_state(const ResidualSeries& r, const StatePath& path,
                                               std::size_t k) {
  if (r.size() != path.size()) throw Error(ErrorCode::LengthMismatch, "group count differs");
  std::vector<StateResiduals> out(k);
  for (std::size_t b = 0; b < k; ++b) out[b].state = b;
  for (std::size_t g = 0; g < r.size(); ++g) {
    if (r[g].size() != path[g].size()) {
      throw Error(ErrorCode::LengthMismatch, "path and residual lengths differ");
    }
    for (std::size_t t = 0; t < r[g].size(); ++t) out.at(path[g][t]).residuals.push_back(r[g][t]);
  }
  for (auto& s : out) s.small_sample = s.residuals.size() < 50;
  return out;
}

double LagDensity::mass() const {
  if (grid_size < 2) return 0.0;
  const double h = grid[1] - grid[0];
  double total = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double wi = (i == 0 || i + 1 == grid_size) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < grid_size; ++j) {
      const double wj = (j == 0 || j + 1 == grid_size) ? 0.5 : 1.0;
      total += wi * wj * at(i, j);
    }
  }
  return total * h * h;
}

namespace {

double silverman_bandwidth(std::vector<double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = std::min(sd, iqr / 1.349);
  if (!(spread > 0.0)) spread = sd;
  // Bivariate normal-reference rule: (4 / (d + 2))^(1/(d+4)) n^(-1/(d+4)), d = 2.
  return spread * std::pow(n, -1.0 / 6.0);
}

// Reflected Gaussian kernel weights K(g - x) + K(g + x) for each grid node.
std::vector<double> kernel_matrix(const std::vector<double>& grid,
                                  const std::vector<double>& pts, double h) {
  const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(grid.size() * pts.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t p = 0; p < pts.size(); ++p) {
      const double a = (grid[i] - pts[p]) / h;
      const double b = (grid[i] + pts[p]) / h;
      out[i * pts.size() + p] = norm * (std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b));
    }
  }
  return out;
}

}  // namespace

LagDensity lag_density(const ObservationSeries& series, std::size_t lag,
                       std::size_t grid_size) {
  if (lag == 0) throw Error(ErrorCode::DomainError, "lag must be >= 1");
  if (grid_size < 2) throw Error(ErrorCode::DomainError, "grid needs at least 2 points");
  std::vector<double> xs, ys;
  std::size_t n_steps = 0;
  for (const auto& g : series.groups) {
    std::vector<double> steps{g.d0};
    for (const auto& o : g.obs) steps.push_back(o.d);
    n_steps += steps.size();
    for (std::size_t t = lag; t < steps.size(); ++t) {
      xs.push_back(steps[t - lag]);
      ys.push_back(steps[t]);
    }
  }
  if (n_steps <= lag + 10 || xs.size() < 2) {
    throw Error(ErrorCode::TooShort, "not enough steps for the lag density");
  }

  LagDensity out;
  out.lag = lag;
  out.grid_size = grid_size;
  out.n_pairs = xs.size();
  out.bandwidth_x = silverman_bandwidth(xs);
  out.bandwidth_y = silverman_bandwidth(ys);
  const double top = std::max(*std::max_element(xs.begin(), xs.end()),
                              *std::max_element(ys.begin(), ys.end()));
  out.d_max = top + 3.0 * std::max(out.bandwidth_x, out.bandwidth_y);
  out.grid.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    out.grid[i] = out.d_max * static_cast<double>(i) / static_cast<double>(grid_size - 1);
  }

  const auto kx = kernel_matrix(out.grid, xs, out.bandwidth_x);
  const auto ky = kernel_matrix(out.grid, ys, out.bandwidth_y);
  const std::size_t n = xs.size();
  out.density.assign(grid_size * grid_size, 0.0);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double* row_x = &kx[i * n];
    for (std::size_t j = 0; j < grid_size; ++j) {
      const double* row_y = &ky[j * n];
      double s = 0.0;
      for (std::size_t p = 0; p < n; ++p) s += row_x[p] * row_y[p];
      out.density[i * grid_size + j] = s / static_cast<double>(n);
    }
  }
  return out;
}

std::vector<GridPeak> local_maxima(const LagDensity& d, double rel_threshold) {
  const std::size_t g = d.grid_size;
  const double peak = *std::max_element(d.density.begin(), d.density.end());
  std::vector<GridPeak> out;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      const double v = d.at(i, j);
      if (v < rel_threshold * peak) continue;
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const auto ni = static_cast<long>(i) + di;
          const auto nj = static_cast<long>(j) + dj;
          if (ni < 0 || nj < 0 || ni >= static_cast<long>(g) || nj >= static_cast<long>(g)) {
            continue;
          }
          if (d.at(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj)) >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) out.push_back({i, j, d.grid[i], d.grid[j], v});
    }
  }
  return out;
}

}  // namespace carhmm::diag
