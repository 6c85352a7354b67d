#include "carhmm/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "carhmm/error.hpp"

namespace carhmm {

void GridSpec::validate() const {
  if (!(time_step > 0.0) || !std::isfinite(time_step)) {
    throw Error(ErrorCode::DomainError, "time_step must be > 0");
  }
  if (!(group_cutoff >= time_step) || !std::isfinite(group_cutoff)) {
    throw Error(ErrorCode::DomainError, "group_cutoff must be >= time_step");
  }
}

std::vector<std::vector<TrackRecord>> split_groups(std::span<const TrackRecord> records,
                                                   double cutoff) {
  if (!(cutoff > 0.0)) throw Error(ErrorCode::DomainError, "cutoff must be > 0");
  std::vector<std::vector<TrackRecord>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i == 0 || records[i].time - records[i - 1].time > cutoff) groups.emplace_back();
    groups.back().push_back(records[i]);
  }
  return groups;
}

std::size_t grid_point_count(double span_minutes, double time_step) {
  if (span_minutes < 0.0) return 0;
  // The relative slack keeps exact multiples from losing their last point.
  return static_cast<std::size_t>(std::floor(span_minutes / time_step * (1.0 + 1e-12))) + 1;
}

std::vector<geo::LatLon> interpolate_group(std::span<const TrackRecord> group,
                                           double time_step) {
  if (!(time_step > 0.0)) throw Error(ErrorCode::DomainError, "time_step must be > 0");
  if (group.empty()) throw Error(ErrorCode::DegenerateGroup, "empty group");
  const double t0 = group.front().time;
  const std::size_t m = grid_point_count(group.back().time - t0, time_step);
  if (m < 2) throw Error(ErrorCode::DegenerateGroup, "fewer than two grid points");

  std::vector<geo::LatLon> out;
  out.reserve(m);
  std::size_t j = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double t = std::min(t0 + static_cast<double>(i) * time_step, group.back().time);
    while (j + 1 < group.size() && group[j + 1].time < t) ++j;
    if (j + 1 >= group.size()) {
      out.push_back({group.back().lat, group.back().lon});
      continue;
    }
    const auto& a = group[j];
    const auto& b = group[j + 1];
    const double w = (t - a.time) / (b.time - a.time);
    out.push_back({a.lat + w * (b.lat - a.lat), a.lon + w * (b.lon - a.lon)});
  }
  return out;
}

ObservationSeries derive_series(const std::vector<std::vector<geo::LatLon>>& groups,
                                bool standardize) {
  struct Raw {
    std::vector<double> steps;
    std::vector<double> angles;  // angles[i] is the turn between steps i and i+1
  };
  std::vector<Raw> raws;
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& pts : groups) {
    if (pts.size() < 3) continue;
    Raw r;
    std::vector<std::optional<double>> bearing;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double d = geo::great_circle_km(pts[i], pts[i + 1]);
      r.steps.push_back(d);
      const bool distinct = pts[i].lat != pts[i + 1].lat || pts[i].lon != pts[i + 1].lon;
      if (distinct && d > 0.0) {
        bearing.push_back(geo::forward_bearing(pts[i], pts[i + 1]));
      } else {
        bearing.push_back(bearing.empty() ? std::nullopt : bearing.back());
      }
    }
    for (std::size_t i = 0; i + 1 < bearing.size(); ++i) {
      r.angles.push_back(bearing[i] && bearing[i + 1]
                             ? geo::wrap_angle(*bearing[i + 1] - *bearing[i])
                             : 0.0);
    }
    for (double d : r.steps) total += d;
    count += r.steps.size();
    raws.push_back(std::move(r));
  }
  if (raws.empty() || !(total > 0.0)) {
    throw Error(ErrorCode::AllGroupsDegenerate, "no group has three distinct locations");
  }

  const double floor = 1e-8 * total / static_cast<double>(count);
  double floored_total = 0.0;
  for (auto& r : raws)
    for (double& d : r.steps) {
      d = std::max(d, floor);
      floored_total += d;
    }
  const double mean = floored_total / static_cast<double>(count);
  const double scale = standardize ? mean : 1.0;

  ObservationSeries s;
  s.mean_step_km = scale;
  for (const auto& r : raws) {
    ObservationGroup g;
    g.d0 = r.steps[0] / scale;
    for (std::size_t i = 0; i < r.angles.size(); ++i) {
      g.obs.push_back({r.steps[i + 1] / scale, r.angles[i]});
    }
    s.groups.push_back(std::move(g));
  }
  s.n_groups = s.groups.size();
  s.n_raw_groups = groups.size();
  for (const auto& g : groups) s.n_interp_locations += g.size();
  return s;
}

GridMetrics grid_metrics(const RawTrack& track, const GridSpec& spec) {
  spec.validate();
  GridMetrics m;
  m.n_raw_locations = track.records.size();
  const auto groups = split_groups(track.records, spec.group_cutoff);
  m.n_groups = groups.size();
  for (const auto& g : groups) {
    m.n_interp_locations += grid_point_count(g.back().time - g.front().time, spec.time_step);
  }
  const auto interp = static_cast<double>(m.n_interp_locations);
  const auto raw = static_cast<double>(m.n_raw_locations);
  m.n_prop = interp / raw;
  m.n_adj = (interp - 2.0 * static_cast<double>(m.n_groups)) / (raw - 2.0);
  return m;
}

GridSearchResult choose_grid(const RawTrack& track, std::span<const double> steps) {
  if (steps.empty()) throw Error(ErrorCode::DomainError, "no candidate time steps");
  GridSearchResult res;
  bool have = false;
  for (double step : steps) {
    for (int i = 0; i <= 20; ++i) {
      GridCandidate c;
      c.spec = {step, step * (20.0 + i) / 20.0};
      c.metrics = grid_metrics(track, c.spec);
      c.objective = std::max(std::abs(c.metrics.n_prop - 1.0), std::abs(c.metrics.n_adj - 1.0));
      res.table.push_back(c);
      const auto& b = res.best;
      const double tol = 1e-12;
      bool better = !have || c.objective < b.objective - tol;
      if (have && std::abs(c.objective - b.objective) <= tol) {
        better = c.spec.time_step > b.spec.time_step ||
                 (c.spec.time_step == b.spec.time_step &&
                  c.spec.group_cutoff < b.spec.group_cutoff);
      }
      if (better) {
        res.best = c;
        have = true;
      }
    }
  }
  return res;
}

ObservationSeries preprocess_track(const RawTrack& track, const GridSpec& spec,
                                   bool standardize) {
  spec.validate();
  const auto groups = split_groups(track.records, spec.group_cutoff);
  std::vector<std::vector<geo::LatLon>> interp;
  std::size_t n_interp = 0;
  for (const auto& g : groups) {
    const std::size_t m = grid_point_count(g.back().time - g.front().time, spec.time_step);
    n_interp += m;
    if (m < 3) continue;
    interp.push_back(interpolate_group(g, spec.time_step));
  }
  if (interp.empty()) {
    throw Error(ErrorCode::AllGroupsDegenerate, "no group spans three grid points");
  }
  ObservationSeries s = derive_series(interp, standardize);
  s.time_step_min = spec.time_step;
  s.n_raw_locations = track.records.size();
  s.n_interp_locations = n_interp;
  s.n_raw_groups = groups.size();
  return s;
}

}  // namespace carhmm
