#include "carhmm/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <thread>

#include "carhmm/decode.hpp"
#include "carhmm/distributions.hpp"
#include "carhmm/error.hpp"
#include "carhmm/geo.hpp"
#include "carhmm/likelihood.hpp"
#include "carhmm/rng.hpp"

namespace carhmm {

namespace {

std::size_t draw_categorical(const double* p, std::size_t k, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // Rounding left u above the running sum: take the last positive entry.
  for (std::size_t i = k; i-- > 0;)
    if (p[i] > 0.0) return i;
  return k - 1;
}

double draw_step(const CarHmmModel& m, std::size_t b, double d_prev, Rng& rng) {
  const auto& s = m.states[b];
  if (m.family == Family::gamma) {
    return dist::sample_gamma({(1.0 - s.phi) * s.mu_rl + s.phi * d_prev, s.sigma}, rng);
  }
  return dist::sample_lognormal(
      {(1.0 - s.phi) * s.mu_rl + s.phi * std::log(d_prev), s.sigma}, rng);
}

double draw_initial_step(const CarHmmModel& m, std::size_t b, Rng& rng) {
  const auto& s = m.states[b];
  if (m.family == Family::gamma) return dist::sample_gamma({s.mu_rl, s.sigma}, rng);
  return dist::sample_lognormal({s.mu_rl, s.sigma}, rng);
}

}  // namespace

SimulatedSeries simulate_series(const CarHmmModel& model, std::size_t n,
                                std::uint64_t seed) {
  model.validate();
  if (n == 0) throw Error(ErrorCode::TooShort, "simulation needs at least one pair");
  const std::size_t k = model.k();
  const auto delta = stationary(model.a);
  Rng rng(seed);
  SimulatedSeries out;
  out.seed = seed;
  out.states.reserve(n);
  out.group.obs.reserve(n);

  std::size_t state = draw_categorical(delta.data(), k, rng);
  out.group.d0 = draw_initial_step(model, state, rng);
  double d_prev = out.group.d0;
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) state = draw_categorical(&model.a.data()[state * k], k, rng);
    const double d = draw_step(model, state, d_prev, rng);
    const double theta = dist::sample_wc({model.states[state].c, model.states[state].rho}, rng);
    out.states.push_back(state);
    out.group.obs.push_back({d, theta});
    d_prev = d;
  }
  out.planar = reconstruct_planar(out.group);
  return out;
}

std::vector<PlanarPoint> reconstruct_planar(const ObservationGroup& group) {
  std::vector<PlanarPoint> pts;
  pts.reserve(group.obs.size() + 2);
  pts.push_back({0.0, 0.0});
  double hx = 1.0, hy = 0.0;
  pts.push_back({group.d0 * hx, group.d0 * hy});
  for (const auto& o : group.obs) {
    // Clockwise rotation by theta.
    const double c = std::cos(o.theta), s = std::sin(o.theta);
    const double nx = c * hx + s * hy;
    const double ny = -s * hx + c * hy;
    hx = nx;
    hy = ny;
    const auto& last = pts.back();
    pts.push_back({last.x + o.d * hx, last.y + o.d * hy});
  }
  return pts;
}

ObservationGroup planar_to_group(std::span<const PlanarPoint> points) {
  if (points.size() < 2) throw Error(ErrorCode::TooShort, "need at least two points");
  ObservationGroup g;
  auto leg = [&](std::size_t i) {
    return std::pair{points[i + 1].x - points[i].x, points[i + 1].y - points[i].y};
  };
  auto [x0, y0] = leg(0);
  g.d0 = std::hypot(x0, y0);
  double heading = std::atan2(y0, x0);
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    auto [x, y] = leg(i);
    const double h = std::atan2(y, x);
    g.obs.push_back({std::hypot(x, y), geo::wrap_angle(-(h - heading))});
    heading = h;
  }
  return g;
}

double state_error(const std::vector<std::size_t>& est,
                   const std::vector<std::size_t>& truth) {
  if (est.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "state sequences differ in length");
  }
  if (est.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < est.size(); ++i) wrong += est[i] != truth[i];
  return static_cast<double>(wrong) / static_cast<double>(est.size());
}

namespace {

std::vector<std::size_t> rank_of(const CarHmmModel& m) {
  const auto perm = state_order(m);
  std::vector<std::size_t> rank(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) rank[perm[i]] = i;
  return rank;
}

std::vector<std::size_t> relabel(const std::vector<std::size_t>& labels,
                                 const std::vector<std::size_t>& rank) {
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = rank.at(labels[i]);
  return out;
}

}  // namespace

double state_error(const std::vector<std::size_t>& est, const CarHmmModel& est_model,
                   const std::vector<std::size_t>& truth, const CarHmmModel& true_model) {
  return state_error(relabel(est, rank_of(est_model)), relabel(truth, rank_of(true_model)));
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::TooShort, "quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double standardize_group(ObservationGroup& group) {
  double total = group.d0;
  for (const auto& o : group.obs) total += o.d;
  const double mean = total / static_cast<double>(group.obs.size() + 1);
  group.d0 /= mean;
  for (auto& o : group.obs) o.d /= mean;
  return mean;
}

CarHmmModel unstandardize_model(const CarHmmModel& m, double mean_step) {
  CarHmmModel out = m;
  for (auto& s : out.states) {
    if (m.family == Family::gamma) {
      s.mu_rl *= mean_step;
      s.sigma *= mean_step;
    } else {
      s.mu_rl += std::log(mean_step);
    }
  }
  return out;
}

std::vector<std::pair<std::string, double>> flatten_parameters(const CarHmmModel& m) {
  std::vector<std::pair<std::string, double>> out;
  const std::size_t k = m.k();
  for (std::size_t b = 0; b < k; ++b) {
    const auto& s = m.states[b];
    const std::string tag = "[" + std::to_string(b + 1) + "]";
    out.emplace_back("mu_rl" + tag, s.mu_rl);
    out.emplace_back("phi" + tag, s.phi);
    out.emplace_back("sigma" + tag, s.sigma);
    out.emplace_back("c" + tag, s.c);
    out.emplace_back("rho" + tag, s.rho);
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) {
        out.emplace_back("a[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]",
                         m.a(i, j));
      }
  return out;
}

ReplicateOutcome run_replicate(const Scenario& scenario, std::size_t index) {
  Rng stream = Rng::derive(scenario.seed, index);
  const std::uint64_t sim_seed = stream.next_u64();
  FitConfig cfg = scenario.fit;
  cfg.seed = stream.next_u64();
  const std::size_t k = scenario.fit_k == 0 ? scenario.truth.k() : scenario.fit_k;

  SimulatedSeries sim = simulate_series(scenario.truth, scenario.track_length, sim_seed);
  ObservationSeries series;
  double mean_step = 1.0;
  if (scenario.standardize) mean_step = standardize_group(sim.group);
  series.groups.push_back(sim.group);
  series.n_groups = series.n_raw_groups = 1;
  series.mean_step_km = mean_step;

  ReplicateOutcome out;
  out.index = index;
  const FitResult fit = fit_multistart(series, k, cfg);
  out.converged = fit.converged;
  out.degenerate = fit.degenerate;
  out.restarts_used = fit.restarts_used;
  out.included = fit.converged && !fit.degenerate;
  out.loglik = fit.loglik;
  out.estimate = unstandardize_model(fit.model, mean_step);

  const CarHmmModel truth_std = scenario.standardize
                                    ? unstandardize_model(scenario.truth, 1.0 / mean_step)
                                    : scenario.truth;
  try {
    out.loglik_truth = total_loglik(truth_std, series);
  } catch (const Error&) {
    out.loglik_truth = -std::numeric_limits<double>::infinity();
  }

  const auto path = viterbi_group(fit.model, series.groups[0]);
  out.state_error = state_error(path, fit.model, sim.states, scenario.truth);
  return out;
}

StudyResult run_study(const Scenario& scenario, unsigned jobs) {
  StudyResult result;
  result.name = scenario.name;
  result.replicates = scenario.n_sims;
  result.outcomes.resize(scenario.n_sims);

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(scenario.n_sims);
  auto worker = [&] {
    for (std::size_t i = next++; i < scenario.n_sims; i = next++) {
      try {
        result.outcomes[i] = run_replicate(scenario, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> errs;
  for (std::size_t i = 0; i < scenario.n_sims; ++i) {
    if (errors[i]) {
      // A replicate with no finite objective at all counts as non-converged.
      result.outcomes[i] = ReplicateOutcome{};
      result.outcomes[i].index = i;
      continue;
    }
    if (result.outcomes[i].included) errs.push_back(result.outcomes[i].state_error);
  }
  result.included = errs.size();
  result.nonconverged = scenario.n_sims - result.included;
  if (!errs.empty()) {
    result.error_q1 = quantile(errs, 0.25);
    result.error_median = quantile(errs, 0.5);
    result.error_q3 = quantile(errs, 0.75);
  }

  const std::size_t k = scenario.fit_k == 0 ? scenario.truth.k() : scenario.fit_k;
  if (k == scenario.truth.k() && !errs.empty()) {
    const auto truth = flatten_parameters(order_states(scenario.truth));
    for (std::size_t p = 0; p < truth.size(); ++p) {
      std::vector<double> diffs;
      for (const auto& o : result.outcomes) {
        if (!o.included) continue;
        double diff = flatten_parameters(o.estimate)[p].second - truth[p].second;
        if (truth[p].first.starts_with("c[")) diff = geo::wrap_angle(diff);
        diffs.push_back(diff);
      }
      result.bias.push_back({truth[p].first, truth[p].second, median(diffs)});
    }
  }
  return result;
}

}  // namespace carhmm
