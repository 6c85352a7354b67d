#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls the library's density, likelihood or decoding
// code; densities come straight from boost::math or the closed forms.

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "carhmm/model.hpp"
#include "carhmm/rng.hpp"
#include "carhmm/series.hpp"

namespace oracle {

using carhmm::CarHmmModel;
using carhmm::ObservationGroup;

inline double emission(const CarHmmModel& m, std::size_t b, double d, double d_prev,
                       double theta) {
  const auto& s = m.states[b];
  double step = 0.0;
  if (m.family == carhmm::Family::gamma) {
    const double mean = (1.0 - s.phi) * s.mu_rl + s.phi * d_prev;
    const double shape = mean * mean / (s.sigma * s.sigma);
    const double scale = s.sigma * s.sigma / mean;
    step = boost::math::pdf(boost::math::gamma_distribution<double>(shape, scale), d);
  } else {
    const double loc = (1.0 - s.phi) * s.mu_rl + s.phi * std::log(d_prev);
    step = boost::math::pdf(boost::math::lognormal_distribution<double>(loc, s.sigma), d);
  }
  const double angle = (1.0 - s.rho * s.rho) /
                       (2.0 * std::numbers::pi *
                        (1.0 + s.rho * s.rho - 2.0 * s.rho * std::cos(theta - s.c)));
  return step * angle;
}

/// Stationary distribution by power iteration on delta <- delta A.
inline std::vector<double> stationary(const CarHmmModel& m) {
  const std::size_t k = m.k();
  std::vector<double> d(k, 1.0 / static_cast<double>(k));
  for (int it = 0; it < 200000; ++it) {
    std::vector<double> next(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) next[j] += d[i] * m.a(i, j);
    double diff = 0.0;
    for (std::size_t j = 0; j < k; ++j) diff = std::max(diff, std::abs(next[j] - d[j]));
    d = next;
    if (diff < 1e-16) break;
  }
  return d;
}

/// Log-likelihood by summing the joint probability of every state path.
inline double brute_force_loglik(const CarHmmModel& m, const ObservationGroup& g) {
  const std::size_t k = m.k();
  const std::size_t n = g.obs.size();
  const auto delta = stationary(m);
  std::vector<std::size_t> path(n, 0);
  long double total = 0.0L;
  while (true) {
    long double p = delta[path[0]];
    double d_prev = g.d0;
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) p *= m.a(path[t - 1], path[t]);
      p *= emission(m, path[t], g.obs[t].d, d_prev, g.obs[t].theta);
      d_prev = g.obs[t].d;
    }
    total += p;
    std::size_t i = 0;
    while (i < n && ++path[i] == k) path[i++] = 0;
    if (i == n) break;
  }
  return static_cast<double>(std::log(total));
}

/// Highest-probability path by enumeration; earlier paths in lexicographic
/// order win exact ties.
inline std::vector<std::size_t> brute_force_viterbi(const CarHmmModel& m,
                                                    const ObservationGroup& g) {
  const std::size_t k = m.k();
  const std::size_t n = g.obs.size();
  const auto delta = stationary(m);
  std::vector<std::size_t> path(n, 0), best;
  double best_score = -INFINITY;
  // The last position varies fastest: iteration is lexicographic in (b_1, ..., b_n).
  while (true) {
    double s = std::log(delta[path[0]]);
    double d_prev = g.d0;
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) s += std::log(m.a(path[t - 1], path[t]));
      s += std::log(emission(m, path[t], g.obs[t].d, d_prev, g.obs[t].theta));
      d_prev = g.obs[t].d;
    }
    if (s > best_score) {
      best_score = s;
      best = path;
    }
    std::size_t i = n;
    while (i > 0 && ++path[i - 1] == k) path[--i] = 0;
    if (i == 0) break;
  }
  return best;
}

/// Textbook HMM forward algorithm in log space with i.i.d. gamma steps,
/// for models whose phi are all zero.
inline double hmm_loglik(const CarHmmModel& m, const ObservationGroup& g) {
  const std::size_t k = m.k();
  const auto delta = stationary(m);
  auto log_f = [&](std::size_t b, const carhmm::StepAngle& o) {
    const auto& s = m.states[b];
    const double shape = s.mu_rl * s.mu_rl / (s.sigma * s.sigma);
    const double rate = s.mu_rl / (s.sigma * s.sigma);
    const double step = shape * std::log(rate) - std::lgamma(shape) +
                        (shape - 1.0) * std::log(o.d) - rate * o.d;
    const double angle =
        std::log1p(-s.rho * s.rho) - std::log(2.0 * std::numbers::pi) -
        std::log(1.0 + s.rho * s.rho - 2.0 * s.rho * std::cos(o.theta - s.c));
    return step + angle;
  };
  auto lse = [](const std::vector<double>& v) {
    double mx = -INFINITY;
    for (double x : v) mx = std::max(mx, x);
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
  };
  std::vector<double> la(k);
  for (std::size_t b = 0; b < k; ++b) la[b] = std::log(delta[b]) + log_f(b, g.obs[0]);
  for (std::size_t t = 1; t < g.obs.size(); ++t) {
    std::vector<double> next(k);
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> terms(k);
      for (std::size_t i = 0; i < k; ++i) terms[i] = la[i] + std::log(m.a(i, j));
      next[j] = lse(terms) + log_f(j, g.obs[t]);
    }
    la = next;
  }
  return lse(la);
}

/// Wrapped Cauchy CDF from -pi by the continuous antiderivative
/// atan(K tan(u / 2)) / pi + floor((u + pi) / 2pi), K = (1 + rho) / (1 - rho).
inline double wc_cdf(double theta, double c, double rho) {
  const double pi = std::numbers::pi;
  const double big_k = (1.0 + rho) / (1.0 - rho);
  auto h = [&](double u) {
    return std::atan(big_k * std::tan(u / 2.0)) / pi + std::floor((u + pi) / (2.0 * pi));
  };
  return h(theta - c) - h(-pi - c);
}

inline CarHmmModel random_model(std::size_t k, carhmm::Rng& rng,
                                carhmm::Family family = carhmm::Family::gamma,
                                bool phi_zero = false) {
  CarHmmModel m;
  m.family = family;
  for (std::size_t b = 0; b < k; ++b) {
    carhmm::StateParams s;
    s.mu_rl = family == carhmm::Family::gamma ? rng.uniform(0.2, 3.0) : rng.uniform(-1.0, 1.0);
    s.phi = phi_zero ? 0.0 : rng.uniform(0.0, 0.95);
    s.sigma = rng.uniform(0.2, 1.0);
    s.c = rng.uniform(-3.0, 3.0);
    s.rho = rng.uniform(0.05, 0.95);
    m.states.push_back(s);
  }
  std::vector<std::vector<double>> rows(k, std::vector<double>(k));
  for (auto& r : rows) {
    double tot = 0.0;
    for (auto& x : r) tot += (x = rng.uniform(0.05, 1.0));
    for (auto& x : r) x /= tot;
  }
  m.a = carhmm::TransitionMatrix(rows);
  return m;
}

inline ObservationGroup random_group(std::size_t n, carhmm::Rng& rng) {
  ObservationGroup g;
  g.d0 = rng.uniform(0.1, 3.0);
  for (std::size_t t = 0; t < n; ++t) {
    g.obs.push_back({rng.uniform(0.05, 3.5), rng.uniform(-std::numbers::pi, std::numbers::pi)});
  }
  return g;
}

}  // namespace oracle
