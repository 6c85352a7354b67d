#include "carhmm/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "carhmm/distributions.hpp"
#include "carhmm/error.hpp"

namespace carhmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct StateConstants {
  double mu = 0.0, phi = 0.0, var = 1.0, log_sigma = 0.0;
  double cos_c = 1.0, sin_c = 0.0, wc_norm = 0.0, rho = 0.5, one_plus_rho2 = 1.25;
};

std::vector<StateConstants> prepare(const CarHmmModel& m) {
  std::vector<StateConstants> out(m.k());
  for (std::size_t b = 0; b < m.k(); ++b) {
    const auto& s = m.states[b];
    auto& c = out[b];
    c.mu = s.mu_rl;
    c.phi = s.phi;
    c.var = s.sigma * s.sigma;
    c.log_sigma = std::log(s.sigma);
    c.cos_c = std::cos(s.c);
    c.sin_c = std::sin(s.c);
    c.rho = s.rho;
    c.one_plus_rho2 = 1.0 + s.rho * s.rho;
    c.wc_norm = std::log1p(-s.rho * s.rho) - kLog2Pi;
  }
  return out;
}

}  // namespace

double emission_logdensity(const CarHmmModel& model, std::size_t b, double d,
                           double d_prev, double theta) {
  const auto& s = model.states.at(b);
  const dist::WrappedCauchy wc{s.c, s.rho};
  if (model.family == Family::gamma) {
    if (!(d_prev > 0.0)) {
      throw Error(ErrorCode::DomainError, "previous step must be > 0");
    }
    const dist::GammaMeanSd g{(1.0 - s.phi) * s.mu_rl + s.phi * d_prev, s.sigma};
    return dist::gamma_logpdf(d, g) + dist::wc_logpdf(theta, wc);
  }
  if (!(d_prev > 0.0)) {
    throw Error(ErrorCode::DomainError, "previous step must be > 0");
  }
  const dist::LogNormalAR ln{(1.0 - s.phi) * s.mu_rl + s.phi * std::log(d_prev), s.sigma};
  return dist::lognormal_logpdf(d, ln) + dist::wc_logpdf(theta, wc);
}

void emission_table(const CarHmmModel& model, const ObservationGroup& group,
                    std::vector<double>& out) {
  const std::size_t k = model.k();
  const std::size_t n = group.obs.size();
  const auto consts = prepare(model);
  out.resize(n * k);
  const bool gamma = model.family == Family::gamma;
  double d_prev = group.d0;
  for (std::size_t t = 0; t < n; ++t) {
    const double d = group.obs[t].d;
    const double theta = group.obs[t].theta;
    const double log_d = std::log(d);
    const double log_d_prev = std::log(d_prev);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    for (std::size_t b = 0; b < k; ++b) {
      const auto& c = consts[b];
      double step;
      if (gamma) {
        const double mean = (1.0 - c.phi) * c.mu + c.phi * d_prev;
        const double shape = mean * mean / c.var;
        const double scale = c.var / mean;
        step = (shape - 1.0) * log_d - d / scale - std::lgamma(shape) -
               shape * std::log(scale);
      } else {
        const double mean_log = (1.0 - c.phi) * c.mu + c.phi * log_d_prev;
        const double z = (log_d - mean_log) / std::sqrt(c.var);
        step = -0.5 * z * z - c.log_sigma - 0.5 * kLog2Pi - log_d;
      }
      const double cos_diff = ct * c.cos_c + st * c.sin_c;
      const double angle = c.wc_norm - std::log(c.one_plus_rho2 - 2.0 * c.rho * cos_diff);
      double v = step + angle;
      if (!(v >= kLogDensityFloor)) v = kLogDensityFloor;  // also maps NaN
      out[t * k + b] = v;
    }
    d_prev = d;
  }
}

namespace {

// One scaled forward pass. Calls visit(t, alpha, loglik) after each step.
template <typename Visit>
double forward_pass(const CarHmmModel& model, const ObservationGroup& group,
                    const std::vector<double>& delta, std::vector<double>& table,
                    Visit&& visit) {
  const std::size_t k = model.k();
  const std::size_t n = group.obs.size();
  emission_table(model, group, table);
  std::vector<double> alpha(delta.begin(), delta.end());
  std::vector<double> next(k);
  double ll = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double* row = &table[t * k];
    if (t > 0) {
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += alpha[i] * model.a(i, j);
        next[j] = s;
      }
      alpha.swap(next);
    }
    const double m = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      alpha[j] *= std::exp(row[j] - m);
      total += alpha[j];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw Error(ErrorCode::NumericUnderflow,
                  "forward filter lost all mass at observation " + std::to_string(t + 1));
    }
    for (double& v : alpha) v /= total;
    ll += std::log(total) + m;
    visit(t, alpha, ll);
  }
  return ll;
}

}  // namespace

std::vector<ForwardState> forward_filter(const CarHmmModel& model,
                                         const ObservationGroup& group) {
  model.validate();
  const auto delta = stationary(model.a);
  std::vector<double> table;
  std::vector<ForwardState> out;
  out.reserve(group.obs.size());
  forward_pass(model, group, delta, table,
               [&](std::size_t, const std::vector<double>& alpha, double ll) {
                 out.push_back({alpha, ll});
               });
  return out;
}

double group_loglik(const CarHmmModel& model, const ObservationGroup& group) {
  model.validate();
  const auto delta = stationary(model.a);
  std::vector<double> table;
  return forward_pass(model, group, delta, table,
                      [](std::size_t, const std::vector<double>&, double) {});
}

double total_loglik(const CarHmmModel& model, std::span<const ObservationGroup> groups) {
  model.validate();
  const auto delta = stationary(model.a);
  std::vector<double> table;
  double ll = 0.0;
  for (const auto& g : groups) {
    if (g.obs.empty()) continue;
    ll += forward_pass(model, g, delta, table,
                       [](std::size_t, const std::vector<double>&, double) {});
  }
  return ll;
}

double total_loglik(const CarHmmModel& model, const ObservationSeries& series) {
  return total_loglik(model, std::span<const ObservationGroup>(series.groups));
}

}  // namespace carhmm
