#pragma once

#include "carhmm/rng.hpp"

namespace carhmm::dist {

/// Gamma distribution parameterized by mean and standard deviation.
/// shape = (mean / sd)^2, scale = sd^2 / mean.
struct GammaMeanSd {
  double mean = 1.0;
  double sd = 1.0;

  double shape() const noexcept { return (mean / sd) * (mean / sd); }
  double scale() const noexcept { return sd * sd / mean; }
};

/// Wrapped Cauchy on (-pi, pi] with center c and concentration rho in (0, 1).
struct WrappedCauchy {
  double c = 0.0;
  double rho = 0.5;
};

/// Log-normal distribution of a step: log(x) ~ Normal(mean_log, sd_log).
struct LogNormalAR {
  double mean_log = 0.0;
  double sd_log = 1.0;
};

double gamma_logpdf(double x, const GammaMeanSd& p);
double gamma_cdf(double x, const GammaMeanSd& p);

double wc_logpdf(double theta, const WrappedCauchy& p);
/// Integral of the density from -pi to theta; theta is wrapped into (-pi, pi].
double wc_cdf(double theta, const WrappedCauchy& p);

double lognormal_logpdf(double x, const LogNormalAR& p);
double lognormal_cdf(double x, const LogNormalAR& p);

// Samplers are inverse-CDF transforms of one uniform draw each.
double sample_gamma(const GammaMeanSd& p, Rng& rng);
double sample_wc(const WrappedCauchy& p, Rng& rng);
double sample_lognormal(const LogNormalAR& p, Rng& rng);

}  // namespace carhmm::dist
