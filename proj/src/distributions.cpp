#include "carhmm/distributions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "carhmm/error.hpp"
#include "carhmm/geo.hpp"

namespace carhmm::dist {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLog2Pi = 1.8378770664093454836;

void check_gamma(const GammaMeanSd& p) {
  if (!(p.mean > 0.0) || !(p.sd > 0.0) || !std::isfinite(p.mean) ||
      !std::isfinite(p.sd)) {
    throw Error(ErrorCode::DomainError,
                "gamma requires mean > 0 and sd > 0, got mean=" +
                    std::to_string(p.mean) + " sd=" + std::to_string(p.sd));
  }
}

void check_wc(const WrappedCauchy& p) {
  if (!(p.rho > 0.0 && p.rho < 1.0)) {
    throw Error(ErrorCode::DomainError, "wrapped Cauchy requires rho in (0,1)");
  }
}

void check_lognormal(const LogNormalAR& p) {
  if (!(p.sd_log > 0.0) || !std::isfinite(p.mean_log)) {
    throw Error(ErrorCode::DomainError, "log-normal requires sd_log > 0");
  }
}

// Continuous antiderivative of the centered wrapped Cauchy density on the real
// line, zero at -pi.
double wc_primitive(double x, double ratio) {
  const double n = std::floor((x + kPi) / (2.0 * kPi));
  double w = x - 2.0 * kPi * n;  // [-pi, pi)
  if (w < -kPi) w = -kPi;
  const double g = 0.5 + std::atan(ratio * std::tan(0.5 * w)) / kPi;
  return n + g;
}

}  // namespace

double gamma_logpdf(double x, const GammaMeanSd& p) {
  check_gamma(p);
  if (!(x > 0.0)) {
    throw Error(ErrorCode::DomainError, "gamma density evaluated at x <= 0");
  }
  const double shape = p.shape();
  const double scale = p.scale();
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
         shape * std::log(scale);
}

double gamma_cdf(double x, const GammaMeanSd& p) {
  check_gamma(p);
  if (!(x > 0.0)) {
    throw Error(ErrorCode::DomainError, "gamma CDF evaluated at x <= 0");
  }
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(p.shape(), x / p.scale());
}

double wc_logpdf(double theta, const WrappedCauchy& p) {
  check_wc(p);
  const double r = p.rho;
  return std::log1p(-r * r) - kLog2Pi -
         std::log(1.0 + r * r - 2.0 * r * std::cos(theta - p.c));
}

double wc_cdf(double theta, const WrappedCauchy& p) {
  check_wc(p);
  const double t = geo::wrap_angle(theta);
  if (t == kPi) return 1.0;
  const double ratio = (1.0 + p.rho) / (1.0 - p.rho);
  const double v = wc_primitive(t - p.c, ratio) - wc_primitive(-kPi - p.c, ratio);
  return std::min(1.0, std::max(0.0, v));
}

double lognormal_logpdf(double x, const LogNormalAR& p) {
  check_lognormal(p);
  if (!(x > 0.0)) {
    throw Error(ErrorCode::DomainError, "log-normal density evaluated at x <= 0");
  }
  const double lx = std::log(x);
  const double z = (lx - p.mean_log) / p.sd_log;
  return -0.5 * z * z - std::log(p.sd_log) - 0.5 * kLog2Pi - lx;
}

double lognormal_cdf(double x, const LogNormalAR& p) {
  check_lognormal(p);
  if (!(x > 0.0)) {
    throw Error(ErrorCode::DomainError, "log-normal CDF evaluated at x <= 0");
  }
  const double z = (std::log(x) - p.mean_log) / p.sd_log;
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double sample_gamma(const GammaMeanSd& p, Rng& rng) {
  check_gamma(p);
  const double u = rng.uniform();
  double x = boost::math::gamma_p_inv(p.shape(), u) * p.scale();
  // Extreme lower tail of very small shapes can underflow.
  if (!(x > 0.0)) x = std::numeric_limits<double>::min();
  return x;
}

double sample_wc(const WrappedCauchy& p, Rng& rng) {
  check_wc(p);
  const double u = rng.uniform();
  const double ratio = (1.0 + p.rho) / (1.0 - p.rho);
  const double centered = 2.0 * std::atan(std::tan(kPi * (u - 0.5)) / ratio);
  return geo::wrap_angle(p.c + centered);
}

double sample_lognormal(const LogNormalAR& p, Rng& rng) {
  check_lognormal(p);
  const double u = rng.uniform();
  const boost::math::normal_distribution<double> standard;
  return std::exp(p.mean_log + p.sd_log * boost::math::quantile(standard, u));
}

}  // namespace carhmm::dist
