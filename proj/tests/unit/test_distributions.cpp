#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "carhmm/distributions.hpp"
#include "carhmm/error.hpp"
#include "carhmm/geo.hpp"
#include "carhmm/rng.hpp"

using namespace carhmm;
using namespace carhmm::dist;
using carhmm::geo::kPi;

namespace {

double integrate(auto f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

}  // namespace

TEST_CASE("gamma mean/sd parameterization") {
  const GammaMeanSd p{2.0, 1.0};
  CHECK(p.shape() == doctest::Approx(4.0));
  CHECK(p.scale() == doctest::Approx(0.5));
  // scipy.stats.gamma(a=4, scale=0.5).cdf(2)
  CHECK(gamma_cdf(2.0, p) == doctest::Approx(0.566529879633291).epsilon(1e-12));
  // scipy.stats.gamma(a=(1.2/0.5)**2, scale=0.5**2/1.2).logpdf(1.7)
  CHECK(gamma_logpdf(1.7, {1.2, 0.5}) == doctest::Approx(-0.9823046674764027).epsilon(1e-12));
  CHECK(gamma_logpdf(1.0, {1.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(gamma_cdf(std::log(2.0), {1.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-14));
  // scipy.stats.gamma logpdf at the first seal state
  CHECK(gamma_logpdf(0.398, {0.398, 0.279}) == doctest::Approx(0.316964346833565).epsilon(1e-10));
  CHECK(gamma_cdf(1e-300, p) == doctest::Approx(0.0));
  CHECK(gamma_cdf(1e6, p) == doctest::Approx(1.0));
  CHECK_THROWS_AS(gamma_cdf(0.0, p), Error);
  CHECK_THROWS_AS(gamma_logpdf(-1.0, p), Error);
  CHECK_THROWS_AS(gamma_logpdf(1.0, {-1.0, 1.0}), Error);
  CHECK_THROWS_AS(gamma_cdf(1.0, {1.0, 0.0}), Error);
}

TEST_CASE("gamma pdf integrates to one") {
  for (double mean : {0.2, 1.0, 2.0}) {
    for (double sd : {0.16, 0.3, 0.5}) {
      const GammaMeanSd p{mean, sd};
      // tanh-sinh handles the integrable x^(shape - 1) singularity when shape < 1.
      boost::math::quadrature::tanh_sinh<double> ts;
      const double mass = ts.integrate(
          [&](double x) { return x > 0.0 ? std::exp(gamma_logpdf(x, p)) : 0.0; }, 0.0,
          mean + 80.0 * sd);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("wrapped Cauchy density and CDF") {
  // Direct evaluation of (1/2pi)(1-rho^2)/(1+rho^2-2 rho cos(theta-c)).
  CHECK(wc_logpdf(0.3, {-0.2, 0.7}) == doctest::Approx(-1.169458512534358).epsilon(1e-12));
  CHECK(wc_logpdf(0.5, {0.0, 0.906}) == doctest::Approx(-2.0905046268947416).epsilon(1e-12));
  CHECK(std::exp(wc_logpdf(1.1, {1.1, 0.3})) ==
        doctest::Approx(1.3 / 0.7 / (2 * kPi)).epsilon(1e-12));
  CHECK(std::exp(wc_logpdf(-2.0, {0.5, 1e-12})) == doctest::Approx(1 / (2 * kPi)).epsilon(1e-9));
  for (double rho : {0.01, 0.5, 0.99}) {
    const WrappedCauchy p{0.4, rho};
    const double lo = integrate([&](double t) { return std::exp(wc_logpdf(t, p)); }, -kPi, 0.4);
    const double hi = integrate([&](double t) { return std::exp(wc_logpdf(t, p)); }, 0.4, kPi);
    CHECK(lo + hi == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Adaptive quadrature oracles (scipy.integrate.quad).
  CHECK(wc_cdf(kPi / 2, {0.0, 0.5}) == doctest::Approx(0.8975836176504333).epsilon(1e-10));
  CHECK(wc_cdf(-2.0, {1.0, 0.8}) == doctest::Approx(0.02180586795677817).epsilon(1e-10));
  CHECK(wc_cdf(3.0, {-2.5, 0.9}) == doctest::Approx(0.990350656037321).epsilon(1e-10));
  CHECK(wc_cdf(kPi, {1.0, 0.3}) == doctest::Approx(1.0));
  CHECK(wc_cdf(-kPi + 1e-12, {1.0, 0.3}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(wc_logpdf(0.0, {0.0, 1.0}), Error);
  CHECK_THROWS_AS(wc_cdf(0.0, {0.0, 0.0}), Error);
}

TEST_CASE("CDF derivatives match densities") {
  const double h = 1e-5;
  for (double x : {0.3, 1.0, 2.2}) {
    const GammaMeanSd p{1.1, 0.4};
    const double fd = (gamma_cdf(x + h, p) - gamma_cdf(x - h, p)) / (2 * h);
    CHECK(fd == doctest::Approx(std::exp(gamma_logpdf(x, p))).epsilon(1e-6));
  }
  for (double t : {-2.9, -1.0, 0.0, 0.7, 2.5}) {
    const WrappedCauchy p{0.5, 0.6};
    const double fd = (wc_cdf(t + h, p) - wc_cdf(t - h, p)) / (2 * h);
    CHECK(fd == doctest::Approx(std::exp(wc_logpdf(t, p))).epsilon(1e-6));
  }
  for (double x : {0.5, 1.3, 3.0}) {
    const LogNormalAR p{0.1, 0.4};
    const double fd = (lognormal_cdf(x + h, p) - lognormal_cdf(x - h, p)) / (2 * h);
    CHECK(fd == doctest::Approx(std::exp(lognormal_logpdf(x, p))).epsilon(1e-6));
  }
}

TEST_CASE("log-normal") {
  // scipy.stats.lognorm(s=0.4, scale=exp(0.1)).cdf(1.3)
  CHECK(lognormal_cdf(1.3, {0.1, 0.4}) == doctest::Approx(0.657595877832242).epsilon(1e-12));
  CHECK_THROWS_AS(lognormal_logpdf(-1.0, {0.0, 1.0}), Error);
}

TEST_CASE("sampler moments") {
  Rng rng(42);
  const int n = 100000;
  double s = 0, ss = 0, cs = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_gamma({2.0, 1.0}, rng);
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
  CHECK(std::sqrt(ss / n - mean * mean) == doctest::Approx(1.0).epsilon(0.02));
  for (int i = 0; i < n; ++i) {
    const double t = sample_wc({0.0, 0.8}, rng);
    CHECK_MESSAGE((t > -kPi && t <= kPi), "sample outside (-pi, pi]");
    cs += std::cos(t);
  }
  CHECK(cs / n == doctest::Approx(0.8).epsilon(0.0125));
}

TEST_CASE("samplers are deterministic under a fixed seed") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_gamma({1.0, 0.3}, a) == sample_gamma({1.0, 0.3}, b));
    CHECK(sample_wc({0.2, 0.4}, a) == sample_wc({0.2, 0.4}, b));
    CHECK(sample_lognormal({0.0, 0.5}, a) == sample_lognormal({0.0, 0.5}, b));
  }
}
