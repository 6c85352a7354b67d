#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "carhmm/error.hpp"
#include "carhmm/likelihood.hpp"
#include "carhmm/markov.hpp"
#include "carhmm/model.hpp"
#include "oracles.hpp"

using namespace carhmm;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("emission density matches the oracle") {
  Rng rng(11);
  for (auto family : {Family::gamma, Family::lognormal}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto m = oracle::random_model(3, rng, family);
      const auto g = oracle::random_group(4, rng);
      double d_prev = g.d0;
      for (const auto& o : g.obs) {
        for (std::size_t b = 0; b < 3; ++b) {
          CHECK(emission_logdensity(m, b, o.d, d_prev, o.theta) ==
                doctest::Approx(std::log(oracle::emission(m, b, o.d, d_prev, o.theta)))
                    .epsilon(1e-11));
        }
        d_prev = o.d;
      }
    }
  }
}

TEST_CASE("forward recursion equals path enumeration") {
  Rng rng(2024);
  for (std::size_t k = 1; k <= 3; ++k) {
    for (std::size_t n = 2; n <= 6; ++n) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto m = oracle::random_model(k, rng);
        const auto g = oracle::random_group(n, rng);
        CHECK(rel_err(group_loglik(m, g), oracle::brute_force_loglik(m, g)) < 1e-8);
      }
    }
  }
  const auto m = oracle::random_model(2, rng, Family::lognormal);
  const auto g = oracle::random_group(5, rng);
  CHECK(rel_err(group_loglik(m, g), oracle::brute_force_loglik(m, g)) < 1e-8);
}

TEST_CASE("phi = 0 reduces to an ordinary HMM") {
  Rng rng(99);
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto m = oracle::random_model(k, rng, Family::gamma, true);
    const auto g = oracle::random_group(200, rng);
    CHECK(rel_err(group_loglik(m, g), oracle::hmm_loglik(m, g)) < 1e-10);
  }
}

TEST_CASE("filter is normalized and the log-likelihood accumulates") {
  Rng rng(3);
  const auto m = oracle::random_model(3, rng);
  const auto g = oracle::random_group(50, rng);
  const auto f = forward_filter(m, g);
  REQUIRE(f.size() == g.obs.size());
  for (const auto& s : f) {
    CHECK(std::accumulate(s.alpha.begin(), s.alpha.end(), 0.0) == doctest::Approx(1.0));
  }
  CHECK(f.back().log_scale_accum == doctest::Approx(group_loglik(m, g)).epsilon(1e-13));
}

TEST_CASE("groups contribute additively") {
  Rng rng(8);
  const auto m = oracle::random_model(2, rng);
  ObservationSeries s;
  s.groups = {oracle::random_group(30, rng), oracle::random_group(12, rng)};
  CHECK(total_loglik(m, s) ==
        doctest::Approx(group_loglik(m, s.groups[0]) + group_loglik(m, s.groups[1])));
}

TEST_CASE("relabelling states leaves the likelihood unchanged") {
  Rng rng(15);
  const auto m = oracle::random_model(3, rng);
  const auto g = oracle::random_group(40, rng);
  const auto p = permute_states(m, {2, 0, 1});
  CHECK(group_loglik(p, g) == doctest::Approx(group_loglik(m, g)).epsilon(1e-12));
}

TEST_CASE("very long series do not underflow") {
  Rng rng(4);
  const auto m = presets::seal_three_state();
  const auto g = oracle::random_group(20000, rng);
  const double ll = group_loglik(m, g);
  CHECK(std::isfinite(ll));
  CHECK(ll < 0.0);
}

TEST_CASE("invalid models are rejected") {
  auto m = presets::elk_two_state();
  m.states[0].sigma = -1.0;
  Rng rng(1);
  CHECK_THROWS_AS(group_loglik(m, oracle::random_group(3, rng)), Error);
}
