#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "carhmm/error.hpp"
#include "carhmm/markov.hpp"
#include "carhmm/model.hpp"
#include "oracles.hpp"

using namespace carhmm;

TEST_CASE("transition matrix validation") {
  CHECK_THROWS_AS(TransitionMatrix({{0.5, 0.4}, {0.5, 0.5}}), Error);
  CHECK_THROWS_AS(TransitionMatrix({{1.1, -0.1}, {0.5, 0.5}}), Error);
  CHECK_THROWS_AS(TransitionMatrix({{1.0}, {0.5, 0.5}}), Error);
  const TransitionMatrix a({{0.9, 0.1}, {0.2, 0.8}});
  CHECK(a.is_stochastic());
  CHECK(a.strictly_positive());
  CHECK(a.irreducible());
  CHECK_FALSE(TransitionMatrix::identity(2).irreducible());
}

TEST_CASE("seal stationary distribution and residency") {
  const auto a = presets::seal_three_state().a;
  CHECK_FALSE(a.strictly_positive());
  CHECK(a.irreducible());
  const auto d = stationary(a);
  // Eigenvector of A^T for eigenvalue 1 (numpy.linalg.eig).
  CHECK(d[0] == doctest::Approx(0.26364682).epsilon(1e-7));
  CHECK(d[1] == doctest::Approx(0.50782978).epsilon(1e-7));
  CHECK(d[2] == doctest::Approx(0.2285234).epsilon(1e-7));
  // Activity budget to three decimals.
  CHECK(std::abs(d[0] - 0.264) < 5e-3);
  CHECK(std::abs(d[1] - 0.508) < 5e-3);
  CHECK(std::abs(d[2] - 0.228) < 5e-3);

  const auto r = residency(a, 66.0);
  CHECK(std::abs(r.steps[0] - 3.48) < 0.01);
  CHECK(std::abs(r.steps[1] - 4.93) < 0.01);
  CHECK(std::abs(r.steps[2] - 8.33) < 0.01);
  CHECK(format_duration(r.minutes[0]) == "3 hr 50 min");
  CHECK(format_duration(r.minutes[1]) == "5 hr 25 min");
  CHECK(format_duration(r.minutes[2]) == "9 hr 10 min");
}

TEST_CASE("elk stationary distribution") {
  const auto d = stationary(presets::elk_two_state().a);
  CHECK(d[0] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("stationary distribution agrees with power iteration") {
  Rng rng(5);
  for (std::size_t k = 1; k <= 5; ++k) {
    for (int rep = 0; rep < 10; ++rep) {
      const auto m = oracle::random_model(k, rng);
      const auto d = stationary(m.a);
      const auto ref = oracle::stationary(m);
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(d[i] == doctest::Approx(ref[i]).epsilon(1e-10));
        sum += d[i];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("reducible and absorbing chains are rejected") {
  CHECK_THROWS_AS(stationary(TransitionMatrix({{1.0, 0.0}, {0.3, 0.7}})), Error);
  CHECK_THROWS_AS(residency(TransitionMatrix({{1.0, 0.0}, {0.3, 0.7}}), 60.0), Error);
  try {
    stationary(TransitionMatrix::identity(3));
    FAIL("expected ReducibleChain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ReducibleChain);
  }
}

TEST_CASE("durations and reversion levels") {
  CHECK(format_duration(30.0) == "30 min");
  CHECK(format_duration(60.0) == "1 hr 0 min");
  CHECK(format_duration(229.7) == "3 hr 50 min");
  const auto r = unstandardize_reversion(1.0, 2.10, 66.0);
  CHECK(r.km_per_step == doctest::Approx(2.10));
  CHECK(r.km_per_hour == doctest::Approx(1.909090909).epsilon(1e-8));
  const auto it = interpret(presets::seal_three_state().a, 66.0, {0.398, 1.291, 2.074}, 2.10);
  REQUIRE(it.reversion_levels_km);
  CHECK((*it.reversion_levels_km)[1] == doctest::Approx(1.291 * 2.10));
  CHECK_FALSE(it.strictly_positive);
}
