#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "carhmm/error.hpp"
#include "carhmm/geo.hpp"

using namespace carhmm;
using namespace carhmm::geo;

TEST_CASE("great-circle distance") {
  CHECK(great_circle_km({12.5, -40.0}, {12.5, -40.0}) == 0.0);
  CHECK(great_circle_km({0, 0}, {0, 1}) == doctest::Approx(111.1949).epsilon(1e-5));
  CHECK(great_circle_km({0, 0}, {0, 180}) == doctest::Approx(20015.09).epsilon(1e-6));
  // Chord-length oracle on unit vectors.
  CHECK(great_circle_km({10, 10}, {20, 20}) == doctest::Approx(1544.75756102961).epsilon(1e-12));
}

TEST_CASE("distance is symmetric and satisfies the triangle inequality") {
  const LatLon a{44.1, -60.2}, b{44.3, -59.7}, c{43.8, -60.9};
  CHECK(great_circle_km(a, b) == doctest::Approx(great_circle_km(b, a)).epsilon(1e-14));
  CHECK(great_circle_km(a, c) <= great_circle_km(a, b) + great_circle_km(b, c) + 1e-12);
}

TEST_CASE("forward bearing") {
  CHECK(forward_bearing({0, 0}, {1, 0}) == doctest::Approx(0.0));
  CHECK(forward_bearing({0, 0}, {0, 1}) == doctest::Approx(kPi / 2));
  CHECK(forward_bearing({0, 0}, {-1, 0}) == doctest::Approx(kPi));
  // Tangent-plane oracle.
  CHECK(forward_bearing({10, 10}, {20, 20}) == doctest::Approx(0.7472464607618725).epsilon(1e-12));
  CHECK_THROWS_AS(forward_bearing({3, 4}, {3, 4}), Error);
}

TEST_CASE("deflection angle sign convention") {
  CHECK(deflection_angle({0, 0}, {0, 1}, {0, 2}) == doctest::Approx(0.0).epsilon(1e-9));
  // East then north is a counter-clockwise (left) turn.
  CHECK(deflection_angle({0, -1}, {0, 0}, {1, 0}) == doctest::Approx(-kPi / 2).epsilon(1e-9));
  CHECK(deflection_angle({0, -1}, {0, 0}, {-1, 0}) == doctest::Approx(kPi / 2).epsilon(1e-9));
  CHECK(std::abs(deflection_angle({0, 0}, {0, 1}, {0, 0})) == doctest::Approx(kPi).epsilon(1e-9));
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  for (double x = -20.0; x < 20.0; x += 0.37) {
    const double w = wrap_angle(x);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::cos(w) == doctest::Approx(std::cos(x)).epsilon(1e-12));
  }
}

TEST_CASE("coordinate validity") {
  CHECK(is_valid({90, 180}));
  CHECK_FALSE(is_valid({90.5, 0}));
  CHECK_FALSE(is_valid({0, -180.1}));
  CHECK_FALSE(is_valid({std::nan(""), 0}));
}
