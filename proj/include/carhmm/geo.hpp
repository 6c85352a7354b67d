#pragma once

#include <numbers>

namespace carhmm::geo {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kPi = std::numbers::pi;

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
};

bool is_valid(const LatLon& p) noexcept;

/// Wraps an angle into (-pi, pi]; -pi maps to pi.
double wrap_angle(double theta) noexcept;

/// Haversine distance on a sphere of radius kEarthRadiusKm.
double great_circle_km(const LatLon& a, const LatLon& b) noexcept;

/// Initial great-circle bearing from a to b in (-pi, pi], measured from north,
/// positive clockwise. Throws CoincidentPoints when a == b.
double forward_bearing(const LatLon& a, const LatLon& b);

/// Turn at p1 between legs p0->p1 and p1->p2. Zero is straight ahead,
/// positive is a clockwise turn.
double deflection_angle(const LatLon& p0, const LatLon& p1, const LatLon& p2);

}  // namespace carhmm::geo
