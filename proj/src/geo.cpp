#include "carhmm/geo.hpp"

#include <algorithm>
#include <cmath>

#include "carhmm/error.hpp"

namespace carhmm::geo {

namespace {

constexpr double kDegToRad = kPi / 180.0;

}  // namespace

bool is_valid(const LatLon& p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

double wrap_angle(double theta) noexcept {
  double r = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double great_circle_km(const LatLon& a, const LatLon& b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double forward_bearing(const LatLon& a, const LatLon& b) {
  if (a.lat == b.lat && a.lon == b.lon) {
    throw Error(ErrorCode::CoincidentPoints, "bearing between identical points");
  }
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) -
                   std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  return wrap_angle(std::atan2(y, x));
}

double deflection_angle(const LatLon& p0, const LatLon& p1, const LatLon& p2) {
  return wrap_angle(forward_bearing(p1, p2) - forward_bearing(p0, p1));
}

}  // namespace carhmm::geo
