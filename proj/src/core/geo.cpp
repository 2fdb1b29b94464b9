#include "core/geo.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace vtp {
namespace {

constexpr double kA = 6378137.0;               // WGS-84 semi-major axis, meters
constexpr double kF = 1.0 / 298.257223563;     // WGS-84 flattening
constexpr double kE2 = kF * (2.0 - kF);        // first eccentricity squared
constexpr double kEp2 = kE2 / (1.0 - kE2);     // second eccentricity squared
constexpr double kK0 = 0.9996;                 // central-meridian scale
constexpr double kFalseEasting = 500000.0;
constexpr double kPi = 3.141592653589793238462643383279502884;

double deg2rad(double d) { return d * (kPi / 180.0); }
double rad2deg(double r) { return r * (180.0 / kPi); }

void require_zone(int zone) {
  if (zone < 1 || zone > 60)
    throw DomainError("utm zone " + std::to_string(zone) + " outside [1, 60]");
}

// Meridian arc length from the equator (series in the first eccentricity).
double meridian_arc(double phi) {
  const double e2 = kE2, e4 = e2 * e2, e6 = e4 * e2;
  return kA * ((1.0 - e2 / 4.0 - 3.0 * e4 / 64.0 - 5.0 * e6 / 256.0) * phi -
               (3.0 * e2 / 8.0 + 3.0 * e4 / 32.0 + 45.0 * e6 / 1024.0) * std::sin(2.0 * phi) +
               (15.0 * e4 / 256.0 + 45.0 * e6 / 1024.0) * std::sin(4.0 * phi) -
               (35.0 * e6 / 3072.0) * std::sin(6.0 * phi));
}

}  // namespace

double utm_central_meridian_deg(int zone) {
  require_zone(zone);
  return static_cast<double>(zone) * 6.0 - 183.0;
}

UtmCoord project_utm(double lat_deg, double lon_deg, int zone) {
  const double lon0_deg = utm_central_meridian_deg(zone);
  if (!(lat_deg >= 0.0 && lat_deg <= 84.0))
    throw DomainError("latitude " + std::to_string(lat_deg) +
                      " outside supported range [0, 84] (northern hemisphere)");
  const double dlon = lon_deg - lon0_deg;
  if (!(std::fabs(dlon) <= 9.0))
    throw DomainError("longitude " + std::to_string(lon_deg) + " deviates more than 9 deg from zone " +
                      std::to_string(zone) + " central meridian " + std::to_string(lon0_deg));

  const double phi = deg2rad(lat_deg);
  const double sin_phi = std::sin(phi), cos_phi = std::cos(phi);
  const double tan_phi = sin_phi / cos_phi;

  const double nu = kA / std::sqrt(1.0 - kE2 * sin_phi * sin_phi);
  const double T = tan_phi * tan_phi;
  const double C = kEp2 * cos_phi * cos_phi;
  const double A = deg2rad(dlon) * cos_phi;
  const double A2 = A * A, A3 = A2 * A, A4 = A2 * A2, A5 = A4 * A, A6 = A4 * A2;
  const double M = meridian_arc(phi);

  const double x =
      kK0 * nu *
      (A + (1.0 - T + C) * A3 / 6.0 + (5.0 - 18.0 * T + T * T + 72.0 * C - 58.0 * kEp2) * A5 / 120.0);
  const double y =
      kK0 * (M + nu * tan_phi *
                     (A2 / 2.0 + (5.0 - T + 9.0 * C + 4.0 * C * C) * A4 / 24.0 +
                      (61.0 - 58.0 * T + T * T + 600.0 * C - 330.0 * kEp2) * A6 / 720.0));

  UtmCoord out;
  out.easting = x + kFalseEasting;
  out.northing = y;
  return out;
}

LatLon invert_utm(double easting, double northing, int zone) {
  const double lon0 = deg2rad(utm_central_meridian_deg(zone));
  if (!(easting > 0.0 && easting < 1.0e6))
    throw DomainError("easting " + std::to_string(easting) + " outside plausible range (0, 1e6)");
  // 84 deg of meridian arc, scaled, is ~9.33e6 m; anything beyond is not a
  // northern-hemisphere UTM northing.
  if (!(northing >= 0.0 && northing <= 9.34e6))
    throw DomainError("northing " + std::to_string(northing) +
                      " outside plausible northern-hemisphere range [0, 9.34e6]");

  const double x = easting - kFalseEasting;
  const double M = northing / kK0;
  const double e2 = kE2, e4 = e2 * e2, e6 = e4 * e2;
  const double mu = M / (kA * (1.0 - e2 / 4.0 - 3.0 * e4 / 64.0 - 5.0 * e6 / 256.0));
  const double sqrt1me2 = std::sqrt(1.0 - kE2);
  const double e1 = (1.0 - sqrt1me2) / (1.0 + sqrt1me2);
  const double e1_2 = e1 * e1, e1_3 = e1_2 * e1, e1_4 = e1_2 * e1_2;

  // Footpoint latitude.
  const double phi1 = mu + (3.0 * e1 / 2.0 - 27.0 * e1_3 / 32.0) * std::sin(2.0 * mu) +
                      (21.0 * e1_2 / 16.0 - 55.0 * e1_4 / 32.0) * std::sin(4.0 * mu) +
                      (151.0 * e1_3 / 96.0) * std::sin(6.0 * mu) +
                      (1097.0 * e1_4 / 512.0) * std::sin(8.0 * mu);

  const double sin1 = std::sin(phi1), cos1 = std::cos(phi1);
  const double tan1 = sin1 / cos1;
  const double C1 = kEp2 * cos1 * cos1;
  const double T1 = tan1 * tan1;
  const double den = 1.0 - kE2 * sin1 * sin1;
  const double N1 = kA / std::sqrt(den);
  const double R1 = kA * (1.0 - kE2) / (den * std::sqrt(den));
  const double D = x / (N1 * kK0);
  const double D2 = D * D, D3 = D2 * D, D4 = D2 * D2, D5 = D4 * D, D6 = D4 * D2;

  const double phi =
      phi1 - (N1 * tan1 / R1) *
                 (D2 / 2.0 - (5.0 + 3.0 * T1 + 10.0 * C1 - 4.0 * C1 * C1 - 9.0 * kEp2) * D4 / 24.0 +
                  (61.0 + 90.0 * T1 + 298.0 * C1 + 45.0 * T1 * T1 - 252.0 * kEp2 - 3.0 * C1 * C1) *
                      D6 / 720.0);
  const double lam =
      lon0 + (D - (1.0 + 2.0 * T1 + C1) * D3 / 6.0 +
              (5.0 - 2.0 * C1 + 28.0 * T1 - 3.0 * C1 * C1 + 8.0 * kEp2 + 24.0 * T1 * T1) * D5 / 120.0) /
                 cos1;

  LatLon out;
  out.lat = rad2deg(phi);
  out.lon = rad2deg(lam);
  return out;
}

}  // namespace vtp
