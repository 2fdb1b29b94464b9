#pragma once

// WGS-84 Universal Transverse Mercator projection (forward and inverse),
// fixed to the northern hemisphere. The dataset's planar frame is zone 32;
// the zone is a parameter so other regions can reuse the projection, but a
// single dataset never mixes zones.

namespace vtp {

struct LatLon {
  double lat = 0.0;  // degrees, north positive
  double lon = 0.0;  // degrees, east positive
};

struct UtmCoord {
  double easting = 0.0;   // meters (false easting 500000 applied)
  double northing = 0.0;  // meters from the equator
};

inline constexpr int kDefaultUtmZone = 32;

// Central meridian of a UTM zone, degrees east.
double utm_central_meridian_deg(int zone);

// Forward projection. Throws DomainError when zone is not in [1, 60],
// latitude is outside [0, 84] (northern hemisphere only), or longitude
// deviates more than 9 degrees from the zone's central meridian.
UtmCoord project_utm(double lat_deg, double lon_deg, int zone = kDefaultUtmZone);

// Inverse projection. Throws DomainError when zone is not in [1, 60] or the
// coordinates are outside the plausible northern-hemisphere envelope.
LatLon invert_utm(double easting, double northing, int zone = kDefaultUtmZone);

}  // namespace vtp
