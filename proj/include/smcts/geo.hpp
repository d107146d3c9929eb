#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smcts {

inline constexpr double kEarthRadiusMiles = 3958.8;

// Miles spanned by one degree of latitude (and of longitude at the equator).
inline constexpr double kMilesPerDegree = kEarthRadiusMiles * std::numbers::pi / 180.0;

inline double degrees_to_radians(double deg) {
    return deg * std::numbers::pi / 180.0;
}

/// Great-circle distance between two lat/lon points, in miles.
/// Symmetric and non-negative; zero for identical points.
inline double haversine_miles(double lat1, double lon1, double lat2, double lon2) {
    const double phi1 = degrees_to_radians(lat1);
    const double phi2 = degrees_to_radians(lat2);
    const double dphi = degrees_to_radians(lat2 - lat1);
    const double dlambda = degrees_to_radians(lon2 - lon1);

    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    const double a = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    // Clamp guards against rounding pushing sqrt's argument past 1 for
    // near-antipodal points.
    return 2.0 * kEarthRadiusMiles * std::asin(std::min(1.0, std::sqrt(a)));
}

} // namespace smcts
