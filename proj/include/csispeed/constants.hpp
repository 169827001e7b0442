#pragma once

namespace csispeed {

/// Displacement, in wavelengths, at the first peak of the differential squared transverse ACF.
inline constexpr double kPeakDistanceWavelengths = 0.54;

}  // namespace csispeed
