#pragma once

#include <vector>

#include "autocalib/errors.hpp"
#include "autocalib/geometry.hpp"
#include "autocalib/tracking.hpp"
#include "autocalib/types.hpp"

namespace autocalib {

struct SpeedMeasurement {
  int track_id = 0;
  double speed_kmh = 0.0;
  size_t sample_count = 0;  // N: reference points used
  int tau = 0;
  double first_t = 0.0;
  double last_t = 0.0;
  std::vector<double> pair_speeds_kmh;  // diagnostic: per-pair instantaneous speeds
};

constexpr int kDefaultSpeedTau = 5;

/// Median of tau-spaced instantaneous ground speeds of the track's reference
/// points, scaled to meters by the calibration and reported in km/h. The
/// median of an even count is the lower-middle element. Pairs with either
/// endpoint on the horizon are skipped.
inline SpeedMeasurement measure_speed(const Track& track, const CameraCalibration& calib,
                                      int tau = kDefaultSpeedTau) {
  if (!calib.scale) throw MissingScale();
  const auto& rps = track.reference_points;
  if (tau < 1) throw Error("tau must be at least 1");
  if (rps.size() < static_cast<size_t>(tau) + 1) throw TooShortTrack();
  for (size_t i = 1; i < rps.size(); ++i)
    if (!(rps[i].first > rps[i - 1].first))
      throw Error("reference point timestamps must be strictly increasing");

  SpeedMeasurement m;
  m.track_id = track.id;
  m.tau = tau;
  m.sample_count = rps.size();
  m.first_t = rps.front().first;
  m.last_t = rps.back().first;

  const double lambda = *calib.scale;
  size_t skipped = 0;
  for (size_t i = 0; i + static_cast<size_t>(tau) < rps.size(); ++i) {
    const auto& [t0, p0] = rps[i];
    const auto& [t1, p1] = rps[i + static_cast<size_t>(tau)];
    try {
      const GroundPoint g0 = project_to_road(p0, calib);
      const GroundPoint g1 = project_to_road(p1, calib);
      const double mps = lambda * (g1 - g0).norm() / (t1 - t0);
      m.pair_speeds_kmh.push_back(mps * 3.6);
    } catch (const HorizonPoint&) {
      ++skipped;
    }
  }
  if (m.pair_speeds_kmh.empty()) {
    if (skipped > 0) throw HorizonPoint();
    throw TooShortTrack();
  }
  m.speed_kmh = median_lower(m.pair_speeds_kmh);
  return m;
}

}  // namespace autocalib
