#pragma once

#include <stdexcept>
#include <string>

namespace autocalib {

/// Base class of all recoverable errors raised by the toolkit.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Eq-style focal computation got a radicand <= 0: the vanishing point pair
/// implies an imaginary focal length.
struct NonPositiveRadicand : Error {
  NonPositiveRadicand() : Error("vanishing point pair implies imaginary focal length") {}
  explicit NonPositiveRadicand(const std::string& m) : Error(m) {}
};

struct DegenerateVPs : Error {
  DegenerateVPs() : Error("vanishing points are degenerate (coincident or invalid)") {}
  explicit DegenerateVPs(const std::string& m) : Error(m) {}
};

/// Image point lies on (or numerically at) the horizon; it cannot be
/// projected onto the road plane.
struct HorizonPoint : Error {
  HorizonPoint() : Error("image point on the horizon; road projection undefined") {}
  explicit HorizonPoint(const std::string& m) : Error(m) {}
};

struct MissingScale : Error {
  MissingScale() : Error("calibration has no scene scale") {}
};

struct DegenerateLine : Error {
  DegenerateLine() : Error("line observation with all-zero coefficients") {}
};

struct EmptyAccumulator : Error {
  EmptyAccumulator() : Error("no lines accumulated") {}
};

struct AllMasked : Error {
  AllMasked() : Error("mask rejects every accumulator cell with votes") {}
};

struct DegeneratePatch : Error {
  DegeneratePatch() : Error("patch has no gradient energy") {}
};

struct InsufficientData : Error {
  InsufficientData() : Error("not enough observations") {}
  explicit InsufficientData(const std::string& m) : Error(m) {}
};

struct DegenerateHull : Error {
  DegenerateHull() : Error("hull is degenerate (fewer than 3 vertices or collinear)") {}
};

struct TangentFailure : Error {
  TangentFailure() : Error("vanishing point lies inside the hull; tangents undefined") {}
};

struct BehindCamera : Error {
  BehindCamera() : Error("geometry projects behind the camera") {}
};

struct NoModelsMatched : Error {
  NoModelsMatched() : Error("no track matches a known wireframe model class") {}
};

struct EmptySamples : Error {
  EmptySamples() : Error("no scale samples retained") {}
};

struct DegenerateFit : Error {
  DegenerateFit() : Error("regression input is degenerate") {}
};

struct TooShortTrack : Error {
  TooShortTrack() : Error("track too short for speed measurement") {}
};

struct EmptyMatches : Error {
  EmptyMatches() : Error("no matched track / ground truth pairs") {}
};

struct EmptyMarkings : Error {
  EmptyMarkings() : Error("marking set is empty") {}
};

struct ParallelLines : Error {
  ParallelLines() : Error("line bundle is rank deficient (parallel lines)") {}
};

struct EmptyFeasibleGrid : Error {
  EmptyFeasibleGrid() : Error("no grid candidate satisfies the focal constraints") {}
};

struct ConfigInvalid : Error {
  ConfigInvalid() : Error("invalid scene configuration") {}
  explicit ConfigInvalid(const std::string& m) : Error(m) {}
};

/// File contents do not match the documented interchange schema.
struct SchemaError : Error {
  explicit SchemaError(const std::string& m) : Error(m) {}
};

}  // namespace autocalib
