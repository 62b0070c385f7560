#pragma once

#include <stdexcept>
#include <string>

namespace lodbox {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degenerate or invalid polygon input (collinear ring, <3 vertices, ...).
struct InvalidGeometryError : Error {
  using Error::Error;
};

/// Offsetting produced a self-intersecting polygon; callers fall back to the
/// unbuffered input.
struct BufferError : Error {
  using Error::Error;
};

/// Malformed input file. The message carries the byte or line location.
struct ParseError : Error {
  using Error::Error;
};

/// A height statistic was requested on an empty sample.
struct NoPointsError : Error {
  explicit NoPointsError(const std::string& msg, std::string building_id = {})
      : Error(msg), building_id(std::move(building_id)) {}
  std::string building_id;
};

/// Grid domain violations: non-binary input, tile misalignment, too few
/// points for triangulation.
struct GridError : Error {
  using Error::Error;
};

/// Scene generation or perturbation could not satisfy the request.
struct SynthError : Error {
  using Error::Error;
};

}  // namespace lodbox
