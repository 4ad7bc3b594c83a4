#pragma once

#include <stdexcept>
#include <string>

namespace rallyforge {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ball flight.
struct NeverLands : Error { using Error::Error; };
struct NoFeasibleTrajectory : Error { using Error::Error; };
struct NoIntersection : Error { using Error::Error; };

// Clip database.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t failures = 1) : Error(what), count(failures) {}
  std::size_t count;
};
struct ValidationError : Error {
  ValidationError(const std::string& what, std::size_t failures = 1) : Error(what), count(failures) {}
  std::size_t count;
};
struct GenerationError : Error { using Error::Error; };

// Behavior and search.
struct InsufficientData : Error { using Error::Error; };
struct NoData : Error { using Error::Error; };
struct BallEndedEarly : Error { using Error::Error; };
struct EmptyCandidateSet : Error { using Error::Error; };

// Engine and service.
struct NoServeClips : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace rallyforge
