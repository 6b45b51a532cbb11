#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace brw {

// Opaque vertex label. Scenarios document how labels map to geometry.
using VertexId = std::int64_t;

// Particle or child count.
using Count = std::uint64_t;

// One value in [0,1] per model vertex, indexed like BrwModel::vertices().
using FieldVector = std::vector<double>;

inline constexpr Count kUnboundedCap = std::numeric_limits<Count>::max();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: laws, parameters, vectors of the wrong shape.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Unknown scenario or a parameter set a scenario rejects.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

// A simulated population outgrew its hard cap.
class PopulationOverflow : public Error {
 public:
  using Error::Error;
};

// An internal invariant failed. Never expected in correct operation.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace brw
