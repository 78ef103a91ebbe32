#pragma once

#include <stdexcept>
#include <string>

namespace pjs {

/// Raised when an argument violates a documented precondition
/// (dimension mismatch, non-finite values, bad configuration).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An affine state that cannot be used to warp (non-positive scale, singular map).
class InvalidState : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Particle weights or occlusion evidence carry no information (all zero).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset or results files missing / malformed.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pjs
