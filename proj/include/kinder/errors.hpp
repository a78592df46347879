#pragma once

#include <stdexcept>
#include <string>

namespace kinder {

struct KinderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LayoutMismatch : KinderError {
  using KinderError::KinderError;
};

struct GenerationFailed : KinderError {
  using KinderError::KinderError;
};

struct BadVariant : KinderError {
  using KinderError::KinderError;
};

struct InitiationFailed : KinderError {
  using KinderError::KinderError;
};

}  // namespace kinder
