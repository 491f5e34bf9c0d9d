#pragma once

#include <stdexcept>
#include <string>

namespace debiaspi {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration data: missing files, malformed documents, unknown presets.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A contract violation between values that are individually well-formed:
// schema mismatches, weights that do not sum to one, out-of-range arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The generation backend failed: unreachable endpoint, malformed reply,
// drained fixture.
class BackendError : public Error {
 public:
  using Error::Error;
};

// An external attribute classifier failed or produced an unusable label.
class ClassifierError : public Error {
 public:
  using Error::Error;
};

}  // namespace debiaspi
