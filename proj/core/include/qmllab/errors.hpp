#pragma once

#include <stdexcept>

namespace qml {

// Error taxonomy shared across the library. The CLI maps the first group
// (bad configuration or input) to exit code 1 and everything else to 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct InputError : Error { using Error::Error; };

struct ShapeError : Error { using Error::Error; };
struct StateError : Error { using Error::Error; };
struct ParamBindingError : Error { using Error::Error; };
struct UnsupportedGateError : Error { using Error::Error; };

}  // namespace qml
