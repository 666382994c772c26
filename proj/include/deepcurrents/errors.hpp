#pragma once

#include <stdexcept>
#include <string>

namespace deepcurrents {

/// Malformed input file (OBJ, JSON, checkpoint).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that parses but violates a precondition (closed target mesh,
/// empty boundary, inconsistent flags). Mapped to exit code 2 by the CLI.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or parameters during training. Mapped to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace deepcurrents
