#pragma once

#include <stdexcept>
#include <string>

namespace lpds {

/// Domain errors raised by the library: invalid parameters, support
/// mismatches, solver failures. CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lpds
