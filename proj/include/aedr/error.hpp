#pragma once

#include <stdexcept>
#include <string>

namespace aedr {

/// Raised for invalid inputs, unreadable files and failed computations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transport or protocol failure talking to an external reconstructor.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace aedr
