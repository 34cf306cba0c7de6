#ifndef CLOZER_ERROR_HPP_
#define CLOZER_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace clozer {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input violates a documented invariant (bad confidences, malformed file).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Lookup failed: unknown session, missing prediction row, dangling id.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Remote backend could not be reached or spoke the protocol incorrectly.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Operation is not allowed in the current state (quiz protocol).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace clozer

#endif  // CLOZER_ERROR_HPP_
