#ifndef SOFICLAB_ERRORS_HPP
#define SOFICLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace soficlab {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// An enumeration or table would exceed its configured size budget.
class BudgetExceeded : public Error {
public:
  using Error::Error;
};

// The measure expression lacks the structure needed for an exact query.
class CapabilityMissing : public Error {
public:
  using Error::Error;
};

// Rejection sampling from a conditioned measure ran out of attempts.
class RejectionBudgetExhausted : public Error {
public:
  using Error::Error;
};

class UnsupportedGroup : public Error {
public:
  using Error::Error;
};

class WindowMismatch : public Error {
public:
  using Error::Error;
};

// No partition cell falls inside the requested mass band.
class EmptyBand : public Error {
public:
  using Error::Error;
};

class ContainmentViolated : public Error {
public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace soficlab

#endif  // SOFICLAB_ERRORS_HPP
