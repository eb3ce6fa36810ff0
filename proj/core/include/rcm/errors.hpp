#pragma once

#include <stdexcept>
#include <string>

namespace rcm {

// Base of every error raised by the library. category() is the stable name
// the CLI prints on standard error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept = 0;
};

#define RCM_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                       \
   public:                                                          \
    using Error::Error;                                             \
    const char* category() const noexcept override { return #Name; } \
  };

// A Cholesky pivot fell below the scale-relative tolerance.
RCM_DEFINE_ERROR(NotPositiveDefinite)
// An argument lies outside the mathematical domain of the operation.
RCM_DEFINE_ERROR(DomainError)
RCM_DEFINE_ERROR(DimensionMismatch)
RCM_DEFINE_ERROR(IoError)
RCM_DEFINE_ERROR(ParseError)
RCM_DEFINE_ERROR(SchemaError)
RCM_DEFINE_ERROR(MissingValueError)

#undef RCM_DEFINE_ERROR

}  // namespace rcm
