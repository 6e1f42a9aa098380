#pragma once

#include <stdexcept>
#include <string>

namespace deckchase {

// Base for every error raised by the library. Callers that only need a
// diagnostic can catch this; tests match on the concrete subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class CovarianceDegenerate : public Error {
 public:
  using Error::Error;
};

class SingularInnovation : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class InsufficientCoverage : public Error {
 public:
  using Error::Error;
};

class EmptySelection : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace deckchase
