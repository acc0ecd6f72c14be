#pragma once

#include <stdexcept>
#include <string>

namespace kramers {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The Kronecker system or the friction matrix is numerically singular.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

class HorizonTooShort : public Error {
 public:
  using Error::Error;
};

class BoundaryTooClose : public Error {
 public:
  using Error::Error;
};

class DomainMismatch : public Error {
 public:
  using Error::Error;
};

class ParameterDomain : public Error {
 public:
  using Error::Error;
};

class SamplingFailure : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

}  // namespace kramers
