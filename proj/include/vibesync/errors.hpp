#pragma once

#include <stdexcept>
#include <string>

namespace vibesync {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad graph or partition structure.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double re, double im)
      : Error(what), eig_re(re), eig_im(im) {}
  double eig_re;
  double eig_im;
};

class DesignError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vibesync
