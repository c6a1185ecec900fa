#pragma once

#include <stdexcept>
#include <string>

namespace srcid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or unparseable config/spec input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Corrupt or incompatible file on disk.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A loss term or tensor became NaN/Inf during training.
class NumericalError : public Error {
 public:
  NumericalError(std::string term, const std::string& what)
      : Error(what), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

}  // namespace srcid
