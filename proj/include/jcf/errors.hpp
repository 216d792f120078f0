#pragma once

#include <stdexcept>
#include <string>

namespace jcf {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller supplied data or configuration violating a precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// A materialized oracle path would exceed its size guard.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Operation requested in an assignment mode that does not support it.
class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

// Non-finite value detected; `tensor()` names the offending tensor.
class NumericError : public Error {
 public:
  NumericError(std::string tensor, const std::string& what)
      : Error(what), tensor_(std::move(tensor)) {}

  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

}  // namespace jcf
