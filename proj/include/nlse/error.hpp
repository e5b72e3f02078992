#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlse {

/// Base of every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad shape, non-positive
/// physical quantity, out-of-range label, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The transverse window is too small to hold the input beam without clipping.
class WindowTooSmall : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// The split-step integration produced non-finite values.
class BlowUp : public Error {
 public:
  BlowUp(std::size_t step, const std::string& what)
      : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Reading or writing a dataset, manifest or exchange file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file parsed but its content does not match the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlse
